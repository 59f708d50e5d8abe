#include "doctest.h"

#include "goldilocks/dynamics.hpp"
#include "goldilocks/network.hpp"
#include "goldilocks/observables.hpp"
#include "goldilocks/rng.hpp"
#include "goldilocks/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace goldilocks;

namespace {

// Hand-built trajectory with constant populations (no dynamics involved).
Trajectory constant_populations(const Eigen::VectorXd& pops, int snapshots) {
    Trajectory traj;
    const int n = static_cast<int>(pops.size());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    rho.diagonal() = pops.cast<std::complex<double>>();
    for (int k = 0; k < snapshots; ++k) {
        traj.times.push_back(0.5 * k + 0.5);
        traj.states.push_back(rho);
        traj.sink_population.push_back(0.0);
        traj.loss_population.push_back(0.0);
    }
    return traj;
}

} // namespace

TEST_SUITE_BEGIN("observables");

TEST_CASE("msd of a stationary walker at the origin is zero") {
    const auto net = build_preset(Topology::Chain, 4, 1.0, {});
    Eigen::VectorXd pops = Eigen::VectorXd::Zero(4);
    pops[1] = 1.0;
    const auto series = msd_curve(constant_populations(pops, 12), net, 1);
    for (double r : series.r) CHECK(r == 0.0);
}

TEST_CASE("msd of the uniform distribution on a 3-chain") {
    const auto net = build_preset(Topology::Chain, 3, 1.0, {});
    const auto series =
        msd_curve(constant_populations(Eigen::VectorXd::Constant(3, 1.0 / 3.0), 12), net, 0);
    for (double r : series.r) CHECK(r == doctest::Approx(1.2910).epsilon(1e-4));
}

TEST_CASE("msd renormalizes away uniform loss") {
    // With loss on, populations shrink but the normalized spread must match
    // the lossless run.
    auto net = build_preset(Topology::Chain, 10, 1.0, {});
    OpenSystemSpec closed;
    OpenSystemSpec lossy;
    lossy.loss_rate = 0.3;
    const auto a = propagate(net, closed, site_density_matrix(10, 4), 3.0, 0.01, 64);
    const auto b = propagate(net, lossy, site_density_matrix(10, 4), 3.0, 0.01, 64);
    const auto ra = msd_curve(a, net, 4);
    const auto rb = msd_curve(b, net, 4);
    REQUIRE(ra.times.size() == rb.times.size());
    for (std::size_t k = 0; k < ra.r.size(); ++k)
        CHECK(ra.r[k] == doctest::Approx(rb.r[k]).epsilon(1e-9));
}

TEST_CASE("msd truncates once the trace vanishes") {
    auto net = build_preset(Topology::Chain, 3, 1.0, {});
    OpenSystemSpec lossy;
    lossy.loss_rate = 10.0;
    const auto traj = propagate(net, lossy, site_density_matrix(3, 0), 6.0, 0.001, 512);
    const auto series = msd_curve(traj, net, 0);
    CHECK(series.times.size() < traj.times.size());
    CHECK(series.times.back() < 2.2); // exp(-10 t) crosses 1e-9 near t = 2.07
}

TEST_CASE("msd_from_summary agrees with msd_curve on the same snapshots") {
    auto net = build_preset(Topology::Chain, 8, 1.0, {2.0, DisorderKind::Uniform, 21});
    net.sink_site = 7;
    OpenSystemSpec env;
    env.dephasing_rate = 0.5;
    env.sink_rate = 0.8;
    env.loss_rate = 0.02;
    const auto traj = propagate(net, env, site_density_matrix(8, 0), 15.0, 0.0, 64);

    SummarySeries summary;
    summary.times = traj.times;
    summary.populations.resize(traj.times.size(), 8);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        summary.populations.row(k) = traj.states[k].diagonal().real().transpose();
        summary.trace.push_back(traj.states[k].trace().real());
        summary.sink.push_back(traj.sink_population[k]);
        summary.loss.push_back(traj.loss_population[k]);
    }

    const auto a = msd_curve(traj, net, 0);
    const auto b = msd_from_summary(summary, net, 0);
    REQUIRE(a.times.size() == b.times.size());
    for (std::size_t k = 0; k < a.r.size(); ++k)
        CHECK(a.r[k] == doctest::Approx(b.r[k]).epsilon(1e-12));
}

TEST_CASE("fit_diffusion recovers synthetic power laws to 1e-10") {
    MsdSeries sqrt_series, linear_series;
    for (int k = 1; k <= 200; ++k) {
        const double t = 0.1 * k;
        sqrt_series.times.push_back(t);
        sqrt_series.r.push_back(3.0 * std::sqrt(t));
        linear_series.times.push_back(t);
        linear_series.r.push_back(2.0 * t);
    }
    const auto a = fit_diffusion(sqrt_series, 0.5, 15.0);
    CHECK(a.exponent == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(a.coefficient == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(a.residual < 1e-12);

    const auto b = fit_diffusion(linear_series, 0.5, 15.0);
    CHECK(b.exponent == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(b.coefficient == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("fit_diffusion input validation") {
    MsdSeries series;
    for (int k = 1; k <= 8; ++k) {
        series.times.push_back(k);
        series.r.push_back(k);
    }
    CHECK_THROWS_AS((void)fit_diffusion(series, 0.5, 100.0), std::invalid_argument); // < 10 pts
    series.times.push_back(9.0);
    series.r.push_back(0.0);
    series.times.push_back(10.0);
    series.r.push_back(10.0);
    CHECK_THROWS_AS((void)fit_diffusion(series, 0.5, 100.0), std::invalid_argument); // r = 0
    CHECK_THROWS_AS((void)fit_diffusion(series, 5.0, 5.0), std::invalid_argument);   // window
}

TEST_CASE("coherent spread on an ordered chain is ballistic with speed sqrt(2) J") {
    const int n = 40;
    const auto net = build_preset(Topology::Chain, n, 1.0, {});
    const auto traj =
        propagate(net, OpenSystemSpec{}, site_density_matrix(n, n / 2), 8.0, 0.0, 512);
    const auto series = msd_curve(traj, net, n / 2);
    const auto fit = fit_diffusion(series, 2.0, 8.0);
    CHECK(fit.exponent == doctest::Approx(1.0).epsilon(0.05));
    CHECK(fit.coefficient == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("ipr of localized and uniform states") {
    Eigen::VectorXd localized = Eigen::VectorXd::Zero(16);
    localized[3] = 1.0;
    CHECK(ipr(localized) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ipr(Eigen::VectorXd::Constant(16, 0.25)) == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(ipr(Eigen::VectorXd::Constant(16, 1.0)) == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("ipr_localization is invariant under site relabeling") {
    auto net = build_preset(Topology::Chain, 10, 1.0, {2.0, DisorderKind::Uniform, 12});
    const Eigen::MatrixXd H = hamiltonian(net);
    Rng rng(3);
    std::vector<int> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 9; i > 0; --i)
        std::swap(perm[i], perm[static_cast<int>(rng.uniform(0.0, i + 1.0))]);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(10, 10);
    for (int i = 0; i < 10; ++i) P(perm[i], i) = 1.0;
    const Eigen::MatrixXd Hp = P * H * P.transpose();
    CHECK(ipr_localization(Hp, 0, 9) == doctest::Approx(ipr_localization(H, 0, 9)).epsilon(1e-9));
}

TEST_CASE("ipr_localization band validation") {
    const auto net = build_preset(Topology::Chain, 6, 1.0, {});
    const auto H = hamiltonian(net);
    CHECK_THROWS_AS((void)ipr_localization(H, 3, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)ipr_localization(H, 0, 6), std::invalid_argument);
    CHECK_THROWS_AS((void)ipr_localization(Eigen::MatrixXd::Ones(3, 4), 0, 1),
                    std::invalid_argument);
}

TEST_CASE("band-averaged ipr length: frozen ensemble oracle and disorder trend") {
    // 32-site chain, J = 1, full band, 50 seeds. The disorder-width scan
    // establishes the monotone trend; the value at width 4 was recorded from
    // this exact ensemble as the oracle (factor-4 envelope).
    auto band_mean = [](double width) {
        double acc = 0.0;
        for (int s = 0; s < 50; ++s) {
            auto net = build_preset(Topology::Chain, 32, 1.0,
                                    {width, DisorderKind::Uniform, static_cast<std::uint64_t>(1000 + s)});
            acc += ipr_localization(hamiltonian(net), 0, 31);
        }
        return acc / 50.0;
    };
    const double at2 = band_mean(2.0);
    const double at4 = band_mean(4.0);
    const double at8 = band_mean(8.0);
    CHECK(at2 > at4);
    CHECK(at4 > at8);
    const double frozen_at4 = 2.5355;
    CHECK(at4 > frozen_at4 / 4.0);
    CHECK(at4 < frozen_at4 * 4.0);
    for (double v : {at2, at4, at8}) {
        CHECK(v >= 1.0);
        CHECK(v <= 32.0);
    }
}

TEST_CASE("plateau detector on synthetic curves") {
    MsdSeries saturating, diffusive;
    for (int k = 1; k <= 2000; ++k) {
        const double t = 0.025 * k;
        saturating.times.push_back(t);
        saturating.r.push_back(5.0 * (1.0 - std::exp(-t)));
        diffusive.times.push_back(t);
        diffusive.r.push_back(std::sqrt(t));
    }
    const auto sat = localization_from_msd(saturating, 50.0, 64);
    CHECK_FALSE(sat.capped);
    CHECK(sat.ell_dynamic == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(sat.tau == doctest::Approx(-std::log(0.1)).epsilon(0.02)); // r hits 4.5 at ln 10

    const auto diff = localization_from_msd(diffusive, 50.0, 64);
    CHECK(diff.capped);
    CHECK(diff.ell_dynamic == 63.0);
}

TEST_CASE("ordered chain reports the boundary cap, not a localization length") {
    const auto net = build_preset(Topology::Chain, 64, 1.0, {});
    const auto est = dynamic_localization(net, 32);
    CHECK(est.capped);
    CHECK(est.ell_dynamic == 63.0);
    CHECK(est.window_lo == doctest::Approx(25.0));
    CHECK(est.window_hi == doctest::Approx(50.0));
    CHECK(est.slope_threshold == 0.1);
}

TEST_CASE("dynamic localization ensemble: finite, below system size, disorder trend,"
          " and tau consistency") {
    const int n = 64, seeds = 20;
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.empty() ? 0.0 : v[v.size() / 2];
    };
    auto ensemble = [&](double width, double& mean_ell, double& median_ratio, int& uncapped) {
        std::vector<double> ells, ratios;
        std::vector<LocalizationEstimate> results(seeds);
#pragma omp parallel for schedule(dynamic)
        for (int s = 0; s < seeds; ++s) {
            auto net = build_preset(Topology::Chain, n, 1.0,
                                    {width, DisorderKind::Uniform,
                                     static_cast<std::uint64_t>(7000 + s)});
            results[s] = dynamic_localization(net, n / 2);
        }
        for (const auto& est : results) {
            if (est.capped) continue;
            ells.push_back(est.ell_dynamic);
            ratios.push_back(est.tau / localization_time(1.0, est.ell_dynamic));
        }
        uncapped = static_cast<int>(ells.size());
        mean_ell = std::accumulate(ells.begin(), ells.end(), 0.0) / std::max(1, uncapped);
        // per-seed 90% crossings are heavy-tailed (the threshold can land
        // inside a beat), so the ensemble consistency uses the median
        median_ratio = median_of(ratios);
    };

    double ell4 = 0, ratio4 = 0, ell8 = 0, ratio8 = 0;
    int ok4 = 0, ok8 = 0;
    ensemble(4.0, ell4, ratio4, ok4);
    ensemble(8.0, ell8, ratio8, ok8);

    // single-seed curves beat quasi-periodically; a fraction failing the
    // plateau test is expected, but not all of them
    CHECK(ok4 >= seeds / 4);
    CHECK(ok8 >= seeds / 4);
    CHECK(ell4 < n - 1);
    CHECK(ell8 < n - 1);
    CHECK(ell4 > ell8); // stronger disorder localizes harder

    // tau ~ ell/2J: holds within a factor 3 at width 8; at width 4 the 90%
    // crossing often waits for a beat, and this exact ensemble recorded a
    // median factor of 4.6 (frozen here as the oracle)
    CHECK(ratio8 > 1.0 / 3.0);
    CHECK(ratio8 < 3.0);
    CHECK(ratio4 > 1.0 / 3.0);
    CHECK(ratio4 < 6.0);
}

TEST_SUITE_END();
