#include "doctest.h"

#include "goldilocks/dynamics.hpp"
#include "goldilocks/errors.hpp"
#include "goldilocks/network.hpp"
#include "goldilocks/rng.hpp"
#include "goldilocks/theory.hpp"

#include "reference_rk4.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

using namespace goldilocks;
using Complex = std::complex<double>;

namespace {

SiteNetwork sink_chain(int n, double J, double width, std::uint64_t seed) {
    auto net = build_preset(Topology::Chain, n, J, {width, DisorderKind::Uniform, seed});
    net.sink_site = n - 1;
    return net;
}

double exponential_rate(const std::vector<double>& t, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (y[k] <= 0.0) continue;
        sx += t[k];
        sy += std::log(y[k]);
        sxx += t[k] * t[k];
        sxy += t[k] * std::log(y[k]);
        ++m;
    }
    return -(sxy - sx * sy / m) / (sxx - sx * sx / m);
}

} // namespace

TEST_SUITE_BEGIN("dynamics");

TEST_CASE("closed dimer Rabi oscillation matches sin^2(Jt)") {
    const auto net = build_preset(Topology::Chain, 2, 1.0, {});
    const OpenSystemSpec env;
    const auto traj = propagate(net, env, site_density_matrix(2, 0), 3.0, 1e-3, 512);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double expect = std::pow(std::sin(traj.times[k]), 2);
        CHECK(traj.states[k](1, 1).real() == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("uniform loss decays the trace as exp(-Gamma t) for any network") {
    auto net = build_preset(Topology::Chain, 3, 1.0, {1.0, DisorderKind::Uniform, 4});
    OpenSystemSpec env;
    env.loss_rate = 0.5;
    env.dephasing_rate = 0.7;
    const auto traj = propagate(net, env, site_density_matrix(3, 0), 10.0, 0.0, 128);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double trace = traj.states[k].trace().real();
        CHECK(trace == doctest::Approx(std::exp(-0.5 * traj.times[k])).epsilon(1e-8));
    }
}

TEST_CASE("strong dephasing relaxes dimer populations at 2 J^2 / d") {
    // Fine-step reference integration (the independent oracle), then an
    // exponential fit to rho_11 - 1/2.
    const auto net = build_preset(Topology::Chain, 2, 1.0, {});
    OpenSystemSpec env;
    env.dephasing_rate = 10.0;
    const auto ref = reference::propagate(net, env, site_density_matrix(2, 0), 40.0, 1e-4, 1000);
    std::vector<double> t, w;
    for (std::size_t k = 0; k < ref.times.size(); ++k) {
        if (ref.times[k] < 5.0) continue;
        t.push_back(ref.times[k]);
        w.push_back(ref.states[k].rho(0, 0).real() - 0.5);
    }
    const double rate = exponential_rate(t, w);
    // 2 J^2 / d = 0.2; the exact slow eigenvalue is 0.20204
    CHECK(rate == doctest::Approx(0.2).epsilon(0.03));
    CHECK(rate == doctest::Approx(0.20204).epsilon(0.005));
}

TEST_CASE("production integrator matches the reference integrator") {
    auto net = sink_chain(5, 1.0, 2.0, 17);
    OpenSystemSpec env;
    env.dephasing_rate = 0.8;
    env.noise_correlation = 0.4;
    env.sink_rate = 1.3;
    env.loss_rate = 0.05;
    const double dt = 0.002;
    const auto traj = propagate(net, env, site_density_matrix(5, 0), 4.0, dt, 2001);
    const auto ref = reference::propagate(net, env, site_density_matrix(5, 0), 4.0, dt, 1);
    REQUIRE(traj.times.size() == ref.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        CHECK((traj.states[k] - ref.states[k].rho).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(traj.sink_population[k] == doctest::Approx(ref.states[k].sink).epsilon(1e-12));
        CHECK(traj.loss_population[k] == doctest::Approx(ref.states[k].loss).epsilon(1e-12));
    }
}

TEST_CASE("dense generator agrees with the production right-hand side") {
    auto net = sink_chain(4, 0.9, 1.5, 23);
    OpenSystemSpec env;
    env.dephasing_rate = 0.6;
    env.noise_correlation = -0.3;
    env.sink_rate = 0.7;
    env.loss_rate = 0.02;
    const Liouvillian L(net, env);
    const auto G = L.dense_generator();

    Rng rng(5);
    Eigen::MatrixXcd rho(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) rho(i, j) = Complex(rng.uniform(), rng.uniform());
    rho = (rho + rho.adjoint()).eval();

    Eigen::MatrixXcd out(4, 4), scratch(4, 4);
    L.apply(rho, out, scratch);
    const Eigen::Map<const Eigen::VectorXcd> vec_rho(rho.data(), 16);
    const Eigen::Map<const Eigen::VectorXcd> vec_out(out.data(), 16);
    CHECK((G * vec_rho - vec_out).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trace + sink + loss is conserved at every snapshot") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(0.0, 6.0));
        auto net = sink_chain(n, rng.uniform(0.2, 2.0), rng.uniform(0.0, 3.0), 100 + trial);
        OpenSystemSpec env;
        env.dephasing_rate = rng.uniform(0.0, 20.0);
        env.noise_correlation = rng.uniform(-1.0, 1.0);
        env.sink_rate = rng.uniform(0.0, 2.0);
        env.loss_rate = rng.uniform(0.0, 0.1);
        const auto traj = propagate(net, env, site_density_matrix(n, 0), 20.0, 0.0, 64);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            const double total = traj.states[k].trace().real() + traj.sink_population[k] +
                                 traj.loss_population[k];
            CHECK(std::abs(total - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("snapshots stay Hermitian and positive within tolerance") {
    auto net = sink_chain(6, 1.0, 2.0, 31);
    OpenSystemSpec env;
    env.dephasing_rate = 2.0;
    env.sink_rate = 1.0;
    env.loss_rate = 0.01;
    const auto traj = propagate(net, env, site_density_matrix(6, 0), 30.0, 0.0, 64);
    for (const auto& rho : traj.states) {
        CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("closed evolution conserves energy") {
    auto net = build_preset(Topology::Chain, 8, 1.0, {1.0, DisorderKind::Uniform, 5});
    const OpenSystemSpec env;
    const Eigen::MatrixXcd H = hamiltonian(net).cast<Complex>();
    const auto traj = propagate(net, env, site_density_matrix(8, 0), 100.0, 0.0, 16);
    const double e0 = (H * traj.states.front()).trace().real();
    for (const auto& rho : traj.states) {
        const double e = (H * rho).trace().real();
        CHECK(std::abs(e - e0) / std::abs(e0) < 1e-6);
    }
}

TEST_CASE("perfectly correlated noise leaves the dimer coherence undamped") {
    const auto net = build_preset(Topology::Chain, 2, 1.0, {});
    OpenSystemSpec env;
    env.dephasing_rate = 5.0;
    env.noise_correlation = 1.0;
    const auto traj = propagate(net, env, site_density_matrix(2, 0), 100.0, 0.0125, 4096);
    double peak = 0.0;
    for (std::size_t k = traj.times.size() * 9 / 10; k < traj.times.size(); ++k)
        peak = std::max(peak, std::abs(traj.states[k](0, 1)));
    const double damping_rate = -std::log(peak / 0.5) / 100.0;
    CHECK(damping_rate < 1e-8);
}

TEST_CASE("run_to_completion: lossless absorption reaches unit efficiency") {
    auto net = sink_chain(2, 1.0, 0.0, 0);
    OpenSystemSpec env;
    env.sink_rate = 1.0;
    const auto out = run_to_completion(net, env, site_density_matrix(2, 0), 1e5);
    CHECK(out.eta == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(out.converged);
    CHECK(std::abs(out.eta + out.loss + out.final_trace - 1.0) < 1e-6);
    CHECK(out.transfer_time > 0.0);
}

TEST_CASE("run_to_completion: dominant loss starves the sink") {
    auto net = sink_chain(2, 1.0, 0.0, 0);
    OpenSystemSpec env;
    env.sink_rate = 1.0;
    env.loss_rate = 100.0;
    const auto out = run_to_completion(net, env, site_density_matrix(2, 0), 1e5);
    CHECK(out.eta < 0.05);
    CHECK(out.loss > 0.95);
}

TEST_CASE("run_to_completion: dephasing assists transport through disorder") {
    // Seed-averaged 8-site disordered chain: eta at the matched dephasing rate
    // beats the fully coherent run.
    const int seeds = 100;
    const double d_star = optimal_dephasing(1.0, theory_localization(1.0, 2.0, 8));
    double eta0 = 0.0, eta_star = 0.0;
    for (int s = 0; s < seeds; ++s) {
        auto net = sink_chain(8, 1.0, 2.0, 4000 + s);
        OpenSystemSpec env;
        env.sink_rate = 1.0;
        env.loss_rate = 0.001;
        env.dephasing_rate = 0.0;
        eta0 += run_to_completion(net, env, site_density_matrix(8, 0), 1e5).eta;
        env.dephasing_rate = d_star;
        eta_star += run_to_completion(net, env, site_density_matrix(8, 0), 1e5).eta;
    }
    CHECK(eta_star / seeds > eta0 / seeds);
}

TEST_CASE("spectral and RK4 paths agree") {
    Rng rng(909);
    for (int trial = 0; trial < 5; ++trial) {
        auto net = sink_chain(4 + trial, 1.0, rng.uniform(0.0, 3.0), 600 + trial);
        OpenSystemSpec env;
        env.dephasing_rate = rng.uniform(0.0, 5.0);
        env.noise_correlation = rng.uniform(-0.5, 0.5);
        env.sink_rate = rng.uniform(0.5, 2.0);
        env.loss_rate = rng.uniform(0.001, 0.05);
        const auto rho0 = site_density_matrix(net.n_sites, 0);
        RunOptions opts;
        const auto spectral = run_to_completion(net, env, rho0, 1e5, opts);
        opts.force_rk4 = true;
        const auto rk4 = run_to_completion(net, env, rho0, 1e5, opts);
        REQUIRE(spectral.method == PropagationMethod::Spectral);
        REQUIRE(rk4.method == PropagationMethod::Rk4);
        CHECK(spectral.eta == doctest::Approx(rk4.eta).epsilon(1e-7));
        CHECK(spectral.loss == doctest::Approx(rk4.loss).epsilon(1e-7));
        CHECK(spectral.transfer_time == doctest::Approx(rk4.transfer_time).epsilon(1e-4));
    }
}

TEST_CASE("halving the step changes eta below 1e-6") {
    auto net = sink_chain(4, 1.0, 1.0, 3);
    OpenSystemSpec env;
    env.dephasing_rate = 1.0;
    env.sink_rate = 1.0;
    env.loss_rate = 0.01;
    RunOptions opts;
    opts.force_rk4 = true;
    opts.verify_dt = true;
    const auto out = run_to_completion(net, env, site_density_matrix(4, 0), 1e4, opts);
    CHECK(out.dt_check_delta < 1e-6);
}

TEST_CASE("simulated efficiency is scale covariant") {
    const double s = 10.0;
    auto net = sink_chain(5, 1.0, 2.0, 8);
    OpenSystemSpec env;
    env.dephasing_rate = 1.5;
    env.sink_rate = 1.0;
    env.loss_rate = 0.01;
    const auto base = run_to_completion(net, env, site_density_matrix(5, 0), 1e5);

    auto scaled_net = net;
    scaled_net.site_energies *= s;
    scaled_net.couplings *= s;
    scaled_net.preset_coupling *= s;
    OpenSystemSpec scaled_env;
    scaled_env.dephasing_rate = s * env.dephasing_rate;
    scaled_env.sink_rate = s * env.sink_rate;
    scaled_env.loss_rate = s * env.loss_rate;
    const auto scaled = run_to_completion(scaled_net, scaled_env, site_density_matrix(5, 0), 1e4);
    CHECK(scaled.eta == doctest::Approx(base.eta).epsilon(1e-8));
    CHECK(scaled.transfer_time * s == doctest::Approx(base.transfer_time).epsilon(1e-6));
}

TEST_CASE("two_state peak probability matches coherent dynamics") {
    for (double ratio : {0.0, 1.0, 5.0}) {
        const double J = 1.0, delta = ratio * J;
        auto net = build_preset(Topology::Chain, 2, J, {});
        net.site_energies << 0.0, 2.0 * delta;
        const auto expected = two_state(J, delta);
        const double t_end = 2.0 * expected.t_peak;
        const auto traj =
            propagate(net, OpenSystemSpec{}, site_density_matrix(2, 0), t_end, 2e-4, 1 << 20);
        double peak = 0.0;
        for (const auto& rho : traj.states) peak = std::max(peak, rho(1, 1).real());
        CHECK(peak == doctest::Approx(expected.p_max).epsilon(1e-4));
    }
}

TEST_CASE("input validation and failure modes") {
    auto net = sink_chain(3, 1.0, 0.0, 0);
    OpenSystemSpec env;
    env.sink_rate = 1.0;

    Eigen::MatrixXcd bad = site_density_matrix(3, 0);
    bad(0, 0) = 2.0; // trace 2
    CHECK_THROWS_AS((void)propagate(net, env, bad, 1.0), std::invalid_argument);

    Eigen::MatrixXcd nonpsd = Eigen::MatrixXcd::Zero(3, 3);
    nonpsd(0, 0) = 1.5;
    nonpsd(1, 1) = -0.5;
    CHECK_THROWS_AS((void)propagate(net, env, nonpsd, 1.0), std::invalid_argument);

    Eigen::MatrixXcd nonherm = site_density_matrix(3, 0);
    nonherm(0, 1) = Complex(0.1, 0.0);
    CHECK_THROWS_AS((void)propagate(net, env, nonherm, 1.0), std::invalid_argument);

    OpenSystemSpec closed;
    CHECK_THROWS_AS((void)run_to_completion(net, closed, site_density_matrix(3, 0), 1e3),
                    std::invalid_argument);

    OpenSystemSpec bad_env;
    bad_env.noise_correlation = 1.5;
    CHECK_THROWS_AS((void)propagate(net, bad_env, site_density_matrix(3, 0), 1.0),
                    std::invalid_argument);

    OpenSystemSpec sink_no_site;
    sink_no_site.sink_rate = 1.0;
    auto no_sink = build_preset(Topology::Chain, 3, 1.0, {});
    CHECK_THROWS_AS((void)propagate(no_sink, sink_no_site, site_density_matrix(3, 0), 1.0),
                    std::invalid_argument);

    // A wildly oversized step makes the state blow up; the failure carries time
    OpenSystemSpec stiff;
    stiff.dephasing_rate = 50.0;
    stiff.sink_rate = 1.0;
    CHECK_THROWS_AS((void)propagate(net, stiff, site_density_matrix(3, 0), 1e4, 5.0),
                    NumericalFailure);
}

TEST_CASE("non-converged runs carry a warning but still return") {
    auto net = build_preset(Topology::Chain, 2, 1.0, {});
    OpenSystemSpec env;
    env.loss_rate = 0.001; // no sink: population can only leak slowly
    const auto out = run_to_completion(net, env, site_density_matrix(2, 0), 100.0);
    CHECK_FALSE(out.converged);
    CHECK(out.warning.find("Tr rho") != std::string::npos);
    CHECK(out.eta == 0.0);
    CHECK(std::isnan(out.transfer_time));
    CHECK(out.final_trace == doctest::Approx(std::exp(-0.1)).epsilon(1e-6));
}

TEST_SUITE_END();
