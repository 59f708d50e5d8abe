#include "goldilocks/observables.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goldilocks {

namespace {

constexpr double kMsdTraceFloor = 1e-9;

double rms_displacement(const SiteNetwork& net, int origin, const Eigen::VectorXd& populations,
                        double trace) {
    double acc = 0.0;
    for (int i = 0; i < net.n_sites; ++i) {
        const double dist = net.distance(i, origin);
        acc += dist * dist * populations[i];
    }
    return std::sqrt(std::max(0.0, acc / trace));
}

} // namespace

MsdSeries msd_curve(const Trajectory& traj, const SiteNetwork& net, int origin) {
    if (origin < 0 || origin >= net.n_sites)
        throw std::invalid_argument("msd_curve: origin out of range");
    MsdSeries series;
    series.times.reserve(traj.times.size());
    series.r.reserve(traj.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double trace = traj.states[k].trace().real();
        if (trace <= kMsdTraceFloor) break; // vanished trace: truncate
        const Eigen::VectorXd populations = traj.states[k].diagonal().real();
        series.times.push_back(traj.times[k]);
        series.r.push_back(rms_displacement(net, origin, populations, trace));
    }
    return series;
}

MsdSeries msd_from_summary(const SummarySeries& summary, const SiteNetwork& net, int origin) {
    if (origin < 0 || origin >= net.n_sites)
        throw std::invalid_argument("msd_from_summary: origin out of range");
    MsdSeries series;
    for (std::size_t k = 0; k < summary.times.size(); ++k) {
        if (summary.trace[k] <= kMsdTraceFloor) break;
        series.times.push_back(summary.times[k]);
        series.r.push_back(rms_displacement(net, origin, summary.populations.row(k).transpose(),
                                            summary.trace[k]));
    }
    return series;
}

DiffusionFit fit_diffusion(const MsdSeries& series, double t_lo, double t_hi) {
    if (!(t_lo < t_hi)) throw std::invalid_argument("fit_diffusion: need t_lo < t_hi");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const double t = series.times[k];
        if (t < t_lo || t > t_hi) continue;
        if (!(series.r[k] > 0.0))
            throw std::invalid_argument("fit_diffusion: r must be > 0 inside the window");
        if (!(t > 0.0)) continue;
        lx.push_back(std::log(t));
        ly.push_back(std::log(series.r[k]));
    }
    const int m = static_cast<int>(lx.size());
    if (m < 10) throw std::invalid_argument("fit_diffusion: fewer than 10 points in the window");

    double sx = 0.0, sy = 0.0;
    for (int k = 0; k < m; ++k) {
        sx += lx[k];
        sy += ly[k];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < m; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_diffusion: degenerate time window");

    DiffusionFit fit;
    fit.exponent = sxy / sxx;
    fit.coefficient = std::exp(my - fit.exponent * mx);
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.n_points = m;
    double rss = 0.0;
    for (int k = 0; k < m; ++k) {
        const double e = ly[k] - (my + fit.exponent * (lx[k] - mx));
        rss += e * e;
    }
    fit.residual = std::sqrt(rss / m);
    return fit;
}

double ipr(const Eigen::VectorXd& psi) {
    const double norm2 = psi.squaredNorm();
    if (norm2 <= 0.0) throw std::invalid_argument("ipr: zero vector");
    const double quartic = psi.array().square().square().sum();
    return norm2 * norm2 / quartic;
}

double ipr_localization(const Eigen::MatrixXd& H, int band_lo, int band_hi) {
    if (H.rows() != H.cols()) throw std::invalid_argument("ipr_localization: H must be square");
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("ipr_localization: H must be symmetric");
    const int n = static_cast<int>(H.rows());
    if (band_lo < 0 || band_hi >= n || band_lo > band_hi)
        throw std::invalid_argument("ipr_localization: empty or out-of-range band");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double acc = 0.0;
    for (int k = band_lo; k <= band_hi; ++k) acc += ipr(es.eigenvectors().col(k));
    return acc / (band_hi - band_lo + 1);
}

LocalizationEstimate dynamic_localization(const SiteNetwork& net, int origin,
                                          const DynamicLocalizationOptions& options) {
    if (origin < 0 || origin >= net.n_sites)
        throw std::invalid_argument("dynamic_localization: origin out of range");

    double J = net.preset_coupling;
    if (J <= 0.0) {
        // Custom network: use the mean nonzero coupling magnitude as the scale.
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < net.n_sites; ++i)
            for (int j = i + 1; j < net.n_sites; ++j)
                if (net.couplings(i, j) != 0.0) {
                    sum += std::abs(net.couplings(i, j));
                    ++count;
                }
        if (count == 0) throw std::invalid_argument("dynamic_localization: network has no couplings");
        J = sum / count;
    }

    const double horizon = options.horizon > 0.0 ? options.horizon : 50.0 / J;

    const OpenSystemSpec coherent{}; // d = kappa = Gamma = 0
    SiteNetwork closed = net;
    closed.sink_site.reset();
    const Liouvillian L(closed, coherent);
    const double dt = options.dt > 0.0 ? options.dt : L.default_dt();
    const long steps = std::max<long>(16, static_cast<long>(std::ceil(horizon / dt)));

    AugmentedState state{site_density_matrix(net.n_sites, origin), 0.0, 0.0, 0.0};
    Rk4Integrator integrator(L);
    MsdSeries series;
    series.times.reserve(steps);
    series.r.reserve(steps);
    for (long k = 1; k <= steps; ++k) {
        integrator.step(state, dt);
        const double trace = state.rho.trace().real();
        series.times.push_back(state.time);
        series.r.push_back(
            rms_displacement(net, origin, state.rho.diagonal().real(), std::max(trace, 1e-12)));
    }
    return localization_from_msd(series, horizon, net.n_sites, options);
}

LocalizationEstimate localization_from_msd(const MsdSeries& series, double horizon, int n_sites,
                                           const DynamicLocalizationOptions& options) {
    if (horizon <= 0.0) throw std::invalid_argument("localization_from_msd: horizon must be > 0");
    if (n_sites < 2) throw std::invalid_argument("localization_from_msd: need n_sites >= 2");

    LocalizationEstimate est;
    est.window_lo = horizon / 2.0;
    est.window_hi = horizon;
    est.slope_threshold = options.slope_threshold;

    auto median_r = [&](double lo, double hi) {
        std::vector<double> vals;
        for (std::size_t k = 0; k < series.times.size(); ++k)
            if (series.times[k] >= lo && series.times[k] <= hi) vals.push_back(series.r[k]);
        if (vals.empty()) return 0.0;
        std::sort(vals.begin(), vals.end());
        return vals[vals.size() / 2];
    };

    // Running slope of log r vs log t across the window, estimated from the
    // medians of r over its two halves; medians are insensitive to the
    // residual oscillations of a saturated curve while genuine diffusive or
    // ballistic growth still shows its exponent.
    const double mid = 0.5 * (est.window_lo + est.window_hi);
    const double m1 = median_r(est.window_lo, mid);
    const double m2 = median_r(mid, est.window_hi);
    const double c1 = 0.5 * (est.window_lo + mid);
    const double c2 = 0.5 * (mid + est.window_hi);
    bool plateau = false;
    if (m1 > 0.0 && m2 > 0.0) {
        const double slope = (std::log(m2) - std::log(m1)) / (std::log(c2) - std::log(c1));
        plateau = slope < options.slope_threshold;
    }

    const double median = median_r(est.window_lo, est.window_hi);
    const double cap = static_cast<double>(n_sites - 1);
    if (!plateau || median >= options.cap_fraction * cap) {
        est.capped = true;
        est.ell_dynamic = cap;
    } else {
        est.ell_dynamic = median;
    }

    est.tau = horizon;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        if (series.r[k] >= 0.9 * est.ell_dynamic) {
            est.tau = series.times[k];
            break;
        }
    }
    return est;
}

} // namespace goldilocks
