#pragma once

#include "goldilocks/dynamics.hpp"
#include "goldilocks/network.hpp"

#include <Eigen/Dense>

#include <vector>

namespace goldilocks {

struct MsdSeries {
    std::vector<double> times;
    std::vector<double> r; // rms displacement from the origin site, in sites
};

struct DiffusionFit {
    double exponent = 0.0;    // slope of log r vs log t
    double coefficient = 0.0; // exp(intercept): r ~ coefficient * t^exponent
    double t_lo = 0.0, t_hi = 0.0;
    double residual = 0.0; // rms log-residual
    int n_points = 0;
};

/// The three localization-length estimators reported side by side, plus the
/// plateau-detector settings that produced the dynamic one.
struct LocalizationEstimate {
    double ell_theory = 0.0;
    double ell_ipr = 0.0;
    double ell_dynamic = 0.0;
    double tau = 0.0; // ps
    bool capped = false;
    double window_lo = 0.0, window_hi = 0.0;
    double slope_threshold = 0.0;
};

/// r(t) = sqrt( sum_i |x_i - x_origin|^2 rho_ii / Tr rho ), loss-renormalized
/// so recombination does not mimic transport. The series truncates at the
/// last snapshot with Tr rho > 1e-9.
MsdSeries msd_curve(const Trajectory& traj, const SiteNetwork& net, int origin);

/// Same observable evaluated from a per-run summary record.
MsdSeries msd_from_summary(const SummarySeries& summary, const SiteNetwork& net, int origin);

/// Least-squares power-law fit of log r vs log t over t in [t_lo, t_hi].
/// Requires at least 10 points with r > 0 in the window.
DiffusionFit fit_diffusion(const MsdSeries& series, double t_lo, double t_hi);

/// Inverse participation ratio 1 / sum_i |psi_i|^4 of a normalized state.
double ipr(const Eigen::VectorXd& psi);

/// Band-averaged IPR localization length over eigenvectors band_lo..band_hi
/// (0-based, inclusive, eigenvalues ascending).
double ipr_localization(const Eigen::MatrixXd& H, int band_lo, int band_hi);

struct DynamicLocalizationOptions {
    double horizon = 0.0;          // observation time T; 0 = 50 / J
    double dt = 0.0;               // 0 = automatic step
    double slope_threshold = 0.1;  // plateau: log-log slope below this on [T/2, T]
    double cap_fraction = 0.25;    // ell >= this * (n-1) counts as boundary-limited
};

/// Coherent spread from `origin` (d = kappa = Gamma = 0): detects the r(t)
/// saturation plateau, reporting ell_dynamic = median r over [T/2, T] and
/// tau = first time r reaches 90% of it. Without a plateau (or when the
/// plateau is boundary-limited) ell_dynamic caps at n-1 and `capped` is set.
/// A single disordered network beats quasi-periodically, so per-seed calls
/// may fail the plateau test; for ensemble statistics average the r(t)
/// curves over seeds first and use localization_from_msd.
LocalizationEstimate dynamic_localization(const SiteNetwork& net, int origin,
                                          const DynamicLocalizationOptions& options = {});

/// Plateau detection on an existing spread curve covering [0, horizon].
/// `n_sites` sets the ell cap.
LocalizationEstimate localization_from_msd(const MsdSeries& series, double horizon, int n_sites,
                                           const DynamicLocalizationOptions& options = {});

} // namespace goldilocks
