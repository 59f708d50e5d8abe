#pragma once

namespace goldilocks {

// Closed-form transport estimators. Units: hbar = 1, energies and rates in
// rad/ps, times in ps, lengths in sites. All preconditions throw
// std::invalid_argument.

/// Microscopic quantities entering the dimensionless transport parameter.
struct MicroParams {
    double alpha = 1.0;    // O(1) prefactor set by the bath spectral density
    double c = 0.0;        // nearest-neighbor noise correlation, in [-1, 1]
    double lambda_reorg;   // reorganization energy / hbar (rad/ps)
    double kT;             // k_B T / hbar (rad/ps)
    double gamma;          // inverse bath correlation time (rad/ps)
    double deltaE;         // band splitting / hbar (rad/ps)

    void validate() const;
};

struct TwoStateResult {
    double p_max;   // peak transfer probability J^2 / Omega^2
    double omega;   // Omega = sqrt(J^2 + delta^2), rad/ps
    double t_peak;  // pi / (2 Omega), ps
};

/// Lambda = d * ell / (2 J). Transport is optimal near 1.
double lambda_param(double d, double ell, double J);

/// Localized-regime variant: Lambda = d / (2 Omega), Omega^2 = J^2 + delta^2.
double lambda_localized(double d, double J, double delta);

/// Lambda from microscopic parameters: alpha (1-c) lambda kT / (gamma deltaE).
double lambda_micro(const MicroParams& p);

/// Transient localization length (J / delta_omega)^2, clamped to [1, n-1].
/// Zero disorder returns the system-size cap n-1.
double theory_localization(double J, double delta_omega, int n);

/// Time to traverse ell coherently: tau = ell / (2 J).
double localization_time(double J, double ell);

/// Dephasing rate at the transport optimum: d* = 2 J / ell.
double optimal_dephasing(double J, double ell);

/// Mean splitting of the ell exciton states in a band delocalized over ell
/// sites: deltaE = 2 pi J / ell.
double band_splitting(double J, double ell);

/// Peak transfer probability of a detuned two-site system with site energies
/// {0, 2*delta} and coupling J.
TwoStateResult two_state(double J, double delta);

/// High-temperature pure-dephasing rate alpha (1-c) lambda kT / gamma.
double decoherence_rate(double alpha, double c, double lambda_reorg, double kT, double gamma);

/// Spread at the optimal dephasing rate: r(t) = sqrt(2 t J ell), in sites.
double optimal_spread(double t, double J, double ell);

} // namespace goldilocks
