#include "goldilocks/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace goldilocks {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

} // namespace

void MicroParams::validate() const {
    require(alpha > 0.0, "MicroParams: alpha must be > 0");
    require(c >= -1.0 && c <= 1.0, "MicroParams: c must be in [-1, 1]");
    require(lambda_reorg > 0.0, "MicroParams: lambda_reorg must be > 0");
    require(kT > 0.0, "MicroParams: kT must be > 0");
    require(gamma > 0.0, "MicroParams: gamma must be > 0");
    require(deltaE > 0.0, "MicroParams: deltaE must be > 0");
}

double lambda_param(double d, double ell, double J) {
    require(d > 0.0 && ell > 0.0 && J > 0.0, "lambda_param: inputs must be > 0");
    return d * ell / (2.0 * J);
}

double lambda_localized(double d, double J, double delta) {
    require(d >= 0.0, "lambda_localized: d must be >= 0");
    require(J > 0.0 || delta > 0.0, "lambda_localized: J or delta must be > 0");
    return d / (2.0 * std::hypot(J, delta));
}

double lambda_micro(const MicroParams& p) {
    p.validate();
    // Written as d_micro / deltaE so the identity lambda_micro * deltaE =
    // decoherence_rate holds exactly in floating point.
    return decoherence_rate(p.alpha, p.c, p.lambda_reorg, p.kT, p.gamma) / p.deltaE;
}

double theory_localization(double J, double delta_omega, int n) {
    require(J > 0.0, "theory_localization: J must be > 0");
    require(delta_omega >= 0.0, "theory_localization: delta_omega must be >= 0");
    require(n >= 2, "theory_localization: n must be >= 2");
    const double cap = static_cast<double>(n - 1);
    if (delta_omega == 0.0) return cap;
    const double ratio = J / delta_omega;
    return std::clamp(ratio * ratio, 1.0, cap);
}

double localization_time(double J, double ell) {
    require(J > 0.0 && ell > 0.0, "localization_time: inputs must be > 0");
    return ell / (2.0 * J);
}

double optimal_dephasing(double J, double ell) {
    require(J > 0.0 && ell > 0.0, "optimal_dephasing: inputs must be > 0");
    return 2.0 * J / ell;
}

double band_splitting(double J, double ell) {
    require(J > 0.0 && ell > 0.0, "band_splitting: inputs must be > 0");
    return 2.0 * std::numbers::pi * J / ell;
}

TwoStateResult two_state(double J, double delta) {
    require(J > 0.0, "two_state: J must be > 0");
    const double omega = std::hypot(J, delta);
    return TwoStateResult{
        .p_max = (J * J) / (omega * omega),
        .omega = omega,
        .t_peak = std::numbers::pi / (2.0 * omega),
    };
}

double decoherence_rate(double alpha, double c, double lambda_reorg, double kT, double gamma) {
    require(gamma > 0.0, "decoherence_rate: gamma must be > 0");
    require(c >= -1.0 && c <= 1.0, "decoherence_rate: c must be in [-1, 1]");
    return alpha * (1.0 - c) * lambda_reorg * kT / gamma;
}

double optimal_spread(double t, double J, double ell) {
    require(t > 0.0 && J > 0.0 && ell > 0.0, "optimal_spread: inputs must be > 0");
    return std::sqrt(2.0 * t * J * ell);
}

} // namespace goldilocks
