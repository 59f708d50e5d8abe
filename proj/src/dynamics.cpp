#include "goldilocks/dynamics.hpp"

#include "goldilocks/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace goldilocks {

namespace {

using Complex = std::complex<double>;

constexpr double kTraceFloor = 1e-6;
constexpr double kNonConvergedTrace = 0.01;

void validate_rho0(const Eigen::MatrixXcd& rho0, int n) {
    if (rho0.rows() != n || rho0.cols() != n)
        throw std::invalid_argument("rho0 dimension does not match the network");
    if (!rho0.allFinite()) throw std::invalid_argument("rho0 must be finite");
    if ((rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument("rho0 must be Hermitian");
    if (std::abs(rho0.trace().real() - 1.0) > 1e-8 || std::abs(rho0.trace().imag()) > 1e-10)
        throw std::invalid_argument("rho0 must have unit trace");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho0, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument("rho0 must be positive semidefinite");
}

/// (exp(z) - 1) / lambda with z = lambda * t, stable near lambda = 0.
Complex integrated_exp(Complex lambda, double t) {
    const Complex z = lambda * t;
    if (std::abs(z) < 1e-6) return t * (1.0 + z / 2.0 + z * z / 6.0);
    return (std::exp(z) - 1.0) / lambda;
}

} // namespace

void OpenSystemSpec::validate() const {
    const bool finite = std::isfinite(dephasing_rate) && std::isfinite(noise_correlation) &&
                        std::isfinite(sink_rate) && std::isfinite(loss_rate);
    if (!finite) throw std::invalid_argument("environment rates must be finite");
    if (dephasing_rate < 0.0) throw std::invalid_argument("dephasing_rate must be >= 0");
    if (sink_rate < 0.0) throw std::invalid_argument("sink_rate must be >= 0");
    if (loss_rate < 0.0) throw std::invalid_argument("loss_rate must be >= 0");
    if (noise_correlation < -1.0 || noise_correlation > 1.0)
        throw std::invalid_argument("noise_correlation must be in [-1, 1]");
}

Liouvillian::Liouvillian(const SiteNetwork& net, const OpenSystemSpec& env) {
    net.validate();
    env.validate();
    n_ = net.n_sites;
    kappa_ = env.sink_rate;
    gamma_ = env.loss_rate;
    sink_ = net.sink_site.value_or(-1);
    if (kappa_ > 0.0 && sink_ < 0)
        throw std::invalid_argument("sink_rate > 0 but the network has no sink site");

    const Eigen::MatrixXd H = hamiltonian(net);
    std::vector<Eigen::Triplet<Complex>> entries;
    entries.reserve(static_cast<std::size_t>(n_) * 4);
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i)
            if (H(i, j) != 0.0) entries.emplace_back(i, j, Complex(H(i, j), 0.0));
    hamiltonian_.resize(n_, n_);
    hamiltonian_.setFromTriplets(entries.begin(), entries.end());

    const double d = env.dephasing_rate;
    decay_ = Eigen::MatrixXd::Constant(n_, n_, gamma_);
    for (int m = 0; m < n_; ++m) {
        for (int k = 0; k < n_; ++k) {
            if (m == k) continue;
            const double c = net.are_neighbors(m, k) ? env.noise_correlation : 0.0;
            decay_(m, k) += 2.0 * d * (1.0 - c);
        }
    }
    if (sink_ >= 0 && kappa_ > 0.0) {
        decay_.row(sink_).array() += kappa_ / 2.0;
        decay_.col(sink_).array() += kappa_ / 2.0;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const double spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
    max_rate_ = std::max({spectral_radius, decay_.maxCoeff(), kappa_, gamma_});
}

void Liouvillian::apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out,
                        Eigen::MatrixXcd& scratch) const {
    scratch.noalias() = hamiltonian_ * rho;
    out = Complex(0.0, -1.0) * (scratch - scratch.adjoint());
    const double* g = decay_.data();
    const Complex* r = rho.data();
    Complex* o = out.data();
    const long m = static_cast<long>(n_) * n_;
    for (long k = 0; k < m; ++k) o[k] -= g[k] * r[k];
}

double Liouvillian::sink_flux(const Eigen::MatrixXcd& rho) const {
    return sink_ >= 0 ? kappa_ * rho(sink_, sink_).real() : 0.0;
}

double Liouvillian::loss_flux(const Eigen::MatrixXcd& rho) const {
    return gamma_ * rho.trace().real();
}

Eigen::MatrixXcd Liouvillian::dense_generator() const {
    const Eigen::MatrixXcd H(hamiltonian_);
    const long dim = static_cast<long>(n_) * n_;
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(dim, dim);
    const Complex mi(0.0, -1.0);
    const Complex pi_(0.0, 1.0);
    for (int q = 0; q < n_; ++q) {
        for (int p = 0; p < n_; ++p) {
            const long col = p + static_cast<long>(q) * n_;
            for (int i = 0; i < n_; ++i) G(i + static_cast<long>(q) * n_, col) += mi * H(i, p);
            for (int j = 0; j < n_; ++j) G(p + static_cast<long>(j) * n_, col) += pi_ * H(q, j);
            G(col, col) -= decay_(p, q);
        }
    }
    return G;
}

Rk4Integrator::Rk4Integrator(const Liouvillian& liouvillian) : liouvillian_(&liouvillian) {
    const int n = liouvillian.dim();
    k1_.resize(n, n);
    k2_.resize(n, n);
    k3_.resize(n, n);
    k4_.resize(n, n);
    stage_.resize(n, n);
    scratch_.resize(n, n);
}

void Rk4Integrator::step(AugmentedState& state, double dt) {
    const Liouvillian& L = *liouvillian_;

    L.apply(state.rho, k1_, scratch_);
    const double sk1 = L.sink_flux(state.rho);
    const double sl1 = L.loss_flux(state.rho);

    stage_ = state.rho + (dt / 2.0) * k1_;
    L.apply(stage_, k2_, scratch_);
    const double sk2 = L.sink_flux(stage_);
    const double sl2 = L.loss_flux(stage_);

    stage_ = state.rho + (dt / 2.0) * k2_;
    L.apply(stage_, k3_, scratch_);
    const double sk3 = L.sink_flux(stage_);
    const double sl3 = L.loss_flux(stage_);

    stage_ = state.rho + dt * k3_;
    L.apply(stage_, k4_, scratch_);
    const double sk4 = L.sink_flux(stage_);
    const double sl4 = L.loss_flux(stage_);

    state.rho += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    state.sink += (dt / 6.0) * (sk1 + 2.0 * sk2 + 2.0 * sk3 + sk4);
    state.loss += (dt / 6.0) * (sl1 + 2.0 * sl2 + 2.0 * sl3 + sl4);
    state.time += dt;
}

Eigen::MatrixXcd site_density_matrix(int n, int site) {
    if (site < 0 || site >= n) throw std::invalid_argument("site index out of range");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    rho(site, site) = 1.0;
    return rho;
}

Trajectory propagate(const SiteNetwork& net, const OpenSystemSpec& env,
                     const Eigen::MatrixXcd& rho0, double t_end, double dt,
                     int max_snapshots) {
    const Liouvillian L(net, env);
    validate_rho0(rho0, L.dim());
    if (t_end <= 0.0) throw std::invalid_argument("t_end must be > 0");
    if (dt < 0.0) throw std::invalid_argument("dt must be > 0 (or 0 for automatic)");
    if (dt == 0.0) dt = L.default_dt();
    if (max_snapshots < 2) max_snapshots = 2;

    const long steps = std::max<long>(1, static_cast<long>(std::ceil(t_end / dt - 1e-12)));
    const long stride = std::max<long>(1, (steps + max_snapshots - 1) / max_snapshots);

    Trajectory traj;
    AugmentedState state{rho0, 0.0, 0.0, 0.0};
    Rk4Integrator integrator(L);

    auto record = [&]() {
        traj.times.push_back(state.time);
        traj.states.push_back(state.rho);
        traj.sink_population.push_back(state.sink);
        traj.loss_population.push_back(state.loss);
    };
    record();

    for (long k = 1; k <= steps; ++k) {
        integrator.step(state, dt);
        const double trace = state.rho.trace().real();
        if (!std::isfinite(trace) || (k % 64 == 0 && !state.rho.allFinite()))
            throw NumericalFailure("integration produced a non-finite state", state.time);
        if (trace < -1e-6 || trace > 1.0 + 1e-3)
            throw NumericalFailure("integration left the physical trace range (unstable step?)",
                                   state.time);
        if (k % stride == 0 || k == steps) record();
    }
    return traj;
}

SpectralPropagator::SpectralPropagator(const Liouvillian& liouvillian,
                                       const Eigen::MatrixXcd& rho0) {
    n_ = liouvillian.dim();
    kappa_ = liouvillian.sink_rate();
    gamma_ = liouvillian.loss_rate();
    const long dim = static_cast<long>(n_) * n_;

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(liouvillian.dense_generator());
    if (es.info() != Eigen::Success) return;
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();

    const Eigen::Map<const Eigen::VectorXcd> r0(rho0.data(), dim);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(eigenvectors_);
    weights_ = lu.solve(r0);
    const double residual = (eigenvectors_ * weights_ - r0).norm();
    if (!(residual <= 1e-8 * std::max(1.0, r0.norm()))) return;

    trace_modes_.setZero(dim);
    for (int i = 0; i < n_; ++i)
        trace_modes_ += eigenvectors_.row(i + static_cast<long>(i) * n_).transpose();
    trace_modes_ = trace_modes_.cwiseProduct(weights_);

    sink_modes_.setZero(dim);
    const int s = liouvillian.sink_site();
    if (s >= 0)
        sink_modes_ =
            eigenvectors_.row(s + static_cast<long>(s) * n_).transpose().cwiseProduct(weights_);

    const double trace0 = rho0.trace().real();
    if (std::abs(trace_at(0.0) - trace0) > 1e-9) return;

    const double rate = std::max(liouvillian.max_rate(), 1e-12);
    for (double factor : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
        if (std::abs(trace_at(factor / rate) + sink_at(factor / rate) + loss_at(factor / rate) -
                     trace0) > 1e-8)
            return;
    }
    healthy_ = true;
}

double SpectralPropagator::trace_at(double t) const {
    Complex acc = 0.0;
    for (long k = 0; k < eigenvalues_.size(); ++k)
        acc += trace_modes_[k] * std::exp(eigenvalues_[k] * t);
    return acc.real();
}

double SpectralPropagator::sink_at(double t) const {
    if (kappa_ == 0.0) return 0.0;
    Complex acc = 0.0;
    for (long k = 0; k < eigenvalues_.size(); ++k)
        acc += sink_modes_[k] * integrated_exp(eigenvalues_[k], t);
    return kappa_ * acc.real();
}

double SpectralPropagator::loss_at(double t) const {
    if (gamma_ == 0.0) return 0.0;
    Complex acc = 0.0;
    for (long k = 0; k < eigenvalues_.size(); ++k)
        acc += trace_modes_[k] * integrated_exp(eigenvalues_[k], t);
    return gamma_ * acc.real();
}

Eigen::MatrixXcd SpectralPropagator::rho_at(double t) const {
    Eigen::VectorXcd amplitudes(eigenvalues_.size());
    for (long k = 0; k < eigenvalues_.size(); ++k)
        amplitudes[k] = weights_[k] * std::exp(eigenvalues_[k] * t);
    const Eigen::VectorXcd vec = eigenvectors_ * amplitudes;
    return Eigen::Map<const Eigen::MatrixXcd>(vec.data(), n_, n_);
}

double SpectralPropagator::bookkeeping_residual(double t) const {
    return std::abs(trace_at(t) + sink_at(t) + loss_at(t) - trace_at(0.0));
}

namespace {

struct RunPaths {
    TransportOutcome outcome;
    bool ok = false;
};

RunPaths spectral_run(const Liouvillian& L, const Eigen::MatrixXcd& rho0, double t_cap,
                      const RunOptions& options) {
    RunPaths result;
    SpectralPropagator sp(L, rho0);
    if (!sp.healthy()) return result;

    double t_end = t_cap;
    if (sp.trace_at(t_cap) < kTraceFloor) {
        double lo = 0.0, hi = t_cap;
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, t_cap); ++it) {
            const double mid = 0.5 * (lo + hi);
            (sp.trace_at(mid) > kTraceFloor ? lo : hi) = mid;
        }
        t_end = hi;
    }

    TransportOutcome& out = result.outcome;
    out.method = PropagationMethod::Spectral;
    out.t_end = t_end;
    out.eta = sp.sink_at(t_end);
    out.loss = sp.loss_at(t_end);
    out.final_trace = sp.trace_at(t_end);

    if (out.final_trace > kNonConvergedTrace) {
        out.converged = false;
        out.warning = "t_max reached with Tr rho = " + std::to_string(out.final_trace);
    }

    if (out.eta > 1e-12) {
        const double target = out.eta / 2.0;
        double lo = 0.0, hi = t_end;
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, t_end); ++it) {
            const double mid = 0.5 * (lo + hi);
            (sp.sink_at(mid) < target ? lo : hi) = mid;
        }
        out.transfer_time = 0.5 * (lo + hi);
    } else {
        out.transfer_time = std::numeric_limits<double>::quiet_NaN();
    }

    // Bookkeeping identity must hold along the whole evolution, not just at
    // the summary grid, before the spectral result is trusted.
    for (int k = 0; k <= 16; ++k) {
        if (sp.bookkeeping_residual(t_end * k / 16.0) > 1e-6) return result;
    }

    const int points = std::max(2, options.summary_points);
    const int n = L.dim();
    out.summary.times.resize(points);
    out.summary.populations.resize(points, n);
    out.summary.sink.resize(points);
    out.summary.loss.resize(points);
    out.summary.trace.resize(points);
    for (int k = 0; k < points; ++k) {
        const double t = t_end * k / (points - 1);
        const Eigen::MatrixXcd rho = sp.rho_at(t);
        out.summary.times[k] = t;
        out.summary.populations.row(k) = rho.diagonal().real().transpose();
        out.summary.sink[k] = sp.sink_at(t);
        out.summary.loss[k] = sp.loss_at(t);
        out.summary.trace[k] = rho.trace().real();
    }

    result.ok = true;
    return result;
}

TransportOutcome rk4_run(const Liouvillian& L, const Eigen::MatrixXcd& rho0, double t_cap,
                         const RunOptions& options, bool want_summary) {
    const double dt = options.dt > 0.0 ? options.dt : L.default_dt();
    const long steps_cap = std::max<long>(1, static_cast<long>(std::ceil(t_cap / dt - 1e-12)));
    const int points = std::max(2, options.summary_points);
    const long stride = std::max<long>(1, steps_cap / (points - 1));

    AugmentedState state{rho0, 0.0, 0.0, 0.0};
    Rk4Integrator integrator(L);

    TransportOutcome out;
    out.method = PropagationMethod::Rk4;
    out.dt_used = dt;

    std::vector<double> sum_t, sum_sink, sum_loss, sum_trace;
    std::vector<Eigen::VectorXd> sum_pops;
    auto record_summary = [&]() {
        sum_t.push_back(state.time);
        sum_pops.push_back(state.rho.diagonal().real());
        sum_sink.push_back(state.sink);
        sum_loss.push_back(state.loss);
        sum_trace.push_back(state.rho.trace().real());
    };
    if (want_summary) record_summary();

    // (t, sink) history for the transfer-time crossing; the crossing happens
    // at sink = eta/2 <= 0.5, so recording stops past that.
    std::vector<double> hist_t{0.0}, hist_sink{0.0};
    long hist_stride = 1;
    bool hist_active = true;

    double trace = state.rho.trace().real();
    long k = 0;
    while (k < steps_cap && trace >= kTraceFloor) {
        integrator.step(state, dt);
        ++k;
        trace = state.rho.trace().real();
        if (!std::isfinite(trace) || (k % 64 == 0 && !state.rho.allFinite()))
            throw NumericalFailure("integration produced a non-finite state", state.time);
        if (trace < -1e-6 || trace > 1.0 + 1e-3)
            throw NumericalFailure("integration left the physical trace range (unstable step?)",
                                   state.time);
        if (hist_active && k % hist_stride == 0) {
            hist_t.push_back(state.time);
            hist_sink.push_back(state.sink);
            if (state.sink > 0.5001) hist_active = false;
            if (hist_t.size() > (1u << 21)) { // thin to bound memory
                std::vector<double> t2, s2;
                t2.reserve(hist_t.size() / 2);
                s2.reserve(hist_t.size() / 2);
                for (std::size_t i = 0; i < hist_t.size(); i += 2) {
                    t2.push_back(hist_t[i]);
                    s2.push_back(hist_sink[i]);
                }
                hist_t.swap(t2);
                hist_sink.swap(s2);
                hist_stride *= 2;
            }
        }
        if (want_summary && (k % stride == 0)) record_summary();
    }
    if (want_summary && (sum_t.empty() || sum_t.back() != state.time)) record_summary();
    if (hist_t.back() != state.time) {
        hist_t.push_back(state.time);
        hist_sink.push_back(state.sink);
    }

    out.t_end = state.time;
    out.eta = state.sink;
    out.loss = state.loss;
    out.final_trace = trace;
    if (trace >= kTraceFloor && trace > kNonConvergedTrace) {
        out.converged = false;
        out.warning = "t_max reached with Tr rho = " + std::to_string(trace);
    }

    if (out.eta > 1e-12) {
        const double target = out.eta / 2.0;
        out.transfer_time = hist_t.back();
        for (std::size_t i = 1; i < hist_t.size(); ++i) {
            if (hist_sink[i] >= target) {
                const double s0 = hist_sink[i - 1], s1 = hist_sink[i];
                const double f = s1 > s0 ? (target - s0) / (s1 - s0) : 1.0;
                out.transfer_time = hist_t[i - 1] + f * (hist_t[i] - hist_t[i - 1]);
                break;
            }
        }
    } else {
        out.transfer_time = std::numeric_limits<double>::quiet_NaN();
    }

    if (want_summary) {
        const int m = static_cast<int>(sum_t.size());
        out.summary.times = std::move(sum_t);
        out.summary.sink = std::move(sum_sink);
        out.summary.loss = std::move(sum_loss);
        out.summary.trace = std::move(sum_trace);
        out.summary.populations.resize(m, L.dim());
        for (int i = 0; i < m; ++i) out.summary.populations.row(i) = sum_pops[i].transpose();
    }
    return out;
}

} // namespace

TransportOutcome run_to_completion(const SiteNetwork& net, const OpenSystemSpec& env,
                                   const Eigen::MatrixXcd& rho0, double t_max,
                                   const RunOptions& options) {
    const Liouvillian L(net, env);
    validate_rho0(rho0, L.dim());
    if (!(env.sink_rate > 0.0) && !(env.loss_rate > 0.0))
        throw std::invalid_argument(
            "run_to_completion needs a termination channel (sink_rate or loss_rate > 0)");
    if (t_max <= 0.0) throw std::invalid_argument("t_max must be > 0");

    double t_cap = t_max;
    if (env.loss_rate > 0.0) t_cap = std::min(t_cap, 20.0 / env.loss_rate);

    if (L.dim() <= options.spectral_max_sites && !options.force_rk4) {
        RunPaths spectral = spectral_run(L, rho0, t_cap, options);
        if (spectral.ok) return spectral.outcome;
    }

    TransportOutcome out = rk4_run(L, rho0, t_cap, options, true);
    if (options.verify_dt) {
        RunOptions half = options;
        half.dt = out.dt_used / 2.0;
        half.verify_dt = false;
        const TransportOutcome check = rk4_run(L, rho0, t_cap, half, false);
        out.dt_check_delta = std::abs(out.eta - check.eta);
        if (out.dt_check_delta > 1e-6) {
            out.warning += (out.warning.empty() ? "" : "; ");
            out.warning += "step-halving changed eta by " + std::to_string(out.dt_check_delta);
        }
    }
    return out;
}

} // namespace goldilocks
