#pragma once

#include "goldilocks/network.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <string>
#include <vector>

namespace goldilocks {

/// Environment of one open-system run. `dephasing_rate` is the per-site pure
/// dephasing rate d: the coherence between sites m and n decays at
/// 2*d*(1 - c_mn), with c_mn = noise_correlation for nearest neighbors and 0
/// otherwise. In the strong-dephasing dimer this makes populations relax at
/// 2 J^2 / d.
struct OpenSystemSpec {
    double dephasing_rate = 0.0;    // d, 1/ps
    double noise_correlation = 0.0; // c, in [-1, 1]
    double sink_rate = 0.0;         // kappa, 1/ps
    double loss_rate = 0.0;         // Gamma, 1/ps

    void validate() const;
};

/// Generator of the master equation
///   drho/dt = -i[H, rho] - decay .* rho
/// where decay_mn = 2 d (1 - c_mn) [m != n] + Gamma + kappa/2 (d_ms + d_ns).
/// Population removed by the sink and loss terms flows into scalar
/// accumulators via sink_flux / loss_flux; trace + sink + loss is an exact
/// linear invariant of the flow.
class Liouvillian {
public:
    Liouvillian(const SiteNetwork& net, const OpenSystemSpec& env);

    int dim() const { return n_; }
    int sink_site() const { return sink_; }
    double sink_rate() const { return kappa_; }
    double loss_rate() const { return gamma_; }

    /// out = drho/dt. `scratch` must be a distinct n x n matrix.
    void apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out,
               Eigen::MatrixXcd& scratch) const;

    double sink_flux(const Eigen::MatrixXcd& rho) const;
    double loss_flux(const Eigen::MatrixXcd& rho) const;

    /// Fastest rate in the generator; sets the default integration step.
    double max_rate() const { return max_rate_; }
    double default_dt() const { return 0.05 / std::max(max_rate_, 1e-12); }

    /// Dense n^2 x n^2 matrix acting on column-stacked rho.
    Eigen::MatrixXcd dense_generator() const;

private:
    int n_;
    int sink_ = -1;
    double kappa_ = 0.0;
    double gamma_ = 0.0;
    double max_rate_ = 0.0;
    Eigen::SparseMatrix<std::complex<double>> hamiltonian_;
    Eigen::MatrixXd decay_;
};

/// Density matrix plus the sink/loss bookkeeping accumulators.
struct AugmentedState {
    Eigen::MatrixXcd rho;
    double sink = 0.0;
    double loss = 0.0;
    double time = 0.0;
};

/// Classical fixed-step 4th-order Runge-Kutta over the augmented state.
/// Preserves trace + sink + loss exactly (linear invariant of a linear flow).
class Rk4Integrator {
public:
    explicit Rk4Integrator(const Liouvillian& liouvillian);

    void step(AugmentedState& state, double dt);

private:
    const Liouvillian* liouvillian_;
    Eigen::MatrixXcd k1_, k2_, k3_, k4_, stage_, scratch_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> states;
    std::vector<double> sink_population;
    std::vector<double> loss_population;
};

/// Light per-run record: site populations only, on a coarse grid.
struct SummarySeries {
    std::vector<double> times;
    Eigen::MatrixXd populations; // row = snapshot, col = site
    std::vector<double> sink, loss, trace;
};

enum class PropagationMethod { Rk4, Spectral };

struct TransportOutcome {
    double eta = 0.0;           // population delivered to the sink
    double loss = 0.0;          // population lost to recombination
    double final_trace = 0.0;
    double transfer_time = 0.0; // time at which sink reaches eta/2; NaN if eta ~ 0
    double t_end = 0.0;
    bool converged = true;
    std::string warning;
    PropagationMethod method = PropagationMethod::Rk4;
    double dt_used = 0.0;            // 0 for the spectral path
    double dt_check_delta = 0.0;     // |eta(dt) - eta(dt/2)|, if verify_dt was set
    SummarySeries summary;
};

struct RunOptions {
    double dt = 0.0;             // integration step; 0 = 0.05 / max rate
    int spectral_max_sites = 16; // exact propagator for n <= this, RK4 above
    bool force_rk4 = false;
    int summary_points = 257;
    bool verify_dt = false;      // RK4 path only: re-run at dt/2, record eta shift
};

/// Fixed-step RK4 evolution with snapshots on the integration grid
/// (subsampled to at most `max_snapshots`). Throws NumericalFailure with the
/// offending time if the state stops being finite.
Trajectory propagate(const SiteNetwork& net, const OpenSystemSpec& env,
                     const Eigen::MatrixXcd& rho0, double t_end, double dt = 0.0,
                     int max_snapshots = 513);

/// Evolves until Tr rho < 1e-6 or t = min(20/Gamma, t_max) and reports the
/// transport bookkeeping. Requires a termination channel (kappa > 0 or
/// Gamma > 0). Small systems use an exact spectral propagator (eigendecomposed
/// generator, closed-form sink/loss integrals); larger ones step with RK4.
TransportOutcome run_to_completion(const SiteNetwork& net, const OpenSystemSpec& env,
                                   const Eigen::MatrixXcd& rho0, double t_max,
                                   const RunOptions& options = {});

/// Exact evolution of a (small) generator: rho(t) = exp(L t) rho(0) via
/// eigendecomposition, with sink/loss accumulators integrated in closed form.
class SpectralPropagator {
public:
    SpectralPropagator(const Liouvillian& liouvillian, const Eigen::MatrixXcd& rho0);

    /// False when the eigendecomposition failed to reproduce the initial
    /// state or the bookkeeping identity; callers should fall back to RK4.
    bool healthy() const { return healthy_; }

    double trace_at(double t) const;
    double sink_at(double t) const;
    double loss_at(double t) const;
    Eigen::MatrixXcd rho_at(double t) const;

    /// |trace + sink + loss - trace(0)| at time t.
    double bookkeeping_residual(double t) const;

private:
    int n_ = 0;
    double kappa_ = 0.0;
    double gamma_ = 0.0;
    bool healthy_ = false;
    Eigen::VectorXcd eigenvalues_;
    Eigen::MatrixXcd eigenvectors_;
    Eigen::VectorXcd weights_;     // V^-1 vec(rho0)
    Eigen::VectorXcd trace_modes_; // per-mode contribution to Tr rho
    Eigen::VectorXcd sink_modes_;  // per-mode contribution to rho_ss
};

/// Density matrix |site><site|.
Eigen::MatrixXcd site_density_matrix(int n, int site);

} // namespace goldilocks
