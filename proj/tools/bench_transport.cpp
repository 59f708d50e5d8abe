// Benchmark: the same disorder-averaged sweep on the serial reference path
// (1 worker) and on the OpenMP path, verifying byte-identical output, plus a
// single-run comparison of the RK4 stepper against the spectral propagator.

#include "goldilocks/dynamics.hpp"
#include "goldilocks/io.hpp"
#include "goldilocks/sweep.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <cstdlib>

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

int main(int argc, char** argv) {
    using namespace goldilocks;

    int realizations = 24;
    if (argc > 1) realizations = std::atoi(argv[1]);

    SweepConfig cfg;
    cfg.n = 8;
    cfg.J = 1.0;
    cfg.disorder_width = 2.0;
    cfg.base_env.sink_rate = 1.0;
    cfg.base_env.loss_rate = 0.001;
    cfg.axes = {{"d", {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}}};
    cfg.realizations = realizations;
    cfg.master_seed = 20110515;
    cfg.t_max = 1e5;

    std::printf("sweep: %ld points x %d realizations = %ld propagations (8-site chain)\n",
                cfg.n_points(), cfg.realizations, cfg.total_runs());

    auto t0 = std::chrono::steady_clock::now();
    const SweepResult serial = run_sweep(cfg, 1);
    const double t_serial = seconds_since(t0);
    std::printf("serial (1 worker):   %8.3f s\n", t_serial);

#ifdef _OPENMP
    const int workers = omp_get_max_threads();
#else
    const int workers = 1;
#endif
    t0 = std::chrono::steady_clock::now();
    const SweepResult parallel = run_sweep(cfg, workers);
    const double t_parallel = seconds_since(t0);
    std::printf("openmp (%d workers): %8.3f s   speedup %.2fx\n", workers, t_parallel,
                t_serial / t_parallel);

    const bool identical = serial.csv() == parallel.csv();
    std::printf("outputs byte-identical: %s\n", identical ? "yes" : "NO");

    // RK4 stepper vs spectral propagator on one realization.
    const DisorderSpec dis{2.0, DisorderKind::Uniform, 7};
    SiteNetwork net = build_preset(Topology::Chain, 8, 1.0, dis);
    net.sink_site = 7;
    OpenSystemSpec env;
    env.dephasing_rate = 1.0;
    env.sink_rate = 1.0;
    env.loss_rate = 0.001;
    const auto rho0 = site_density_matrix(8, 0);

    RunOptions opts;
    t0 = std::chrono::steady_clock::now();
    const auto spectral = run_to_completion(net, env, rho0, 1e5, opts);
    const double t_spec = seconds_since(t0);

    opts.force_rk4 = true;
    t0 = std::chrono::steady_clock::now();
    const auto rk4 = run_to_completion(net, env, rho0, 1e5, opts);
    const double t_rk4 = seconds_since(t0);

    std::printf("single run, d=1: spectral %.4f s (eta=%s), rk4 %.4f s (eta=%s), |deta|=%.2e\n",
                t_spec, format_double(spectral.eta).c_str(), t_rk4,
                format_double(rk4.eta).c_str(), std::abs(spectral.eta - rk4.eta));

    return identical ? 0 : 1;
}
