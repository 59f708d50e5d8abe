// Command-line surface: simulate | sweep | localize | theory | collapse | rerun.
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure.
// Warnings go to stderr and never change the exit code.

#include "goldilocks/dynamics.hpp"
#include "goldilocks/errors.hpp"
#include "goldilocks/io.hpp"
#include "goldilocks/manifest.hpp"
#include "goldilocks/network.hpp"
#include "goldilocks/observables.hpp"
#include "goldilocks/sweep.hpp"
#include "goldilocks/theory.hpp"
#include "goldilocks/units.hpp"
#include "goldilocks/version.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using goldilocks::format_double;
using nlohmann::json;

constexpr const char* kUnitHelp = " [--unit applies; default rad/ps]";

struct NetworkCli {
    std::string preset = "chain";
    int n = 8;
    double J = 1.0;
    double width = 0.0;
    std::string distribution = "uniform";
    std::uint64_t seed = 0;
    std::string network_file;
    int sink = 0; // 1-based; 0 = file default / last site
    int init = 1; // 1-based
};

void add_network_options(CLI::App* cmd, NetworkCli& opt) {
    cmd->add_option("--preset", opt.preset, "Network preset: chain or ring [default chain]")
        ->check(CLI::IsMember({"chain", "ring"}));
    cmd->add_option("--n", opt.n, "Number of sites [default 8]");
    cmd->add_option("--J", opt.J,
                    std::string("Nearest-neighbor coupling") + kUnitHelp + " [default 1]");
    cmd->add_option("--dw", opt.width,
                    std::string("Static disorder scale (half-width/std)") + kUnitHelp +
                        " [default 0]");
    cmd->add_option("--dist", opt.distribution, "Disorder distribution: uniform or gaussian")
        ->check(CLI::IsMember({"uniform", "gaussian"}));
    cmd->add_option("--seed", opt.seed, "Disorder seed (64-bit) [default 0]");
    cmd->add_option("--network", opt.network_file,
                    "Network JSON file (overrides the preset options)");
    cmd->add_option("--sink", opt.sink,
                    "Sink site, 1-based [default: file's sink, else the last site]");
    cmd->add_option("--init", opt.init, "Initially excited site, 1-based [default 1]");
}

goldilocks::SiteNetwork build_network(const NetworkCli& opt, double unit_scale) {
    goldilocks::SiteNetwork net;
    if (!opt.network_file.empty()) {
        net = goldilocks::load_network(opt.network_file);
        if (opt.width > 0.0) {
            const goldilocks::DisorderSpec dis{
                opt.width * unit_scale,
                opt.distribution == "gaussian" ? goldilocks::DisorderKind::Gaussian
                                               : goldilocks::DisorderKind::Uniform,
                opt.seed};
            net.site_energies += goldilocks::draw_site_energies(net.n_sites, dis);
        }
    } else {
        const goldilocks::DisorderSpec dis{
            opt.width * unit_scale,
            opt.distribution == "gaussian" ? goldilocks::DisorderKind::Gaussian
                                           : goldilocks::DisorderKind::Uniform,
            opt.seed};
        net = goldilocks::build_preset(opt.preset == "ring" ? goldilocks::Topology::Ring
                                                            : goldilocks::Topology::Chain,
                                       opt.n, opt.J * unit_scale, dis);
    }
    if (opt.sink != 0) {
        if (opt.sink < 1 || opt.sink > net.n_sites)
            throw std::invalid_argument("--sink out of range (sites are 1.." +
                                        std::to_string(net.n_sites) + ")");
        net.sink_site = opt.sink - 1;
    } else if (!net.sink_site) {
        net.sink_site = net.n_sites - 1;
    }
    return net;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("GOLDILOCKS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0; // auto
}

/// Runs `body`, writing `<primary_output>.manifest.json` on success and on
/// failure alike.
template <typename Body>
void with_manifest(const std::string& command, const std::string& primary_output,
                   goldilocks::RunManifest& manifest, Body&& body) {
    manifest.command = command;
    manifest.code_version = goldilocks::kVersion;
    manifest.started = goldilocks::iso_timestamp_now();
    const std::string path = primary_output + ".manifest.json";
    try {
        body();
        manifest.status = "ok";
    } catch (const std::exception& e) {
        manifest.status = std::string("error: ") + e.what();
        manifest.finished = goldilocks::iso_timestamp_now();
        try {
            manifest.write(path);
        } catch (...) {
        }
        throw;
    }
    manifest.finished = goldilocks::iso_timestamp_now();
    manifest.write(path);
}

std::string trajectory_csv(const goldilocks::TransportOutcome& outcome) {
    std::ostringstream out;
    const int n = static_cast<int>(outcome.summary.populations.cols());
    out << "time";
    for (int i = 1; i <= n; ++i) out << ",pop_" << i;
    out << ",sink,loss\n";
    for (std::size_t k = 0; k < outcome.summary.times.size(); ++k) {
        out << format_double(outcome.summary.times[k]);
        for (int i = 0; i < n; ++i) out << "," << format_double(outcome.summary.populations(k, i));
        out << "," << format_double(outcome.summary.sink[k]) << ","
            << format_double(outcome.summary.loss[k]) << "\n";
    }
    return out.str();
}

void print_outcome(const goldilocks::TransportOutcome& outcome) {
    std::cout << "eta = " << format_double(outcome.eta) << "\n"
              << "loss = " << format_double(outcome.loss) << "\n"
              << "final_trace = " << format_double(outcome.final_trace) << "\n"
              << "transfer_time = " << format_double(outcome.transfer_time) << "\n"
              << "t_end = " << format_double(outcome.t_end) << "\n"
              << "method = "
              << (outcome.method == goldilocks::PropagationMethod::Spectral ? "spectral" : "rk4")
              << "\n"
              << "converged = " << (outcome.converged ? "yes" : "no") << "\n";
    if (!outcome.warning.empty()) std::cerr << "warning: " << outcome.warning << "\n";
}

struct SimulateArgs {
    NetworkCli net;
    double d = 0.0, c = 0.0, kappa = 0.0, gamma_loss = 0.0;
    double t_max = 1e5, dt = 0.0;
    std::string unit = "rad-ps";
    std::string out = "trajectory.csv";
    std::string msd_out;
    bool check_dt = false;
};

json simulate_resolved_config(const goldilocks::SiteNetwork& net,
                              const goldilocks::OpenSystemSpec& env, const SimulateArgs& args,
                              int init_site) {
    json cfg;
    cfg["network"] = goldilocks::network_to_json(net);
    cfg["init_site"] = init_site;
    cfg["environment"] = {{"d", env.dephasing_rate},
                          {"c", env.noise_correlation},
                          {"kappa", env.sink_rate},
                          {"gamma_loss", env.loss_rate}};
    cfg["t_max"] = args.t_max;
    cfg["dt"] = args.dt;
    cfg["check_dt"] = args.check_dt;
    cfg["out"] = args.out;
    if (!args.msd_out.empty()) cfg["msd_out"] = args.msd_out;
    return cfg;
}

void run_simulate_from_config(const json& cfg) {
    const goldilocks::SiteNetwork net = goldilocks::network_from_json(cfg.at("network"));
    goldilocks::OpenSystemSpec env;
    env.dephasing_rate = cfg.at("environment").at("d").get<double>();
    env.noise_correlation = cfg.at("environment").at("c").get<double>();
    env.sink_rate = cfg.at("environment").at("kappa").get<double>();
    env.loss_rate = cfg.at("environment").at("gamma_loss").get<double>();
    const int init_site = cfg.at("init_site").get<int>();

    goldilocks::RunOptions options;
    options.dt = cfg.at("dt").get<double>();
    options.summary_points = 2049;
    options.verify_dt = cfg.at("check_dt").get<bool>();

    const auto outcome = goldilocks::run_to_completion(
        net, env, goldilocks::site_density_matrix(net.n_sites, init_site),
        cfg.at("t_max").get<double>(), options);
    goldilocks::write_text_file(cfg.at("out").get<std::string>(), trajectory_csv(outcome));
    print_outcome(outcome);

    // Spread diagnostics relative to the initially excited site.
    const auto msd = goldilocks::msd_from_summary(outcome.summary, net, init_site);
    if (cfg.contains("msd_out")) {
        std::ostringstream csv;
        csv << "time,r\n";
        for (std::size_t k = 0; k < msd.times.size(); ++k)
            csv << format_double(msd.times[k]) << "," << format_double(msd.r[k]) << "\n";
        goldilocks::write_text_file(cfg.at("msd_out").get<std::string>(), csv.str());
    }
    try {
        const auto fit =
            goldilocks::fit_diffusion(msd, outcome.t_end / 20.0, outcome.t_end / 2.0);
        std::cout << "msd_fit_exponent = " << format_double(fit.exponent) << "\n"
                  << "msd_fit_coefficient = " << format_double(fit.coefficient) << "\n";
    } catch (const std::invalid_argument&) {
        std::cout << "msd_fit_exponent = nan\nmsd_fit_coefficient = nan\n";
    }
}

int run_simulate(const SimulateArgs& args) {
    const double scale = goldilocks::to_rad_per_ps(1.0, goldilocks::parse_unit(args.unit));
    goldilocks::RunManifest manifest;
    with_manifest("simulate", args.out, manifest, [&] {
        const goldilocks::SiteNetwork net = build_network(args.net, scale);
        if (args.net.init < 1 || args.net.init > net.n_sites)
            throw std::invalid_argument("--init out of range");
        goldilocks::OpenSystemSpec env;
        env.dephasing_rate = args.d * scale;
        env.noise_correlation = args.c;
        env.sink_rate = args.kappa * scale;
        env.loss_rate = args.gamma_loss * scale;
        manifest.resolved_config = simulate_resolved_config(net, env, args, args.net.init - 1);
        manifest.master_seed = args.net.seed;
        manifest.outputs = {args.out};
        if (!args.msd_out.empty()) manifest.outputs.push_back(args.msd_out);
        run_simulate_from_config(manifest.resolved_config);
    });
    return 0;
}

struct SweepArgs {
    std::string config_file;
    std::string out = "sweep.csv";
    int threads = 0;
};

int run_sweep_cmd(const SweepArgs& args) {
    goldilocks::RunManifest manifest;
    with_manifest("sweep", args.out, manifest, [&] {
        const auto cfg = goldilocks::SweepConfig::from_file(args.config_file);
        manifest.resolved_config = {{"sweep_config", cfg.to_json()}, {"out", args.out}};
        manifest.master_seed = cfg.master_seed;
        manifest.outputs = {args.out, args.out + ".meta.json"};
        const auto result = goldilocks::run_sweep(cfg, resolve_threads(args.threads));
        goldilocks::write_sweep_outputs(result, args.out);
        long nonconv = 0, failed = 0;
        for (const auto& pt : result.points) {
            nonconv += pt.n_nonconverged;
            failed += pt.n_failed;
        }
        std::cout << "points = " << result.points.size()
                  << ", realizations = " << result.realizations << ", wrote " << args.out << "\n";
        if (nonconv > 0) std::cerr << "warning: " << nonconv << " non-converged runs\n";
        if (failed > 0) std::cerr << "warning: " << failed << " failed runs (flagged)\n";
    });
    return 0;
}

struct LocalizeArgs {
    NetworkCli net;
    std::string unit = "rad-ps";
    std::string band; // "lo:hi", 1-based inclusive
    int origin = 0;   // 1-based; 0 = middle site
    int seeds = 1;    // ensemble size (presets only); seeds seed..seed+N-1
    std::string out;  // optional per-seed CSV
};

int run_localize(const LocalizeArgs& args) {
    const double scale = goldilocks::to_rad_per_ps(1.0, goldilocks::parse_unit(args.unit));
    if (args.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
    if (args.seeds > 1 && !args.net.network_file.empty())
        throw std::invalid_argument("--seeds needs a preset network (files are fixed draws)");

    struct Row {
        std::uint64_t seed;
        goldilocks::LocalizationEstimate est;
    };
    std::vector<Row> rows;

    int band_lo = 0, band_hi = -1; // resolved once the size is known
    double J = 0.0, width = 0.0;
    int n = 0;

    for (int k = 0; k < args.seeds; ++k) {
        NetworkCli per_seed = args.net;
        per_seed.seed = args.net.seed + static_cast<std::uint64_t>(k);
        goldilocks::SiteNetwork net = build_network(per_seed, scale);
        net.sink_site.reset(); // localization diagnostics are closed-system
        n = net.n_sites;
        if (band_hi < 0) {
            band_lo = 0;
            band_hi = n - 1;
            if (!args.band.empty()) {
                const auto colon = args.band.find(':');
                if (colon == std::string::npos)
                    throw std::invalid_argument("--band must be lo:hi (1-based, inclusive)");
                band_lo = std::atoi(args.band.substr(0, colon).c_str()) - 1;
                band_hi = std::atoi(args.band.substr(colon + 1).c_str()) - 1;
            }
        }

        J = net.preset_coupling;
        width = net.preset_disorder_width;
        if (args.net.network_file.empty()) {
            J = args.net.J * scale;
            width = args.net.width * scale;
        } else if (J <= 0.0) {
            // Custom network: mean nonzero |coupling|, sqrt(3)*std of energies.
            double sum = 0.0;
            int count = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (net.couplings(i, j) != 0.0) {
                        sum += std::abs(net.couplings(i, j));
                        ++count;
                    }
            J = count > 0 ? sum / count : 0.0;
            const double mean = net.site_energies.mean();
            width = std::sqrt(3.0 * (net.site_energies.array() - mean).square().sum() /
                              std::max(1, n - 1));
        }
        if (J <= 0.0) throw std::invalid_argument("localize: network has no couplings");

        const int origin = args.origin != 0 ? args.origin - 1 : n / 2;
        if (origin < 0 || origin >= n) throw std::invalid_argument("--origin out of range");

        auto est = goldilocks::dynamic_localization(net, origin);
        est.ell_theory = goldilocks::theory_localization(J, width, n);
        est.ell_ipr = goldilocks::ipr_localization(goldilocks::hamiltonian(net), band_lo, band_hi);
        rows.push_back({per_seed.seed, est});
    }

    double mean_ipr = 0.0, mean_dyn = 0.0, mean_tau = 0.0;
    int uncapped = 0;
    for (const auto& row : rows) {
        mean_ipr += row.est.ell_ipr / rows.size();
        if (!row.est.capped) {
            mean_dyn += row.est.ell_dynamic;
            mean_tau += row.est.tau;
            ++uncapped;
        }
    }
    const auto& first = rows.front().est;
    std::cout << "ell_theory = " << format_double(first.ell_theory) << "\n"
              << "ell_ipr = " << format_double(rows.size() == 1 ? first.ell_ipr : mean_ipr) << "\n";
    if (rows.size() == 1) {
        std::cout << "ell_dynamic = " << format_double(first.ell_dynamic) << "\n"
                  << "tau = " << format_double(first.tau) << "\n"
                  << "capped = " << (first.capped ? "yes" : "no") << "\n";
    } else {
        std::cout << "ell_dynamic = "
                  << format_double(uncapped > 0 ? mean_dyn / uncapped
                                                : static_cast<double>(n - 1))
                  << "\n"
                  << "tau = "
                  << format_double(uncapped > 0 ? mean_tau / uncapped : first.window_hi) << "\n"
                  << "capped = " << (rows.size() - uncapped) << "/" << rows.size() << "\n";
    }

    if (!args.out.empty()) {
        std::ostringstream csv;
        csv << "seed,ell_theory,ell_ipr,ell_dynamic,tau,capped\n";
        for (const auto& row : rows)
            csv << row.seed << "," << format_double(row.est.ell_theory) << ","
                << format_double(row.est.ell_ipr) << "," << format_double(row.est.ell_dynamic)
                << "," << format_double(row.est.tau) << "," << (row.est.capped ? 1 : 0) << "\n";
        goldilocks::write_text_file(args.out, csv.str());
    }
    return 0;
}

struct CollapseArgs {
    std::vector<std::string> inputs;
    std::string out;
};

std::string collapse_report_line(const goldilocks::CollapseFamily& f) {
    std::ostringstream line;
    line << "family=" << f.label << " peak_lambda=" << format_double(f.peak_lambda)
         << " peak_eta=" << format_double(f.peak_eta) << " peak_d=" << format_double(f.peak_d)
         << " plateau=[" << format_double(f.plateau_lambda_lo) << ","
         << format_double(f.plateau_lambda_hi) << "]"
         << " decades=" << format_double(f.plateau_decades)
         << " unconverged=" << (f.unconverged ? 1 : 0);
    return line.str();
}

int run_collapse(const CollapseArgs& args) {
    std::vector<goldilocks::CollapseFamily> families;
    for (const auto& path : args.inputs)
        families.push_back(goldilocks::collapse_check_csv(path));

    for (const auto& f : families) std::cout << collapse_report_line(f) << "\n";

    if (!args.out.empty()) {
        goldilocks::RunManifest manifest;
        with_manifest("collapse", args.out, manifest, [&] {
            manifest.resolved_config = {{"inputs", args.inputs}, {"out", args.out}};
            manifest.outputs = {args.out};
            std::ostringstream csv;
            csv << "family,peak_lambda,peak_eta,peak_d,plateau_lambda_lo,plateau_lambda_hi,"
                   "plateau_decades,unconverged\n";
            for (const auto& f : families) {
                csv << f.label << "," << format_double(f.peak_lambda) << ","
                    << format_double(f.peak_eta) << "," << format_double(f.peak_d) << ","
                    << format_double(f.plateau_lambda_lo) << ","
                    << format_double(f.plateau_lambda_hi) << ","
                    << format_double(f.plateau_decades) << "," << (f.unconverged ? 1 : 0) << "\n";
            }
            goldilocks::write_text_file(args.out, csv.str());
        });
    }
    return 0;
}

struct RerunArgs {
    std::string manifest_path;
    std::string out_dir;
};

std::string remap_path(const std::string& path, const std::string& out_dir) {
    if (out_dir.empty()) return path;
    return (std::filesystem::path(out_dir) / std::filesystem::path(path).filename()).string();
}

int run_rerun(const RerunArgs& args) {
    const auto manifest = goldilocks::RunManifest::load(args.manifest_path);
    if (!args.out_dir.empty()) std::filesystem::create_directories(args.out_dir);

    if (manifest.command == "simulate") {
        json cfg = manifest.resolved_config;
        cfg["out"] = remap_path(cfg.at("out").get<std::string>(), args.out_dir);
        if (cfg.contains("msd_out"))
            cfg["msd_out"] = remap_path(cfg.at("msd_out").get<std::string>(), args.out_dir);
        run_simulate_from_config(cfg);
        return 0;
    }
    if (manifest.command == "sweep") {
        const auto cfg =
            goldilocks::SweepConfig::from_json(manifest.resolved_config.at("sweep_config"));
        const std::string out =
            remap_path(manifest.resolved_config.at("out").get<std::string>(), args.out_dir);
        goldilocks::write_sweep_outputs(goldilocks::run_sweep(cfg, resolve_threads(0)), out);
        std::cout << "wrote " << out << "\n";
        return 0;
    }
    if (manifest.command == "collapse") {
        CollapseArgs cargs;
        for (const auto& in : manifest.resolved_config.at("inputs"))
            cargs.inputs.push_back(in.get<std::string>());
        cargs.out = remap_path(manifest.resolved_config.at("out").get<std::string>(), args.out_dir);
        return run_collapse(cargs);
    }
    throw std::invalid_argument("rerun: unsupported command '" + manifest.command + "'");
}

// ---------------------------------------------------------------------------
// theory subcommands
// ---------------------------------------------------------------------------

struct TheoryArgs {
    double d = 0.0, ell = 0.0, J = 0.0, delta = 0.0, omega = 0.0;
    double alpha = 1.0, c = 0.0, lambda_reorg = 0.0, kT = 0.0, gamma = 0.0, deltaE = 0.0;
    double t = 0.0;
    double dw = 0.0;
    int n = 0;
    std::string unit = "rad-ps";
    double scale() const { return goldilocks::to_rad_per_ps(1.0, goldilocks::parse_unit(unit)); }
};

void print_value(double v) { std::cout << format_double(v) << "\n"; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transport estimators and open-system simulations for disordered excitonic "
                 "networks (units: rad/ps and ps unless --unit cm-1 is given)"};
    app.set_version_flag("--version", goldilocks::kVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand(
        "simulate", "One propagation: writes a trajectory CSV and prints the outcome summary");
    add_network_options(simulate, sim.net);
    simulate->add_option("--d", sim.d, std::string("Dephasing rate d (1/ps)") + kUnitHelp);
    simulate->add_option("--c", sim.c, "Nearest-neighbor noise correlation in [-1,1]");
    simulate->add_option("--kappa", sim.kappa, std::string("Sink rate (1/ps)") + kUnitHelp);
    simulate->add_option("--gamma-loss", sim.gamma_loss,
                         std::string("Uniform loss rate (1/ps)") + kUnitHelp);
    simulate->add_option("--t-max", sim.t_max, "Time cap in ps [default 1e5]");
    simulate->add_option("--dt", sim.dt, "Integration step in ps [default 0.05/max-rate]");
    simulate->add_option("--unit", sim.unit, "Unit of energy-like flags: rad-ps or cm-1");
    simulate->add_option("--out", sim.out, "Trajectory CSV path [default trajectory.csv]");
    simulate->add_option("--msd-out", sim.msd_out,
                         "Optional CSV of the spread r(t) in sites, relative to --init");
    simulate->add_flag("--check-dt", sim.check_dt, "Re-run at dt/2 and report the eta shift");

    SweepArgs swp;
    auto* sweep = app.add_subcommand(
        "sweep", "Disorder-averaged grid sweep from a JSON config file "
                 "(config values: rates in 1/ps, couplings/widths in rad/ps, times in ps)");
    sweep->add_option("--config", swp.config_file, "Sweep config JSON")->required();
    sweep->add_option("--out", swp.out, "Results CSV path [default sweep.csv]");
    sweep->add_option("--threads", swp.threads,
                      "Worker threads (0 = auto; env GOLDILOCKS_THREADS overrides 0)");

    LocalizeArgs loc;
    auto* localize = app.add_subcommand(
        "localize", "Report the three localization-length estimators side by side");
    add_network_options(localize, loc.net);
    localize->add_option("--unit", loc.unit, "Unit of energy-like flags: rad-ps or cm-1");
    localize->add_option("--band", loc.band,
                         "Eigenstate band for the IPR estimate, 1-based 'lo:hi' [default all]");
    localize->add_option("--origin", loc.origin,
                         "Origin site for the dynamic estimate, 1-based [default middle]");
    localize->add_option("--seeds", loc.seeds,
                         "Disorder ensemble size, seeds --seed .. --seed+N-1 [default 1]");
    localize->add_option("--out", loc.out, "Optional per-seed estimates CSV");

    TheoryArgs th;
    auto* theory = app.add_subcommand("theory", "Closed-form estimators");
    theory->require_subcommand(1);
    auto add_unit = [&](CLI::App* cmd) {
        cmd->add_option("--unit", th.unit, "Unit of energy-like flags: rad-ps or cm-1");
    };

    auto* th_lambda = theory->add_subcommand("lambda", "Lambda = d*ell/(2J)");
    th_lambda->add_option("--d", th.d, std::string("Dephasing rate") + kUnitHelp)->required();
    th_lambda->add_option("--ell", th.ell, "Localization length in sites")->required();
    th_lambda->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    add_unit(th_lambda);

    auto* th_loc = theory->add_subcommand("lambda-localized",
                                          "Lambda = d/(2*Omega), Omega^2 = J^2 + delta^2");
    th_loc->add_option("--d", th.d, std::string("Dephasing rate") + kUnitHelp)->required();
    th_loc->add_option("--omega", th.omega, std::string("Transition frequency Omega") + kUnitHelp);
    th_loc->add_option("--J", th.J, std::string("Coupling") + kUnitHelp);
    th_loc->add_option("--delta", th.delta,
                       std::string("Half the site-energy difference") + kUnitHelp);
    add_unit(th_loc);

    auto* th_micro = theory->add_subcommand(
        "micro", "Lambda from microscopic parameters: alpha*(1-c)*lambda*kT/(gamma*deltaE)");
    th_micro->add_option("--alpha", th.alpha, "O(1) spectral-density prefactor [default 1]");
    th_micro->add_option("--c", th.c, "Noise correlation in [-1,1] [default 0]");
    th_micro->add_option("--lambda", th.lambda_reorg,
                         std::string("Reorganization energy") + kUnitHelp)
        ->required();
    th_micro->add_option("--kT", th.kT, std::string("Thermal energy kT") + kUnitHelp)->required();
    th_micro->add_option("--gamma", th.gamma,
                         std::string("Inverse bath correlation time") + kUnitHelp)
        ->required();
    th_micro->add_option("--deltaE", th.deltaE, std::string("Band splitting") + kUnitHelp)
        ->required();
    add_unit(th_micro);

    auto* th_dstar = theory->add_subcommand("dstar", "Optimal dephasing d* = 2J/ell (1/ps)");
    th_dstar->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    th_dstar->add_option("--ell", th.ell, "Localization length in sites")->required();
    add_unit(th_dstar);

    auto* th_band = theory->add_subcommand("bandsplit", "Band splitting 2*pi*J/ell (rad/ps)");
    th_band->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    th_band->add_option("--ell", th.ell, "Localization length in sites")->required();
    add_unit(th_band);

    auto* th_two = theory->add_subcommand(
        "two-state", "Peak transfer probability of a detuned dimer (energies {0, 2*delta})");
    th_two->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    th_two->add_option("--delta", th.delta,
                       std::string("Half the site-energy difference") + kUnitHelp)
        ->required();
    add_unit(th_two);

    auto* th_spread = theory->add_subcommand("spread", "Optimal spread sqrt(2*t*J*ell) in sites");
    th_spread->add_option("--t", th.t, "Time in ps")->required();
    th_spread->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    th_spread->add_option("--ell", th.ell, "Localization length in sites")->required();
    add_unit(th_spread);

    auto* th_ell = theory->add_subcommand(
        "ell", "Transient localization length (J/dw)^2 clamped to [1, n-1]");
    th_ell->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    th_ell->add_option("--dw", th.dw, std::string("Disorder scale") + kUnitHelp)->required();
    th_ell->add_option("--n", th.n, "Number of sites")->required();
    add_unit(th_ell);

    auto* th_tau = theory->add_subcommand("tau", "Localization time ell/(2J) in ps");
    th_tau->add_option("--J", th.J, std::string("Coupling") + kUnitHelp)->required();
    th_tau->add_option("--ell", th.ell, "Localization length in sites")->required();
    add_unit(th_tau);

    auto* th_drate = theory->add_subcommand(
        "drate", "High-temperature dephasing rate alpha*(1-c)*lambda*kT/gamma (1/ps)");
    th_drate->add_option("--alpha", th.alpha, "O(1) spectral-density prefactor [default 1]");
    th_drate->add_option("--c", th.c, "Noise correlation in [-1,1] [default 0]");
    th_drate->add_option("--lambda", th.lambda_reorg,
                         std::string("Reorganization energy") + kUnitHelp)
        ->required();
    th_drate->add_option("--kT", th.kT, std::string("Thermal energy kT") + kUnitHelp)->required();
    th_drate->add_option("--gamma", th.gamma,
                         std::string("Inverse bath correlation time") + kUnitHelp)
        ->required();
    add_unit(th_drate);

    CollapseArgs col;
    auto* collapse = app.add_subcommand(
        "collapse", "Peak-Lambda and 90% plateau report from sweep result CSVs");
    collapse->add_option("inputs", col.inputs, "Sweep CSV files")->required();
    collapse->add_option("--out", col.out, "Optional report CSV path");

    RerunArgs rer;
    auto* rerun = app.add_subcommand("rerun", "Re-execute a saved run manifest");
    rerun->add_option("manifest", rer.manifest_path, "Manifest JSON path")->required();
    rerun->add_option("--out-dir", rer.out_dir, "Redirect outputs into this directory");

    try {
        app.parse(argc, argv);

        if (*simulate) return run_simulate(sim);
        if (*sweep) return run_sweep_cmd(swp);
        if (*localize) return run_localize(loc);
        if (*collapse) return run_collapse(col);
        if (*rerun) return run_rerun(rer);

        if (*theory) {
            const double s = th.scale();
            if (*th_lambda) {
                print_value(goldilocks::lambda_param(th.d * s, th.ell, th.J * s));
            } else if (*th_loc) {
                double J = th.J * s, delta = th.delta * s;
                if (th_loc->count("--omega")) {
                    if (th_loc->count("--J") || th_loc->count("--delta"))
                        throw std::invalid_argument(
                            "lambda-localized: give --omega or --J/--delta, not both");
                    J = th.omega * s;
                    delta = 0.0;
                }
                print_value(goldilocks::lambda_localized(th.d * s, J, delta));
            } else if (*th_micro) {
                goldilocks::MicroParams p;
                p.alpha = th.alpha;
                p.c = th.c;
                p.lambda_reorg = th.lambda_reorg * s;
                p.kT = th.kT * s;
                p.gamma = th.gamma * s;
                p.deltaE = th.deltaE * s;
                print_value(goldilocks::lambda_micro(p));
            } else if (*th_dstar) {
                print_value(goldilocks::optimal_dephasing(th.J * s, th.ell));
            } else if (*th_band) {
                print_value(goldilocks::band_splitting(th.J * s, th.ell));
            } else if (*th_two) {
                const auto r = goldilocks::two_state(th.J * s, th.delta * s);
                std::cout << "p_max = " << format_double(r.p_max) << "\n"
                          << "omega = " << format_double(r.omega) << "\n"
                          << "t_peak = " << format_double(r.t_peak) << "\n";
            } else if (*th_spread) {
                print_value(goldilocks::optimal_spread(th.t, th.J * s, th.ell));
            } else if (*th_ell) {
                print_value(goldilocks::theory_localization(th.J * s, th.dw * s, th.n));
            } else if (*th_tau) {
                print_value(goldilocks::localization_time(th.J * s, th.ell));
            } else if (*th_drate) {
                print_value(
                    goldilocks::decoherence_rate(th.alpha, th.c, th.lambda_reorg * s, th.kT * s,
                                                 th.gamma * s));
            }
            return 0;
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        std::cerr << "run 'goldilocks --help' or 'goldilocks <subcommand> --help'\n";
        return 1;
    } catch (const goldilocks::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
