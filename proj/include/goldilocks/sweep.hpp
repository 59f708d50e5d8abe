#pragma once

#include "goldilocks/dynamics.hpp"
#include "goldilocks/network.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace goldilocks {

struct AxisSpec {
    std::string name; // d | J | width | c | kappa | gamma_loss
    std::vector<double> values;
};

/// Disorder-averaged grid sweep. Per-realization seeds derive from
/// (master_seed, flat point index, realization index) only, so results are
/// independent of scheduling.
struct SweepConfig {
    Topology preset = Topology::Chain;
    int n = 8;
    double J = 1.0;
    DisorderKind distribution = DisorderKind::Uniform;
    double disorder_width = 0.0;
    std::optional<std::string> network_file; // overrides the preset
    int init_site = 0;                       // 0-based
    std::optional<int> sink_site;            // 0-based; presets default to the last site
    OpenSystemSpec base_env;
    std::vector<AxisSpec> axes;
    int realizations = 1;
    std::uint64_t master_seed = 0;
    double t_max = 1e5;
    double dt = 0.0; // 0 = automatic
    long budget_cap = 100000;
    std::vector<std::string> outputs{"eta", "transfer_time"};

    static SweepConfig from_json(const nlohmann::json& doc);
    static SweepConfig from_file(const std::string& path);
    nlohmann::json to_json() const; // canonical form used for hashing
    void validate() const;

    long n_points() const;
    long total_runs() const { return n_points() * realizations; }
};

struct SweepPoint {
    std::vector<double> coords;     // one per axis, in axis order
    double lambda = 0.0;            // d * ell / (2 J), ell from theory_localization
    double eta_mean = 0.0;
    double eta_stderr = 0.0;
    double transfer_time_mean = 0.0;
    int n_ok = 0;
    int n_nonconverged = 0;
    int n_failed = 0;
    bool ell_clamped = false;       // ell hit the lower clamp; localized-regime
    double lambda_localized = 0.0;  //   variant reported via the flags column
    std::string flags() const;
};

struct SweepResult {
    std::vector<std::string> axis_names;
    std::vector<SweepPoint> points; // row-major, last axis fastest
    std::string config_hash;
    std::string code_version;
    std::uint64_t master_seed = 0;
    int realizations = 0;
    nlohmann::json config_json() const;
    std::string csv() const; // pinned columns: axes..., lambda, eta_mean,
                             // eta_stderr, transfer_time_mean, flags
    std::string metadata_json() const;

private:
    friend SweepResult run_sweep(const SweepConfig&, int);
    std::string config_dump_;
};

/// Runs the grid; n_threads = 0 picks the OpenMP default, 1 forces the serial
/// reference path. Output bytes are identical for any thread count.
SweepResult run_sweep(const SweepConfig& config, int n_threads = 0);

/// Writes `<path>` (CSV) and `<path>.meta.json`.
void write_sweep_outputs(const SweepResult& result, const std::string& path);

struct CollapseFamily {
    std::string label;
    double peak_lambda = 0.0;
    double peak_eta = 0.0;
    double peak_d = 0.0;
    double plateau_lambda_lo = 0.0; // contiguous run around the peak with
    double plateau_lambda_hi = 0.0; //   eta >= 0.9 * eta_max
    double plateau_decades = 0.0;
    bool unconverged = false; // flat curve (max - min < 0.01)
};

/// Peak-Lambda and 90%-plateau report for result families with a d axis.
std::vector<CollapseFamily> collapse_check(const std::vector<SweepResult>& results);

/// Same report computed from previously written sweep CSVs.
CollapseFamily collapse_check_csv(const std::string& csv_path);

} // namespace goldilocks
