#include "goldilocks/sweep.hpp"

#include "goldilocks/errors.hpp"
#include "goldilocks/io.hpp"
#include "goldilocks/rng.hpp"
#include "goldilocks/theory.hpp"
#include "goldilocks/version.hpp"

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace goldilocks {

namespace {

using nlohmann::json;

const std::vector<std::string> kAxisNames = {"d", "J", "width", "c", "kappa", "gamma_loss"};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PointParams {
    double J;
    double width;
    OpenSystemSpec env;
};

PointParams resolve_point(const SweepConfig& cfg, const std::vector<double>& coords) {
    PointParams p{cfg.J, cfg.disorder_width, cfg.base_env};
    for (std::size_t a = 0; a < cfg.axes.size(); ++a) {
        const double v = coords[a];
        const std::string& name = cfg.axes[a].name;
        if (name == "d") p.env.dephasing_rate = v;
        else if (name == "J") p.J = v;
        else if (name == "width") p.width = v;
        else if (name == "c") p.env.noise_correlation = v;
        else if (name == "kappa") p.env.sink_rate = v;
        else if (name == "gamma_loss") p.env.loss_rate = v;
    }
    return p;
}

double effective_coupling(const SiteNetwork& net) {
    if (net.preset_coupling > 0.0) return net.preset_coupling;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < net.n_sites; ++i)
        for (int j = i + 1; j < net.n_sites; ++j)
            if (net.couplings(i, j) != 0.0) {
                sum += std::abs(net.couplings(i, j));
                ++count;
            }
    return count > 0 ? sum / count : 0.0;
}

double effective_disorder_width(const SiteNetwork& net) {
    // Uniform-equivalent half width: sqrt(3) * standard deviation.
    const double mean = net.site_energies.mean();
    const double var =
        (net.site_energies.array() - mean).square().sum() / std::max(1, net.n_sites - 1);
    return std::sqrt(3.0 * var);
}

} // namespace

void SweepConfig::validate() const {
    if (realizations < 1) throw std::invalid_argument("sweep: realizations must be >= 1");
    if (t_max <= 0.0) throw std::invalid_argument("sweep: t_max must be > 0");
    if (dt < 0.0) throw std::invalid_argument("sweep: dt must be >= 0");
    if (budget_cap < 1) throw std::invalid_argument("sweep: budget_cap must be >= 1");
    if (!network_file) {
        if (n < 2) throw std::invalid_argument("sweep: n must be >= 2");
        if (J <= 0.0) throw std::invalid_argument("sweep: J must be > 0");
        if (init_site < 0 || init_site >= n)
            throw std::invalid_argument("sweep: init_site out of range");
        if (sink_site && (*sink_site < 0 || *sink_site >= n))
            throw std::invalid_argument("sweep: sink_site out of range");
    }
    if (disorder_width < 0.0) throw std::invalid_argument("sweep: disorder width must be >= 0");
    base_env.validate();

    std::vector<std::string> seen;
    for (const auto& axis : axes) {
        if (std::find(kAxisNames.begin(), kAxisNames.end(), axis.name) == kAxisNames.end())
            throw std::invalid_argument("sweep: unknown axis '" + axis.name + "'");
        if (std::find(seen.begin(), seen.end(), axis.name) != seen.end())
            throw std::invalid_argument("sweep: duplicate axis '" + axis.name + "'");
        seen.push_back(axis.name);
        if (axis.values.empty())
            throw std::invalid_argument("sweep: axis '" + axis.name + "' has no values");
        if (axis.name == "J" && network_file)
            throw std::invalid_argument("sweep: a J axis requires a preset network");
        for (double v : axis.values) {
            if (!std::isfinite(v))
                throw std::invalid_argument("sweep: axis '" + axis.name + "' has non-finite values");
            if (axis.name == "J" && v <= 0.0)
                throw std::invalid_argument("sweep: J axis values must be > 0");
            if ((axis.name == "d" || axis.name == "width" || axis.name == "kappa" ||
                 axis.name == "gamma_loss") &&
                v < 0.0)
                throw std::invalid_argument("sweep: axis '" + axis.name + "' values must be >= 0");
            if (axis.name == "c" && (v < -1.0 || v > 1.0))
                throw std::invalid_argument("sweep: c axis values must be in [-1, 1]");
        }
    }
    for (const auto& o : outputs) {
        if (o != "eta" && o != "transfer_time")
            throw std::invalid_argument("sweep: unknown output '" + o + "'");
    }
}

long SweepConfig::n_points() const {
    long p = 1;
    for (const auto& axis : axes) p *= static_cast<long>(axis.values.size());
    return p;
}

namespace {

std::vector<double> axis_values_from_json(const json& spec, const std::string& field) {
    if (spec.contains("values")) {
        if (!spec["values"].is_array() || spec["values"].empty())
            throw SchemaError("axis values must be a non-empty array", field + ".values");
        std::vector<double> out;
        for (const auto& v : spec["values"]) {
            if (!v.is_number()) throw SchemaError("axis values must be numbers", field + ".values");
            out.push_back(v.get<double>());
        }
        return out;
    }
    const bool log10_spec = spec.contains("log10_from");
    const bool lin_spec = spec.contains("from");
    if (!log10_spec && !lin_spec)
        throw SchemaError("axis needs 'values', 'from'/'to'/'points' or "
                          "'log10_from'/'log10_to'/'points'",
                          field);
    const char* from_key = log10_spec ? "log10_from" : "from";
    const char* to_key = log10_spec ? "log10_to" : "to";
    for (const char* key : {from_key, to_key, "points"}) {
        if (!spec.contains(key) || !spec[key].is_number())
            throw SchemaError(std::string("axis missing numeric '") + key + "'", field);
    }
    const double lo = spec[from_key].get<double>();
    const double hi = spec[to_key].get<double>();
    const int points = spec["points"].get<int>();
    if (points < 1) throw SchemaError("axis points must be >= 1", field + ".points");
    std::vector<double> out;
    for (int k = 0; k < points; ++k) {
        const double x = points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
        out.push_back(log10_spec ? std::pow(10.0, x) : x);
    }
    return out;
}

} // namespace

SweepConfig SweepConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("sweep config must be a JSON object", "");
    static const std::vector<std::string> known = {
        "preset", "n",           "J",    "disorder", "network_file", "init_site", "sink_site",
        "environment", "axes",  "realizations", "master_seed", "t_max", "dt", "budget_cap",
        "outputs"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw SchemaError("unknown sweep config key", key);
    }

    SweepConfig cfg;
    if (doc.contains("preset")) {
        const std::string p = doc["preset"].get<std::string>();
        if (p == "chain") cfg.preset = Topology::Chain;
        else if (p == "ring") cfg.preset = Topology::Ring;
        else throw SchemaError("preset must be 'chain' or 'ring'", "preset");
    }
    if (doc.contains("n")) cfg.n = doc["n"].get<int>();
    if (doc.contains("J")) cfg.J = doc["J"].get<double>();
    if (doc.contains("network_file")) cfg.network_file = doc["network_file"].get<std::string>();
    if (doc.contains("disorder")) {
        const auto& dis = doc["disorder"];
        if (!dis.is_object()) throw SchemaError("disorder must be an object", "disorder");
        if (dis.contains("width")) cfg.disorder_width = dis["width"].get<double>();
        if (dis.contains("distribution")) {
            const std::string d = dis["distribution"].get<std::string>();
            if (d == "uniform") cfg.distribution = DisorderKind::Uniform;
            else if (d == "gaussian") cfg.distribution = DisorderKind::Gaussian;
            else throw SchemaError("distribution must be 'uniform' or 'gaussian'",
                                   "disorder.distribution");
        }
    }
    if (doc.contains("init_site")) cfg.init_site = doc["init_site"].get<int>();
    if (doc.contains("sink_site")) cfg.sink_site = doc["sink_site"].get<int>();
    // Config files default the recombination loss to 0.001 J (nanosecond
    // lifetime vs picosecond hopping); an explicit "gamma_loss": 0 disables it.
    cfg.base_env.loss_rate = 0.001 * cfg.J;
    if (doc.contains("environment")) {
        const auto& env = doc["environment"];
        if (!env.is_object()) throw SchemaError("environment must be an object", "environment");
        if (env.contains("d")) cfg.base_env.dephasing_rate = env["d"].get<double>();
        if (env.contains("c")) cfg.base_env.noise_correlation = env["c"].get<double>();
        if (env.contains("kappa")) cfg.base_env.sink_rate = env["kappa"].get<double>();
        if (env.contains("gamma_loss")) cfg.base_env.loss_rate = env["gamma_loss"].get<double>();
    }
    if (doc.contains("axes")) {
        if (!doc["axes"].is_array()) throw SchemaError("axes must be an array", "axes");
        int index = 0;
        for (const auto& axis : doc["axes"]) {
            const std::string field = "axes[" + std::to_string(index++) + "]";
            if (!axis.is_object() || !axis.contains("name"))
                throw SchemaError("axis needs a 'name'", field);
            AxisSpec spec;
            spec.name = axis["name"].get<std::string>();
            spec.values = axis_values_from_json(axis, field);
            cfg.axes.push_back(std::move(spec));
        }
    }
    if (doc.contains("realizations")) cfg.realizations = doc["realizations"].get<int>();
    if (doc.contains("master_seed")) cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
    if (doc.contains("t_max")) cfg.t_max = doc["t_max"].get<double>();
    if (doc.contains("dt")) cfg.dt = doc["dt"].get<double>();
    if (doc.contains("budget_cap")) cfg.budget_cap = doc["budget_cap"].get<long>();
    if (doc.contains("outputs")) {
        cfg.outputs.clear();
        for (const auto& o : doc["outputs"]) cfg.outputs.push_back(o.get<std::string>());
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what(), "");
    }
    return cfg;
}

SweepConfig SweepConfig::from_file(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("sweep config parse failure: ") + e.what(), path);
    } catch (const std::runtime_error& e) {
        throw SchemaError(e.what(), path);
    }
    return from_json(doc);
}

json SweepConfig::to_json() const {
    json doc;
    doc["preset"] = preset == Topology::Ring ? "ring" : "chain";
    doc["n"] = n;
    doc["J"] = J;
    doc["disorder"] = {
        {"width", disorder_width},
        {"distribution", distribution == DisorderKind::Gaussian ? "gaussian" : "uniform"}};
    if (network_file) doc["network_file"] = *network_file;
    doc["init_site"] = init_site;
    if (sink_site) doc["sink_site"] = *sink_site;
    doc["environment"] = {{"d", base_env.dephasing_rate},
                          {"c", base_env.noise_correlation},
                          {"kappa", base_env.sink_rate},
                          {"gamma_loss", base_env.loss_rate}};
    doc["axes"] = json::array();
    for (const auto& axis : axes)
        doc["axes"].push_back({{"name", axis.name}, {"values", axis.values}});
    doc["realizations"] = realizations;
    doc["master_seed"] = master_seed;
    doc["t_max"] = t_max;
    doc["dt"] = dt;
    doc["budget_cap"] = budget_cap;
    doc["outputs"] = outputs;
    return doc;
}

std::string SweepPoint::flags() const {
    std::string out;
    auto add = [&](const std::string& token) {
        if (!out.empty()) out += "|";
        out += token;
    };
    if (n_failed > 0) add("failed:" + std::to_string(n_failed));
    if (n_nonconverged > 0) add("nonconv:" + std::to_string(n_nonconverged));
    if (ell_clamped) add("locLambda=" + format_double(lambda_localized));
    return out.empty() ? "-" : out;
}

nlohmann::json SweepResult::config_json() const {
    return config_dump_.empty() ? json::object() : json::parse(config_dump_);
}

std::string SweepResult::csv() const {
    std::ostringstream out;
    for (const auto& name : axis_names) out << name << ",";
    out << "lambda,eta_mean,eta_stderr,transfer_time_mean,flags\n";
    for (const auto& pt : points) {
        for (double c : pt.coords) out << format_double(c) << ",";
        out << format_double(pt.lambda) << "," << format_double(pt.eta_mean) << ","
            << format_double(pt.eta_stderr) << "," << format_double(pt.transfer_time_mean) << ","
            << pt.flags() << "\n";
    }
    return out.str();
}

std::string SweepResult::metadata_json() const {
    json meta;
    meta["code_version"] = code_version;
    meta["config"] = json::parse(config_dump_);
    meta["config_hash"] = config_hash;
    meta["master_seed"] = master_seed;
    meta["realizations"] = realizations;
    meta["n_points"] = points.size();
    meta["seed_scheme"] = "derive_seed(master_seed, point_index, realization_index)";
    return meta.dump(2) + "\n";
}

SweepResult run_sweep(const SweepConfig& config, int n_threads) {
    config.validate();
    const long n_points = config.n_points();
    const long total = n_points * config.realizations;
    if (total > config.budget_cap) {
        throw std::invalid_argument(
            "sweep budget exceeded: " + std::to_string(n_points) + " points x " +
            std::to_string(config.realizations) + " realizations = " + std::to_string(total) +
            " propagations > cap " + std::to_string(config.budget_cap));
    }

    std::optional<SiteNetwork> file_net;
    if (config.network_file) {
        file_net = load_network(*config.network_file);
        if (config.init_site < 0 || config.init_site >= file_net->n_sites)
            throw std::invalid_argument("sweep: init_site out of range for the network file");
        if (config.sink_site && (*config.sink_site < 0 || *config.sink_site >= file_net->n_sites))
            throw std::invalid_argument("sweep: sink_site out of range for the network file");
    }

    const int n_axes = static_cast<int>(config.axes.size());
    auto coords_of = [&](long p) {
        std::vector<double> coords(n_axes);
        long rem = p;
        for (int a = n_axes - 1; a >= 0; --a) {
            const long len = static_cast<long>(config.axes[a].values.size());
            coords[a] = config.axes[a].values[rem % len];
            rem /= len;
        }
        return coords;
    };

    struct RunRecord {
        double eta = 0.0;
        double transfer_time = 0.0;
        bool ok = false;
        bool converged = true;
    };
    std::vector<RunRecord> records(total);

#ifdef _OPENMP
    const int threads = n_threads > 0 ? n_threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#else
    (void)n_threads;
#endif
    for (long task = 0; task < total; ++task) {
        const long p = task / config.realizations;
        const int r = static_cast<int>(task % config.realizations);
        const std::vector<double> coords = coords_of(p);
        const PointParams params = resolve_point(config, coords);
        const std::uint64_t seed =
            derive_seed(config.master_seed, static_cast<std::uint64_t>(p),
                        static_cast<std::uint64_t>(r));
        try {
            SiteNetwork net;
            if (file_net) {
                net = *file_net;
                if (params.width > 0.0) {
                    const DisorderSpec dis{params.width, config.distribution, seed};
                    net.site_energies += draw_site_energies(net.n_sites, dis);
                }
            } else {
                const DisorderSpec dis{params.width, config.distribution, seed};
                net = build_preset(config.preset, config.n, params.J, dis);
            }
            if (config.sink_site) net.sink_site = *config.sink_site;
            else if (!net.sink_site) net.sink_site = net.n_sites - 1;

            RunOptions options;
            options.dt = config.dt;
            options.summary_points = 2;
            const TransportOutcome outcome =
                run_to_completion(net, params.env, site_density_matrix(net.n_sites, config.init_site),
                                  config.t_max, options);
            records[task] =
                RunRecord{outcome.eta, outcome.transfer_time, true, outcome.converged};
        } catch (const std::exception&) {
            records[task] = RunRecord{}; // flagged; the sweep continues
        }
    }

    SweepResult result;
    for (const auto& axis : config.axes) result.axis_names.push_back(axis.name);
    result.code_version = kVersion;
    result.master_seed = config.master_seed;
    result.realizations = config.realizations;
    result.config_dump_ = config.to_json().dump();
    result.config_hash = "fnv1a:" + hex64(fnv1a64(result.config_dump_));

    result.points.resize(n_points);
    for (long p = 0; p < n_points; ++p) {
        SweepPoint& pt = result.points[p];
        pt.coords = coords_of(p);
        const PointParams params = resolve_point(config, pt.coords);

        const int nn = file_net ? file_net->n_sites : config.n;
        const double J_eff = file_net ? effective_coupling(*file_net) : params.J;
        double width_eff = params.width;
        if (file_net && width_eff == 0.0) width_eff = effective_disorder_width(*file_net);
        if (J_eff > 0.0) {
            const double ell = theory_localization(J_eff, width_eff, nn);
            pt.lambda = params.env.dephasing_rate * ell / (2.0 * J_eff);
            pt.ell_clamped = (ell == 1.0);
            pt.lambda_localized =
                params.env.dephasing_rate / (2.0 * std::hypot(J_eff, width_eff));
        } else {
            pt.lambda = kNaN;
        }

        double sum = 0.0, sum_sq = 0.0, tt_sum = 0.0;
        int tt_count = 0;
        for (int r = 0; r < config.realizations; ++r) {
            const RunRecord& rec = records[p * config.realizations + r];
            if (!rec.ok) {
                ++pt.n_failed;
                continue;
            }
            ++pt.n_ok;
            if (!rec.converged) ++pt.n_nonconverged;
            sum += rec.eta;
            sum_sq += rec.eta * rec.eta;
            if (std::isfinite(rec.transfer_time)) {
                tt_sum += rec.transfer_time;
                ++tt_count;
            }
        }
        if (pt.n_ok > 0) {
            pt.eta_mean = sum / pt.n_ok;
            if (pt.n_ok > 1) {
                const double var =
                    std::max(0.0, (sum_sq - sum * sum / pt.n_ok) / (pt.n_ok - 1));
                pt.eta_stderr = std::sqrt(var / pt.n_ok);
            }
        } else {
            pt.eta_mean = kNaN;
            pt.eta_stderr = kNaN;
        }
        pt.transfer_time_mean = tt_count > 0 ? tt_sum / tt_count : kNaN;
    }
    return result;
}

void write_sweep_outputs(const SweepResult& result, const std::string& path) {
    write_text_file(path, result.csv());
    write_text_file(path + ".meta.json", result.metadata_json());
}

namespace {

CollapseFamily collapse_family(std::string label, std::vector<double> d,
                               std::vector<double> lambda, std::vector<double> eta) {
    if (d.size() < 2) throw std::invalid_argument("collapse_check: need at least 2 points");
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

    CollapseFamily family;
    family.label = std::move(label);

    double eta_max = -std::numeric_limits<double>::infinity();
    double eta_min = std::numeric_limits<double>::infinity();
    std::size_t peak = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double e = eta[order[k]];
        if (!std::isfinite(e)) continue;
        if (e > eta_max) {
            eta_max = e;
            peak = k;
        }
        eta_min = std::min(eta_min, e);
    }
    if (!std::isfinite(eta_max))
        throw std::invalid_argument("collapse_check: no finite efficiencies");
    family.unconverged = (eta_max - eta_min) < 0.01;
    family.peak_eta = eta_max;
    family.peak_lambda = lambda[order[peak]];
    family.peak_d = d[order[peak]];

    const double level = 0.9 * eta_max;
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && std::isfinite(eta[order[lo - 1]]) && eta[order[lo - 1]] >= level) --lo;
    while (hi + 1 < order.size() && std::isfinite(eta[order[hi + 1]]) &&
           eta[order[hi + 1]] >= level)
        ++hi;
    double lambda_lo = std::numeric_limits<double>::infinity();
    double lambda_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = lo; k <= hi; ++k) {
        lambda_lo = std::min(lambda_lo, lambda[order[k]]);
        lambda_hi = std::max(lambda_hi, lambda[order[k]]);
    }
    family.plateau_lambda_lo = lambda_lo;
    family.plateau_lambda_hi = lambda_hi;
    family.plateau_decades = lambda_lo > 0.0
                                 ? std::log10(lambda_hi / lambda_lo)
                                 : std::numeric_limits<double>::infinity();
    return family;
}

} // namespace

std::vector<CollapseFamily> collapse_check(const std::vector<SweepResult>& results) {
    std::vector<CollapseFamily> families;
    for (const auto& result : results) {
        if (result.axis_names.size() != 1 || result.axis_names[0] != "d")
            throw std::invalid_argument("collapse_check: each family must be a single-axis d sweep");
        std::vector<double> d, lambda, eta;
        for (const auto& pt : result.points) {
            d.push_back(pt.coords[0]);
            lambda.push_back(pt.lambda);
            eta.push_back(pt.eta_mean);
        }
        const json cfg = result.config_json();
        const std::string label =
            cfg.contains("J") ? "J=" + format_double(cfg["J"].get<double>()) + ",width=" +
                                    format_double(cfg["disorder"]["width"].get<double>())
                              : "family";
        families.push_back(collapse_family(label, std::move(d), std::move(lambda), std::move(eta)));
    }
    return families;
}

CollapseFamily collapse_check_csv(const std::string& csv_path) {
    std::istringstream in(read_text_file(csv_path));
    std::string header;
    if (!std::getline(in, header)) throw SchemaError("empty CSV", csv_path);

    std::vector<std::string> columns;
    std::stringstream hs(header);
    std::string cell;
    while (std::getline(hs, cell, ',')) columns.push_back(cell);

    auto column_index = [&](const std::string& name) {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw SchemaError("CSV missing column '" + name + "'", csv_path);
        return static_cast<int>(it - columns.begin());
    };
    const int d_col = column_index("d");
    const int lambda_col = column_index("lambda");
    const int eta_col = column_index("eta_mean");

    std::vector<double> d, lambda, eta;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) < static_cast<int>(columns.size()))
            throw SchemaError("CSV row has too few columns", csv_path);
        d.push_back(std::strtod(cells[d_col].c_str(), nullptr));
        lambda.push_back(std::strtod(cells[lambda_col].c_str(), nullptr));
        eta.push_back(std::strtod(cells[eta_col].c_str(), nullptr));
    }
    return collapse_family(std::filesystem::path(csv_path).filename().string(), std::move(d),
                           std::move(lambda), std::move(eta));
}

} // namespace goldilocks
