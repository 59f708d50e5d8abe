#include "goldilocks/network.hpp"

#include "goldilocks/errors.hpp"
#include "goldilocks/rng.hpp"
#include "goldilocks/units.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace goldilocks {

namespace {

using nlohmann::json;

} // namespace

Eigen::VectorXd draw_site_energies(int n, const DisorderSpec& disorder) {
    if (disorder.width < 0.0) throw std::invalid_argument("disorder width must be >= 0");
    Eigen::VectorXd energies = Eigen::VectorXd::Zero(n);
    if (disorder.width == 0.0) return energies;
    Rng rng(disorder.seed);
    for (int i = 0; i < n; ++i) {
        energies[i] = disorder.distribution == DisorderKind::Uniform
                          ? rng.uniform(-disorder.width, disorder.width)
                          : disorder.width * rng.gaussian();
    }
    return energies;
}

void SiteNetwork::validate() const {
    if (n_sites < 2) throw std::invalid_argument("network needs at least 2 sites");
    if (site_energies.size() != n_sites)
        throw std::invalid_argument("site_energies length does not match n_sites");
    if (couplings.rows() != n_sites || couplings.cols() != n_sites)
        throw std::invalid_argument("couplings must be n_sites x n_sites");
    if (static_cast<int>(positions.size()) != n_sites)
        throw std::invalid_argument("positions length does not match n_sites");
    if (!site_energies.allFinite() || !couplings.allFinite())
        throw std::invalid_argument("energies and couplings must be finite");
    for (int i = 0; i < n_sites; ++i) {
        if (couplings(i, i) != 0.0)
            throw std::invalid_argument("couplings must have zero diagonal");
        for (int j = i + 1; j < n_sites; ++j) {
            if (couplings(i, j) != couplings(j, i))
                throw std::invalid_argument("couplings must be symmetric");
        }
    }
    if (sink_site && (*sink_site < 0 || *sink_site >= n_sites))
        throw std::invalid_argument("sink_site out of range");
}

bool SiteNetwork::are_neighbors(int i, int j) const {
    if (i == j) return false;
    switch (topology) {
    case Topology::Chain:
        return std::abs(i - j) == 1;
    case Topology::Ring:
        return std::abs(i - j) == 1 || std::abs(i - j) == n_sites - 1;
    case Topology::Custom:
        // Custom networks: any nonzero coupling counts as a neighbor.
        return couplings(i, j) != 0.0;
    }
    return false;
}

SiteNetwork build_preset(Topology kind, int n, double J, const DisorderSpec& disorder) {
    if (kind == Topology::Custom)
        throw std::invalid_argument("build_preset supports chain and ring only");
    if (n < 2) throw std::invalid_argument("build_preset: n must be >= 2");
    if (J <= 0.0) throw std::invalid_argument("build_preset: J must be > 0");
    if (disorder.width < 0.0) throw std::invalid_argument("disorder width must be >= 0");

    SiteNetwork net;
    net.n_sites = n;
    net.topology = kind;
    net.preset_coupling = J;
    net.preset_disorder_width = disorder.width;
    net.site_energies = draw_site_energies(n, disorder);
    net.couplings = Eigen::MatrixXd::Zero(n, n);
    net.positions.resize(n);

    if (kind == Topology::Chain) {
        for (int i = 0; i < n; ++i) net.positions[i] = {static_cast<double>(i), 0.0};
        for (int i = 0; i + 1 < n; ++i) {
            net.couplings(i, i + 1) = J;
            net.couplings(i + 1, i) = J;
        }
    } else {
        const double radius = n / (2.0 * std::numbers::pi); // unit arc spacing
        for (int i = 0; i < n; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / n;
            net.positions[i] = {radius * std::cos(theta), radius * std::sin(theta)};
        }
        for (int i = 0; i < n; ++i) {
            const int j = (i + 1) % n;
            net.couplings(i, j) = J;
            net.couplings(j, i) = J;
        }
    }
    net.validate();
    return net;
}

namespace {

[[noreturn]] void schema_fail(const std::string& message, const std::string& field) {
    throw SchemaError(message, field);
}

double number_at(const json& j, const std::string& field) {
    if (!j.is_number()) schema_fail("expected a number", field);
    return j.get<double>();
}

} // namespace

SiteNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open network file '" + path + "'", "");

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("network file parse failure: ") + e.what(), "");
    }
    return network_from_json(doc);
}

SiteNetwork network_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) schema_fail("network file must be a JSON object", "");
    if (!doc.contains("unit")) schema_fail("missing field", "unit");
    if (!doc["unit"].is_string()) schema_fail("unit must be a string", "unit");
    Unit unit = Unit::RadPerPs;
    try {
        unit = parse_unit(doc["unit"].get<std::string>());
    } catch (const std::invalid_argument& e) {
        schema_fail(e.what(), "unit");
    }
    const double scale = to_rad_per_ps(1.0, unit);

    if (!doc.contains("energies") || !doc["energies"].is_array())
        schema_fail("missing or non-array field", "energies");
    const auto& energies = doc["energies"];
    const int n = static_cast<int>(energies.size());
    if (n < 2) schema_fail("need at least 2 sites", "energies");

    SiteNetwork net;
    net.n_sites = n;
    net.topology = Topology::Custom;
    net.site_energies = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        net.site_energies[i] = scale * number_at(energies[i], "energies[" + std::to_string(i) + "]");

    if (!doc.contains("couplings") || !doc["couplings"].is_array())
        schema_fail("missing or non-array field", "couplings");
    const auto& couplings = doc["couplings"];
    if (static_cast<int>(couplings.size()) != n)
        schema_fail("couplings must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix",
                    "couplings");
    net.couplings = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = couplings[i];
        const std::string row_field = "couplings[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            schema_fail("row must have " + std::to_string(n) + " entries", row_field);
        for (int j = 0; j < n; ++j)
            net.couplings(i, j) =
                scale * number_at(row[j], row_field + "[" + std::to_string(j) + "]");
    }
    for (int i = 0; i < n; ++i) {
        if (net.couplings(i, i) != 0.0)
            schema_fail("coupling matrix diagonal must be zero (site energies go in 'energies')",
                        "couplings[" + std::to_string(i) + "][" + std::to_string(i) + "]");
        for (int j = i + 1; j < n; ++j) {
            if (net.couplings(i, j) != net.couplings(j, i))
                schema_fail("coupling matrix must be symmetric",
                            "couplings[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        }
    }

    net.positions.resize(n);
    if (doc.contains("positions")) {
        const auto& pos = doc["positions"];
        if (!pos.is_array() || static_cast<int>(pos.size()) != n)
            schema_fail("positions must list one entry per site", "positions");
        for (int i = 0; i < n; ++i) {
            const std::string field = "positions[" + std::to_string(i) + "]";
            if (pos[i].is_number()) {
                net.positions[i] = {pos[i].get<double>(), 0.0};
            } else if (pos[i].is_array() && pos[i].size() == 2) {
                net.positions[i] = {number_at(pos[i][0], field + "[0]"),
                                    number_at(pos[i][1], field + "[1]")};
            } else {
                schema_fail("position must be a number or an [x, y] pair", field);
            }
        }
    } else {
        for (int i = 0; i < n; ++i) net.positions[i] = {static_cast<double>(i), 0.0};
    }

    if (doc.contains("sink_site")) {
        if (!doc["sink_site"].is_number_integer())
            schema_fail("sink_site must be a 0-based integer site index", "sink_site");
        const int s = doc["sink_site"].get<int>();
        if (s < 0 || s >= n) schema_fail("sink_site out of range", "sink_site");
        net.sink_site = s;
    }

    net.validate();
    return net;
}

nlohmann::json network_to_json(const SiteNetwork& net) {
    json doc;
    doc["unit"] = "rad/ps";
    doc["energies"] = std::vector<double>(net.site_energies.begin(), net.site_energies.end());
    json couplings = json::array();
    for (int i = 0; i < net.n_sites; ++i) {
        json row = json::array();
        for (int j = 0; j < net.n_sites; ++j) row.push_back(net.couplings(i, j));
        couplings.push_back(std::move(row));
    }
    doc["couplings"] = std::move(couplings);
    json positions = json::array();
    for (const auto& p : net.positions) positions.push_back({p[0], p[1]});
    doc["positions"] = std::move(positions);
    if (net.sink_site) doc["sink_site"] = *net.sink_site;
    return doc;
}

Eigen::MatrixXd hamiltonian(const SiteNetwork& net) {
    net.validate();
    Eigen::MatrixXd H = net.couplings;
    H.diagonal() = net.site_energies;
    return H;
}

} // namespace goldilocks
