#pragma once

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace goldilocks {

enum class Topology { Chain, Ring, Custom };

enum class DisorderKind { Uniform, Gaussian };

/// Static energetic disorder. `width` is the disorder scale: half-width of the
/// uniform distribution, or the standard deviation of the gaussian one.
struct DisorderSpec {
    double width = 0.0;         // rad/ps
    DisorderKind distribution = DisorderKind::Uniform;
    std::uint64_t seed = 0;
};

/// Sites with positions, on-site energies and a symmetric coupling matrix.
/// Everything is stored in rad/ps (hbar = 1); positions are in units of the
/// lattice spacing. Site indices are 0-based throughout the library.
struct SiteNetwork {
    int n_sites = 0;
    std::vector<std::array<double, 2>> positions;
    Eigen::VectorXd site_energies;
    Eigen::MatrixXd couplings;
    std::optional<int> sink_site;
    Topology topology = Topology::Custom;

    // Preset bookkeeping, used by diagnostics that need the J and disorder
    // scale the network was built from. Zero for custom networks.
    double preset_coupling = 0.0;
    double preset_disorder_width = 0.0;

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;

    double distance(int i, int j) const {
        const double dx = positions[i][0] - positions[j][0];
        const double dy = positions[i][1] - positions[j][1];
        return std::sqrt(dx * dx + dy * dy);
    }

    bool are_neighbors(int i, int j) const;
};

/// Centered static-disorder draw; equal seeds reproduce equal vectors
/// bit-for-bit.
Eigen::VectorXd draw_site_energies(int n, const DisorderSpec& disorder);

/// Chain or ring with nearest-neighbor coupling J and site energies drawn
/// from `disorder` centered at zero. Chain positions are 0..n-1; ring sites
/// sit on a circle with unit arc spacing.
SiteNetwork build_preset(Topology kind, int n, double J, const DisorderSpec& disorder);

/// Reads the documented JSON schema (fields: unit, energies, couplings,
/// optional positions, optional sink_site). Values are converted from the
/// declared unit to rad/ps. Throws SchemaError with field identification.
SiteNetwork load_network(const std::string& path);

/// Same schema, from an in-memory document (used by saved run manifests).
SiteNetwork network_from_json(const nlohmann::json& doc);

/// Inverse of network_from_json, always in rad/ps.
nlohmann::json network_to_json(const SiteNetwork& net);

/// Tight-binding Hamiltonian: H_ii = site energy, H_ij = coupling.
/// Real symmetric, so Hermitian by construction.
Eigen::MatrixXd hamiltonian(const SiteNetwork& net);

} // namespace goldilocks
