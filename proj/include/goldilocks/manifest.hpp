#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace goldilocks {

/// Record of one CLI run: the resolved configuration plus every file the run
/// wrote. Re-running a manifest reproduces the outputs byte for byte.
/// Written even when the run fails (status carries the error).
struct RunManifest {
    std::string command;
    nlohmann::json resolved_config;
    std::uint64_t master_seed = 0;
    std::string code_version;
    std::string started;
    std::string finished;
    std::string status; // "ok" or "error: ..."
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& doc);

    void write(const std::string& path) const;
    static RunManifest load(const std::string& path);
};

} // namespace goldilocks
