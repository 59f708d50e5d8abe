#include "goldilocks/manifest.hpp"

#include "goldilocks/errors.hpp"
#include "goldilocks/io.hpp"

namespace goldilocks {

using nlohmann::json;

json RunManifest::to_json() const {
    json doc;
    doc["command"] = command;
    doc["resolved_config"] = resolved_config;
    doc["master_seed"] = master_seed;
    doc["code_version"] = code_version;
    doc["started"] = started;
    doc["finished"] = finished;
    doc["status"] = status;
    doc["outputs"] = outputs;
    return doc;
}

RunManifest RunManifest::from_json(const json& doc) {
    RunManifest m;
    try {
        m.command = doc.at("command").get<std::string>();
        m.resolved_config = doc.at("resolved_config");
        m.master_seed = doc.value("master_seed", std::uint64_t{0});
        m.code_version = doc.value("code_version", std::string{});
        m.started = doc.value("started", std::string{});
        m.finished = doc.value("finished", std::string{});
        m.status = doc.value("status", std::string{});
        if (doc.contains("outputs"))
            for (const auto& o : doc["outputs"]) m.outputs.push_back(o.get<std::string>());
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed manifest: ") + e.what(), "");
    }
    return m;
}

void RunManifest::write(const std::string& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
}

RunManifest RunManifest::load(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("manifest parse failure: ") + e.what(), path);
    }
    return from_json(doc);
}

} // namespace goldilocks
