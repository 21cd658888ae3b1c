#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lbvae::cli {

/// Written next to every output as "<output>.manifest.json".
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t master_seed = 0;
    bool has_seed = false;
    std::vector<std::string> outputs;
};

nlohmann::json manifest_json(const RunManifest &m);

/// One sidecar per output path; each lists every output of the run.
void write_sidecars(const RunManifest &m);

/// Accepts a bare config object or a manifest (uses its "config" member).
nlohmann::json read_config_or_manifest(const std::string &path);

}  // namespace lbvae::cli
