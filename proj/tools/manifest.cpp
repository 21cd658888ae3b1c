#include "manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "lbvae/errors.hpp"

namespace lbvae::cli {

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

nlohmann::json manifest_json(const RunManifest &m) {
    nlohmann::json j{{"command", m.command},
                     {"config", m.config},
                     {"tool_version", LBVAE_VERSION},
                     {"timestamp", utc_timestamp()},
                     {"outputs", m.outputs}};
    j["master_seed"] = m.has_seed ? nlohmann::json(m.master_seed) : nlohmann::json(nullptr);
    return j;
}

void write_sidecars(const RunManifest &m) {
    const nlohmann::json j = manifest_json(m);
    for (const std::string &out : m.outputs) {
        const std::string path = out + ".manifest.json";
        std::ofstream f(path);
        if (!f) { throw ConfigError("cannot write " + path); }
        f << j.dump(2) << '\n';
    }
}

nlohmann::json read_config_or_manifest(const std::string &path) {
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot read " + path); }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("command")) { return j.at("config"); }
    return j;
}

}  // namespace lbvae::cli
