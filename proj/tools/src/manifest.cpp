#include "sobolev/manifest.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>

namespace sobolev::cli {

std::string utc_now_iso8601() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path& out_dir) {
    return out_dir / "manifest.json";
}

namespace {

nlohmann::ordered_json to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["subcommand"] = m.subcommand;
    j["config_path"] = m.config_path;
    j["master_seed"] = m.master_seed;
    j["out_dir"] = m.out_dir;
    j["version"] = m.version;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["status"] = m.status;
    j["exit_code"] = m.exit_code;
    j["resolved_config"] = m.resolved_config;
    return j;
}

void save(const RunManifest& m) {
    std::ofstream out(manifest_path(m.out_dir));
    if (!out) throw Error("cannot write manifest in " + m.out_dir);
    out << to_json(m).dump(2) << '\n';
    if (!out.flush()) throw Error("failed writing manifest in " + m.out_dir);
}

}  // namespace

void write_manifest(const RunManifest& m) {
    std::filesystem::create_directories(m.out_dir);
    save(m);
}

void finalize_manifest(RunManifest& m, int exit_code) {
    m.finished_at = utc_now_iso8601();
    m.exit_code = exit_code;
    m.status = exit_code == 0 ? "complete" : "failed";
    save(m);
}

RunManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read manifest " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("malformed manifest " + file.string() + ": " + e.what());
    }
    RunManifest m;
    try {
        m.subcommand = j.at("subcommand").get<std::string>();
        m.config_path = j.value("config_path", std::string());
        m.master_seed = j.value("master_seed", uint64_t(0));
        m.out_dir = j.value("out_dir", std::string());
        m.version = j.value("version", std::string());
        m.started_at = j.value("started_at", std::string());
        m.finished_at = j.value("finished_at", std::string());
        m.status = j.value("status", std::string());
        m.exit_code = j.value("exit_code", -1);
        if (j.contains("resolved_config"))
            for (auto it = j["resolved_config"].begin(); it != j["resolved_config"].end(); ++it)
                m.resolved_config[it.key()] = it.value().get<std::string>();
    } catch (const std::exception& e) {
        throw Error("manifest " + file.string() + " missing fields: " + e.what());
    }
    return m;
}

}  // namespace sobolev::cli
