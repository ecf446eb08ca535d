#pragma once

#include "sobolev/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace sobolev::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Record of one tool invocation, written to <out>/manifest.json before any
// experiment output and finalized (status, end timestamp, exit code) after
// everything else. resolved_config holds the full flag-over-file merge, so a
// run is replayable from the manifest alone.
struct RunManifest {
    std::string subcommand;
    std::string config_path;
    uint64_t master_seed = 0;
    std::string out_dir;
    std::string version = kToolVersion;
    std::string started_at;
    std::string finished_at;
    std::string status = "running";  // running | complete | failed
    int exit_code = -1;
    cfg::KvMap resolved_config;
};

std::filesystem::path manifest_path(const std::filesystem::path& out_dir);
void write_manifest(const RunManifest& m);
void finalize_manifest(RunManifest& m, int exit_code);
RunManifest load_manifest(const std::filesystem::path& file);

std::string utc_now_iso8601();

}  // namespace sobolev::cli
