#pragma once

#include "sobolev/config.hpp"
#include "sobolev/manifest.hpp"

#include <filesystem>
#include <string>

namespace sobolev::cli {

// A subcommand receives the flag-over-file merged options, the config path
// (for the manifest), and the --out flag value ("" when absent). It returns
// the process exit code: 0 ok, 1 usage/config error (usually via a thrown
// Error), 2 numerical failure, 3 check-grad violation.
using Handler = int (*)(cfg::Options& opts, const std::string& config_path,
                        const std::string& flag_out);

int cmd_regress(cfg::Options& opts, const std::string& config_path, const std::string& flag_out);
int cmd_distill(cfg::Options& opts, const std::string& config_path, const std::string& flag_out);
int cmd_sg(cfg::Options& opts, const std::string& config_path, const std::string& flag_out);
int cmd_witness(cfg::Options& opts, const std::string& config_path, const std::string& flag_out);
int cmd_check_grad(cfg::Options& opts, const std::string& config_path, const std::string& flag_out);

Handler find_handler(const std::string& subcommand);

// Replays the subcommand stored in a manifest with its resolved config.
int cmd_rerun(const std::filesystem::path& manifest_file, const std::string& flag_out);

// Shared run scaffolding: resolves the output directory (--out flag, then
// SOBOLEV_OUT, then config key `out`, then runs/<subcommand>), writes the
// manifest before any experiment output, and finalizes it in finish().
class RunScope {
public:
    RunScope(const std::string& subcommand, cfg::Options& opts, const std::string& config_path,
             const std::string& flag_out);

    const std::filesystem::path& out() const { return out_; }
    int finish(int exit_code);

private:
    std::filesystem::path out_;
    RunManifest manifest_;
};

}  // namespace sobolev::cli
