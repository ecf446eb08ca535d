#include "sobolev/commands.hpp"

#include <cstdlib>

namespace sobolev::cli {

Handler find_handler(const std::string& subcommand) {
    if (subcommand == "regress") return &cmd_regress;
    if (subcommand == "distill") return &cmd_distill;
    if (subcommand == "sg") return &cmd_sg;
    throw Error("unknown subcommand '" + subcommand + "'");
}

int cmd_rerun(const std::filesystem::path& manifest_file, const std::string& flag_out) {
    const RunManifest m = load_manifest(manifest_file);
    Handler h = find_handler(m.subcommand);
    cfg::Options opts{m.resolved_config};
    return h(opts, m.config_path, flag_out);
}

RunScope::RunScope(const std::string& subcommand, cfg::Options& opts,
                   const std::string& config_path, const std::string& flag_out) {
    std::string out = flag_out;
    if (out.empty()) {
        const char* env = std::getenv("SOBOLEV_OUT");
        if (env && *env) out = env;
    }
    const std::string cfg_out = opts.get_string("out", "");
    if (out.empty()) out = cfg_out;
    if (out.empty()) out = "runs/" + subcommand;
    out_ = out;

    manifest_.subcommand = subcommand;
    manifest_.config_path = config_path;
    manifest_.master_seed = opts.get_u64("seed", 0);
    manifest_.out_dir = out_.string();
    manifest_.started_at = utc_now_iso8601();
    manifest_.resolved_config = opts.raw();
    // The destination directory, not the replay inputs: a rerun may point
    // elsewhere via --out without changing what it computes.
    manifest_.resolved_config.erase("out");
    write_manifest(manifest_);
}

int RunScope::finish(int exit_code) {
    finalize_manifest(manifest_, exit_code);
    return exit_code;
}

}  // namespace sobolev::cli
