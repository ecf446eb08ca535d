#include "sobolev/results.hpp"

#include <cmath>
#include <cstdio>

namespace sobolev::res {

namespace {

std::string cell_text(const nlohmann::ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    return v.dump();
}

}  // namespace

nlohmann::ordered_json to_row(const reg::ResultRecord& r) {
    nlohmann::ordered_json row;
    row["function"] = bench::to_string(r.config.function);
    row["mode"] = reg::to_string(r.config.mode);
    row["n"] = r.config.train_size;
    row["seed"] = r.config.seed;
    row["steps"] = r.config.steps;
    row["train_mse"] = r.train_mse;
    row["test_mse"] = r.test_mse;
    row["test_grad_mse"] = r.test_grad_mse;
    row["wall_ms"] = r.wall_ms;
    if (!r.error.empty()) row["error"] = r.error;
    return row;
}

nlohmann::ordered_json to_row(const dist::DistillResult& r) {
    nlohmann::ordered_json row;
    row["mode"] = reg::to_string(r.mode);
    row["data_fraction"] = r.config.data_fraction;
    // The effective derivative weight: regular mode trains with alpha 0.
    row["alpha"] = (r.mode == dist::Mode::sobolev) ? r.config.alpha : 0.0;
    row["seed"] = r.config.seed;
    row["steps"] = r.config.steps;
    row["train_loss"] = r.train_loss;
    row["kl_test"] = r.kl_test;
    row["top1_err"] = r.top1_err;
    row["wall_ms"] = r.wall_ms;
    if (!r.error.empty()) row["error"] = r.error;
    return row;
}

nlohmann::ordered_json to_row(const sg::SgResult& r) {
    nlohmann::ordered_json row;
    row["variant"] = sg::to_string(r.config.variant);
    row["splits"] = int(r.config.splits.size());
    row["seed"] = r.config.seed;
    row["test_acc"] = r.test_acc;
    row["steps"] = r.config.steps;
    row["wall_ms"] = r.wall_ms;
    if (!r.error.empty()) row["error"] = r.error;
    return row;
}

ResultWriter::ResultWriter(const std::filesystem::path& csv_path,
                           const std::filesystem::path& jsonl_path,
                           std::vector<std::string> columns)
    : csv_(csv_path), jsonl_(jsonl_path), columns_(std::move(columns)) {
    if (!csv_) throw Error("cannot open " + csv_path.string() + " for writing");
    if (!jsonl_) throw Error("cannot open " + jsonl_path.string() + " for writing");
    if (columns_.empty()) throw Error("ResultWriter: empty column list");
    for (size_t i = 0; i < columns_.size(); ++i) {
        if (i) csv_ << ',';
        csv_ << columns_[i];
    }
    csv_ << '\n';
    csv_.flush();
}

void ResultWriter::write(const nlohmann::ordered_json& row) {
    // Keys beyond the schema are allowed in the JSONL mirror only when the
    // CSV cannot carry them (e.g. error annotations); schema keys must exist.
    nlohmann::ordered_json mirror;
    for (size_t i = 0; i < columns_.size(); ++i) {
        auto it = row.find(columns_[i]);
        if (it == row.end()) throw Error("result row lacks column '" + columns_[i] + "'");
        if (i) csv_ << ',';
        csv_ << cell_text(*it);
        mirror[columns_[i]] = *it;
    }
    csv_ << '\n';
    csv_.flush();
    for (auto it = row.begin(); it != row.end(); ++it) {
        if (!mirror.contains(it.key())) mirror[it.key()] = it.value();
    }
    jsonl_ << mirror.dump() << '\n';
    jsonl_.flush();
    ++rows_;
    if (!csv_ || !jsonl_) throw Error("write failure while persisting results");
}

std::pair<std::filesystem::path, std::filesystem::path> persist_results(
    const std::vector<nlohmann::ordered_json>& rows, const std::vector<std::string>& columns,
    const std::filesystem::path& dir, const std::string& stem) {
    const auto csv = dir / (stem + ".csv");
    const auto jsonl = dir / (stem + ".jsonl");
    ResultWriter w(csv, jsonl, columns);
    for (const auto& r : rows) w.write(r);
    return {csv, jsonl};
}

}  // namespace sobolev::res
