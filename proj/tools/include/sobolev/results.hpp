#pragma once

#include "sobolev/distill.hpp"
#include "sobolev/regression.hpp"
#include "sobolev/syngrad.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace sobolev::res {

// The sweep result schemas shared by each CSV and its JSON-lines mirror.
inline const std::vector<std::string> regression_columns = {
    "function", "mode", "n", "seed", "steps", "train_mse", "test_mse", "test_grad_mse", "wall_ms"};

inline const std::vector<std::string> distill_columns = {
    "mode",    "data_fraction", "alpha",   "seed",    "steps",
    "train_loss", "kl_test",    "top1_err", "wall_ms"};

inline const std::vector<std::string> sg_columns = {"variant",  "splits", "seed", "test_acc",
                                                    "steps",    "wall_ms"};

nlohmann::ordered_json to_row(const reg::ResultRecord& r);
nlohmann::ordered_json to_row(const dist::DistillResult& r);
nlohmann::ordered_json to_row(const sg::SgResult& r);

// Streams rows to a CSV (header + one line per row) and a JSON-lines mirror,
// flushing after every record so interrupted sweeps keep partial results.
// Doubles are written with 17 significant digits in both files.
class ResultWriter {
public:
    ResultWriter(const std::filesystem::path& csv_path, const std::filesystem::path& jsonl_path,
                 std::vector<std::string> columns);

    void write(const nlohmann::ordered_json& row);  // missing/extra keys are errors
    int rows_written() const { return rows_; }
    const std::vector<std::string>& columns() const { return columns_; }

private:
    std::ofstream csv_;
    std::ofstream jsonl_;
    std::vector<std::string> columns_;
    int rows_ = 0;
};

// Convenience over ResultWriter: writes dir/<stem>.csv and dir/<stem>.jsonl.
// Returns the two paths. The directory must already be writable; the files
// are created (and the header written) before any row, so an unwritable
// destination fails fast.
std::pair<std::filesystem::path, std::filesystem::path> persist_results(
    const std::vector<nlohmann::ordered_json>& rows, const std::vector<std::string>& columns,
    const std::filesystem::path& dir, const std::string& stem);

}  // namespace sobolev::res
