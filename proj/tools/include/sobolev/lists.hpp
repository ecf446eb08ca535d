#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sobolev::cli {

// Comma-separated flag values ("a, b,c" -> {"a","b","c"}); empty lists and
// unparsable items are usage errors.
std::vector<std::string> split_list(const std::string& s);
std::vector<int> int_list(const std::string& s);
std::vector<uint64_t> u64_list(const std::string& s);
std::vector<double> double_list(const std::string& s);

}  // namespace sobolev::cli
