#pragma once

#include "sobolev/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

namespace sobolev::cfg {

// Flat key=value configuration text:
//   - one `key = value` pair per line ('=' required, whitespace trimmed)
//   - keys match [A-Za-z0-9_.-]+; values are the rest of the line verbatim
//   - blank lines and lines starting with '#' are ignored
// Grammar violations carry the line number in the error.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv_text(std::istream& in);
KvMap load_kv_file(const std::filesystem::path& path);

// Typed, consumption-tracked access: every get_* marks its key as known, and
// reject_unknown() then fails on config keys nothing asked for (typos).
// Command-line flags override file values via set().
class Options {
public:
    Options() = default;
    explicit Options(KvMap kv) : kv_(std::move(kv)) {}

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback);
    int get_int(const std::string& key, int fallback);
    uint64_t get_u64(const std::string& key, uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);  // true/false/1/0/yes/no

    void reject_unknown() const;
    const KvMap& raw() const { return kv_; }

private:
    const std::string* lookup(const std::string& key);

    KvMap kv_;
    std::set<std::string> known_;
};

}  // namespace sobolev::cfg
