#include "sobolev/config.hpp"

#include <cctype>
#include <cerrno>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sobolev::cfg {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
            return false;
    }
    return true;
}

}  // namespace

KvMap parse_kv_text(std::istream& in) {
    KvMap kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!valid_key(key))
            throw Error("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
        if (kv.count(key))
            throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

KvMap load_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file " + path.string());
    try {
        return parse_kv_text(in);
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void Options::set(const std::string& key, const std::string& value) { kv_[key] = value; }

const std::string* Options::lookup(const std::string& key) {
    known_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
}

std::string Options::get_string(const std::string& key, const std::string& fallback) {
    const std::string* v = lookup(key);
    return v ? *v : fallback;
}

int Options::get_int(const std::string& key, int fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        size_t pos = 0;
        const long long n = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing text");
        if (n < INT_MIN || n > INT_MAX) throw std::out_of_range("int range");
        return int(n);
    } catch (const std::exception&) {
        throw Error("option '" + key + "': expected integer, got '" + *v + "'");
    }
}

uint64_t Options::get_u64(const std::string& key, uint64_t fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        size_t pos = 0;
        if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long n = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing text");
        return uint64_t(n);
    } catch (const std::exception&) {
        throw Error("option '" + key + "': expected unsigned integer, got '" + *v + "'");
    }
}

double Options::get_double(const std::string& key, double fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        size_t pos = 0;
        const double d = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing text");
        return d;
    } catch (const std::exception&) {
        throw Error("option '" + key + "': expected number, got '" + *v + "'");
    }
}

bool Options::get_bool(const std::string& key, bool fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw Error("option '" + key + "': expected boolean, got '" + *v + "'");
}

void Options::reject_unknown() const {
    std::string extras;
    for (const auto& [k, v] : kv_) {
        if (!known_.count(k)) extras += (extras.empty() ? "" : ", ") + k;
    }
    if (!extras.empty()) throw Error("unknown option(s): " + extras);
}

}  // namespace sobolev::cfg
