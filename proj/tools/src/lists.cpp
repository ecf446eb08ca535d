#include "sobolev/lists.hpp"

#include "sobolev/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace sobolev::cli {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t a = item.find_first_not_of(" \t");
        size_t b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, b - a + 1));
    }
    if (out.empty()) throw Error("empty list value '" + s + "'");
    return out;
}

std::vector<int> int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : split_list(s)) {
        try {
            size_t pos = 0;
            out.push_back(std::stoi(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error("expected integer list, got '" + s + "'");
        }
    }
    return out;
}

std::vector<uint64_t> u64_list(const std::string& s) {
    std::vector<uint64_t> out;
    for (const auto& item : split_list(s)) {
        try {
            size_t pos = 0;
            out.push_back(std::stoull(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error("expected seed list, got '" + s + "'");
        }
    }
    return out;
}

std::vector<double> double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error("expected numeric list, got '" + s + "'");
        }
    }
    return out;
}

}  // namespace sobolev::cli
