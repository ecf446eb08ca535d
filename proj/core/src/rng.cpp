#include "sobolev/rng.hpp"

#include <cmath>

namespace sobolev {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

uint64_t derive_seed(uint64_t master, std::string_view purpose, uint64_t index) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    auto mix_byte = [&h](uint8_t b) {
        h ^= b;
        h *= 0x100000001b3ULL;  // FNV-1a prime
    };
    for (char ch : purpose) mix_byte(uint8_t(ch));
    for (int i = 0; i < 8; ++i) mix_byte(uint8_t(index >> (8 * i)));
    return splitmix64(master ^ h);
}

}  // namespace sobolev
