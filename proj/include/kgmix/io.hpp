#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgmix/errors.hpp"

namespace kgmix {

inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path.string());
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(std::string_view(buf, static_cast<size_t>(in.gcount())), h);
    return h;
}

inline std::string hex_u64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

// Flat key = value manifest. Deliberately timestamp-free so reruns with the
// same inputs are byte-identical.
inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace kgmix
