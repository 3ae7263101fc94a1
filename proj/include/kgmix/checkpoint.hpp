#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "kgmix/errors.hpp"
#include "kgmix/models.hpp"

namespace kgmix {

// Binary checkpoint, all integers little-endian:
//   magic "KGMX"
//   u32 version (1), u32 model kind
//   u64 entity count, u64 relation count
//   u32 entity dim, u32 relation dim, u32 epoch
//   f32 payloads row-major: entities, relations, core (cored models only)
//   u64 config-echo byte length, then that many UTF-8 bytes
// Parameters are stored at 32-bit precision; loading widens to 64-bit.

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointData {
    ModelParams params;
    std::string config_echo;
    uint32_t epoch = 0;
};

namespace detail {

inline void put_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void put_u32(std::ostream& out, uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[static_cast<size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b.data(), b.size());
}

inline void put_u64(std::ostream& out, uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b.data(), b.size());
}

inline void put_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(out, bits);
}

inline void get_bytes(std::istream& in, void* p, size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw DataError(std::string("checkpoint truncated while reading ") + what);
}

inline uint32_t get_u32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    get_bytes(in, b.data(), b.size(), what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[static_cast<size_t>(i)]) << (8 * i);
    return v;
}

inline uint64_t get_u64(std::istream& in, const char* what) {
    std::array<unsigned char, 8> b{};
    get_bytes(in, b.data(), b.size(), what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[static_cast<size_t>(i)]) << (8 * i);
    return v;
}

inline float get_f32(std::istream& in, const char* what) {
    const uint32_t bits = get_u32(in, what);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

inline void put_tensor_f32(std::ostream& out, const Tensor& t) {
    for (double v : t.data()) put_f32(out, static_cast<float>(v));
}

inline void get_tensor_f32(std::istream& in, Tensor& t, const char* what) {
    for (double& v : t.data()) v = static_cast<double>(get_f32(in, what));
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                            const std::string& config_echo, uint32_t epoch) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    using namespace detail;
    put_bytes(out, "KGMX", 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<uint32_t>(params.kind));
    put_u64(out, static_cast<uint64_t>(params.num_entities()));
    put_u64(out, static_cast<uint64_t>(params.num_relations()));
    put_u32(out, static_cast<uint32_t>(params.entity_dim()));
    put_u32(out, static_cast<uint32_t>(params.relation_dim()));
    put_u32(out, epoch);
    put_tensor_f32(out, params.entities);
    put_tensor_f32(out, params.relations);
    if (params.kind == ModelKind::TuckER) put_tensor_f32(out, params.core);
    put_u64(out, static_cast<uint64_t>(config_echo.size()));
    put_bytes(out, config_echo.data(), config_echo.size());
    if (!out) throw DataError("write failed: " + path.string());
}

inline CheckpointData load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    using namespace detail;
    std::array<char, 4> magic{};
    get_bytes(in, magic.data(), magic.size(), "magic");
    if (std::memcmp(magic.data(), "KGMX", 4) != 0)
        throw DataError("not a checkpoint file (bad magic): " + path.string());
    const uint32_t version = get_u32(in, "version");
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    const uint32_t kind_raw = get_u32(in, "model kind");
    if (kind_raw != static_cast<uint32_t>(ModelKind::DistMult) &&
        kind_raw != static_cast<uint32_t>(ModelKind::TuckER))
        throw DataError("checkpoint has unknown model kind " + std::to_string(kind_raw));
    const auto kind = static_cast<ModelKind>(kind_raw);
    const uint64_t n_ent = get_u64(in, "entity count");
    const uint64_t n_rel = get_u64(in, "relation count");
    const uint32_t dim_v = get_u32(in, "entity dim");
    const uint32_t dim_r = get_u32(in, "relation dim");
    if (n_ent == 0 || n_rel == 0 || dim_v == 0 || dim_r == 0)
        throw DataError("checkpoint header has zero-sized shapes");
    if (kind == ModelKind::DistMult && dim_v != dim_r)
        throw DataError("checkpoint shape mismatch: this model kind needs equal dims");

    CheckpointData data;
    data.epoch = get_u32(in, "epoch");
    data.params.kind = kind;
    data.params.entities = Tensor({static_cast<size_t>(n_ent), static_cast<size_t>(dim_v)});
    data.params.relations = Tensor({static_cast<size_t>(n_rel), static_cast<size_t>(dim_r)});
    get_tensor_f32(in, data.params.entities, "entity payload");
    get_tensor_f32(in, data.params.relations, "relation payload");
    if (kind == ModelKind::TuckER) {
        data.params.core = Tensor({static_cast<size_t>(dim_v), static_cast<size_t>(dim_r),
                                   static_cast<size_t>(dim_v)});
        get_tensor_f32(in, data.params.core, "core payload");
    }
    const uint64_t echo_len = get_u64(in, "config echo length");
    data.config_echo.resize(static_cast<size_t>(echo_len));
    if (echo_len > 0) get_bytes(in, data.config_echo.data(), data.config_echo.size(), "config echo");
    if (in.peek() != std::ifstream::traits_type::eof())
        throw DataError("checkpoint has trailing bytes: " + path.string());
    return data;
}

}  // namespace kgmix
