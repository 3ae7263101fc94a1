#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "kgmix/errors.hpp"

namespace kgmix {

// Labeled randomness consumers. Streams with distinct (seed, purpose)
// are independent; the label keeps one stage's draws from shifting
// another's when configs change.
enum class StreamPurpose : uint64_t {
    Init = 1,
    Negatives = 2,
    Mixup = 3,
    Dropout = 4,
    DataOrder = 5,
    Bench = 6,
    Analysis = 7,
};

inline std::string_view to_string(StreamPurpose p) {
    switch (p) {
        case StreamPurpose::Init: return "init";
        case StreamPurpose::Negatives: return "negatives";
        case StreamPurpose::Mixup: return "mixup";
        case StreamPurpose::Dropout: return "dropout";
        case StreamPurpose::DataOrder: return "data-order";
        case StreamPurpose::Bench: return "bench";
        case StreamPurpose::Analysis: return "analysis";
    }
    return "unknown";
}

namespace detail {

inline uint64_t splitmix64(uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

}  // namespace detail

// Deterministic xoshiro256** stream. Single-owner: not safe for concurrent
// use; parallel workers take derive(worker_index) children instead.
class RngStream {
  public:
    RngStream(uint64_t seed, StreamPurpose purpose, uint64_t lane = 0)
        : seed_(seed), purpose_(purpose) {
        uint64_t sm = seed ^ (0xA076'1D64'78BD'642FULL * static_cast<uint64_t>(purpose)) ^
                      (0xE703'7ED1'A0B4'28DBULL * (lane + 1));
        for (auto& w : state_) w = detail::splitmix64(sm);
    }

    uint64_t next_u64() {
        ++draws_;
        const uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n).
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) throw ConfigError("uniform_int: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no caching,
    // so the draw count stays predictable.
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang squeeze; boost trick for alpha < 1.
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw ConfigError("gamma: alpha must be positive");
        if (alpha < 1.0) {
            const double g = gamma(alpha + 1.0);
            double u;
            do {
                u = uniform();
            } while (u <= 0.0);
            return g * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Fisher-Yates over [first, last).
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            const uint64_t j = uniform_int(i);
            std::swap(first[i - 1], first[j]);
        }
    }

    // Independent child stream for worker `lane`.
    RngStream derive(uint64_t lane) const {
        return RngStream(seed_, purpose_, lane + 1);
    }

    uint64_t seed() const { return seed_; }
    StreamPurpose purpose() const { return purpose_; }
    uint64_t draws() const { return draws_; }

  private:
    uint64_t seed_;
    StreamPurpose purpose_;
    std::array<uint64_t, 4> state_{};
    uint64_t draws_ = 0;
};

// One draw from Beta(alpha, alpha) via two gamma variates. With `folded`
// the value is reflected to max(x, 1-x), i.e. the same distribution
// restricted to [1/2, 1].
inline double beta_sample(RngStream& stream, double alpha, bool folded) {
    if (!(alpha > 0.0)) throw ConfigError("beta_sample: alpha must be positive");
    const double a = stream.gamma(alpha);
    const double b = stream.gamma(alpha);
    double x = (a + b > 0.0) ? a / (a + b) : 0.5;
    if (folded) x = std::max(x, 1.0 - x);
    return x;
}

}  // namespace kgmix
