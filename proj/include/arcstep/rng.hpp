#pragma once

#include <cstdint>
#include <random>

namespace arcstep {

// Seedable random stream addressed by (seed, stream_id).
//
// Splitting rule: the mt19937_64 state seed is derived as
//     mix(seed + stream_id * 0x9E3779B97F4A7C15)
// where mix is the splitmix64 finalizer applied twice. Distinct
// (seed, stream_id) pairs give well-separated engine states, so experiment
// batches can hand stream i to run i and stay reproducible regardless of
// scheduling order or thread count.
//
// Identical (seed, stream_id) reproduce identical sequences bit for bit:
// mt19937_64 is specified exactly by the standard, and uniform01() maps raw
// 64-bit words to doubles explicitly instead of going through
// std::uniform_real_distribution (whose algorithm is implementation-defined).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id),
          engine_(mix64(mix64(seed + stream_id * 0x9E3779B97F4A7C15ull))) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0,1): 53 significant bits, offset by half
    // an ulp so 0 and 1 are never returned. Endpoints matter because samplers
    // feed this through cos(pi*u) and must stay inside open supports.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms per call,
    // which keeps stream consumption deterministic.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    // splitmix64 finalizer.
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

} // namespace arcstep
