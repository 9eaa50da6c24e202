#ifndef DETC_RNG_HPP
#define DETC_RNG_HPP

#include <cmath>
#include <cstdint>

namespace detc {

// Splittable 64-bit PRNG (SplitMix64 core). State transitions are pure
// integer arithmetic, so streams are identical across platforms and
// compilers; doubles are derived from the top 53 bits only.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Inverse-CDF exponential with the given rate. u == 0 maps to 0.
    double exponential(double rate) { return -std::log1p(-next_double()) / rate; }

private:
    std::uint64_t state_;
};

// Independent substream for (seed, id). Two mixing rounds decorrelate
// adjacent ids and adjacent seeds.
inline Rng substream(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (id + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z ^= z >> 31;
    return Rng(z);
}

// Stable stream ids; one stream per (purpose, network) pair.
enum class StreamPurpose : std::uint64_t { attacks = 0, delays = 1, chi_reset = 2 };

inline std::uint64_t stream_id(StreamPurpose p, int network) {
    return static_cast<std::uint64_t>(p) * 256ull + static_cast<std::uint64_t>(network);
}

} // namespace detc

#endif
