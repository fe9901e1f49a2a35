#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace setlstm {

// splitmix64 finalizer; used to derive independent stream seeds and for
// position-keyed value generation.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Deterministic random source. Wraps mt19937_64 but owns the mapping to
// uniform reals/indices so draws are identical across standard libraries,
// and its full state round-trips through checkpoints.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [lo, hi), 53-bit resolution
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    // uniform in [0, n), unbiased
    std::uint64_t uniform_index(std::uint64_t n);

    std::string serialize() const;
    static Rng deserialize(const std::string& s);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace setlstm
