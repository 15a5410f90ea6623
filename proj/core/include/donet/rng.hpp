#pragma once

#include <cstdint>
#include <random>

namespace donet {

/// Deterministic random generator. Wraps mt19937_64 but produces doubles
/// with fixed bit recipes (the std distributions are implementation-defined,
/// which would break byte-identical reruns across toolchains).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Marsaglia polar.
    double normal();

    std::uint64_t raw() { return gen_(); }

    /// Independent substream; same (seed, id) always gives the same stream.
    Rng split(std::uint64_t id) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace donet
