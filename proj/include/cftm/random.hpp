#pragma once

#include <cstdint>
#include <random>

namespace cftm {

using Seed = std::uint64_t;

// splitmix64 finalizer; maps (seed, stream) to a decorrelated child seed.
Seed derive_seed(Seed seed, std::uint64_t stream);

// Thin wrapper around mt19937_64. Each sampling call site owns one of these;
// there is no global generator.
class Rng {
public:
    explicit Rng(Seed seed) : seed_(seed), engine_(seed) {}

    Seed seed() const noexcept { return seed_; }

    double normal() { return normal_(engine_); }
    // Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    // Independent child generator; does not advance this one.
    Rng child(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    Seed seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace cftm
