#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kcl {

/// Seeded generator that can derive independent child streams.
///
/// Children are keyed by an integer or a name, so an experiment can hand
/// stream `k` to worker `k` and get the same numbers for any thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    Rng split(std::uint64_t stream) const;
    Rng split(std::string_view name) const;

    std::mt19937_64& engine() noexcept { return engine_; }

    double uniform();                    // [0, 1)
    double uniform(double lo, double hi);
    double normal(double mean = 0.0, double stddev = 1.0);
    std::uint64_t below(std::uint64_t n); // uniform in [0, n)
    bool bit();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace kcl
