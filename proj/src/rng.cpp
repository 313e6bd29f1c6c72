#include "kcl/rng.hpp"

#include "kcl/error.hpp"

namespace kcl {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

Rng Rng::split(std::string_view name) const {
    // FNV-1a over the name
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return split(h);
}

double Rng::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw Error(ErrorKind::Domain, "Rng::below(0)");
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

bool Rng::bit() { return (engine_() >> 63) != 0; }

} // namespace kcl
