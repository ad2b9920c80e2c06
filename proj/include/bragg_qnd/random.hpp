#pragma once

#include <cstdint>
#include <random>

namespace bragg_qnd
{

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Explicitly seeded random stream. The engine output is fixed by the
/// standard and uniform() uses the top 53 bits directly, so draws are
/// identical on every platform for the same seed.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Private stream for trial `index` of a run with master seed `seed`.
    static Rng for_stream(std::uint64_t seed, std::uint64_t index)
    {
        return Rng(splitmix64(seed) ^ splitmix64(~index));
    }

    /// Uniform double in [0, 1).
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace bragg_qnd
