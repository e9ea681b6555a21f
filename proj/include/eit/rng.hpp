#ifndef EIT_RNG_HPP
#define EIT_RNG_HPP

#include <cmath>
#include <cstdint>

namespace eit {

/// Counter-based random number generator. Every draw is a pure function of
/// (seed, stream, counter), so noise realizations are reproducible regardless
/// of evaluation order or threading.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    /// Uniform in (0, 1), never exactly 0 or 1.
    double uniform(std::uint64_t counter) const {
        const std::uint64_t bits = mix(seed_ ^ rotl(stream_, 23), counter);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; each counter value gives one draw.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    // splitmix64 finalizer applied to a seed/counter combination
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace eit

#endif  // EIT_RNG_HPP
