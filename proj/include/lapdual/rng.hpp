#pragma once

// Counter-based random numbers. Philox4x32-10 keyed by a 64-bit key; each
// Monte-Carlo path gets its own key derived from (seed, stream tag, path index),
// so paths can run in any order or on any thread with identical results.

#include <array>
#include <cstdint>
#include <limits>

namespace lapdual {

namespace philox {
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;
/// Ten-round Philox4x32 bijection.
Counter rounds10(Counter ctr, Key key);
}  // namespace philox

/// SplitMix64 finalizer; used to spread seeds before keying Philox.
std::uint64_t mix64(std::uint64_t z);

/// Philox4x32-10 stream with a 128-bit counter; satisfies UniformRandomBitGenerator.
class Philox {
  public:
    using result_type = std::uint32_t;

    explicit Philox(std::uint64_t key = 0, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Box-Muller, second variate cached).
    double normal();
    /// Unit-mean exponential.
    double exponential();
    /// Poisson with mean lambda >= 0.
    std::uint64_t poisson(double lambda);

  private:
    void refill();

    philox::Key key_{};
    philox::Counter ctr_{};
    philox::Counter buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Independent stream for one path: key from (seed, tag), high counter word from the index.
Philox path_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

}  // namespace lapdual
