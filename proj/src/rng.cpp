#include "lapdual/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lapdual {

namespace philox {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t{a} * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}
}  // namespace

Counter rounds10(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

}  // namespace philox

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Philox::Philox(std::uint64_t key, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    ctr_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

void Philox::refill() {
    buf_ = philox::rounds10(ctr_, key_);
    if (++ctr_[0] == 0) ++ctr_[1];
    pos_ = 0;
}

Philox::result_type Philox::operator()() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

double Philox::uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    const std::uint64_t bits = (hi << 26) | lo;
    // Midpoint of the 2^-53 cell keeps the value strictly inside (0, 1).
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Philox::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

double Philox::exponential() { return -std::log(uniform()); }

std::uint64_t Philox::poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 10.0) {
        const double u = uniform();
        // Most Euler steps see tiny rates: skip the exp when the answer is 0.
        if (u <= 1.0 - lambda) return 0;
        double p = std::exp(-lambda);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    std::poisson_distribution<std::uint64_t> dist(lambda);
    return dist(*this);
}

Philox path_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return Philox(mix64(seed ^ mix64(tag)), index);
}

}  // namespace lapdual
