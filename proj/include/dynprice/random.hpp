#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace dynprice {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Reproducible random stream.
///
/// Streams are keyed by (experiment seed, task index): each task of a
/// parallel experiment draws from its own substream, so results do not
/// depend on how tasks are scheduled across threads. The engine is
/// std::mt19937_64 (fully specified by the standard) and all variates are
/// produced by the samplers below rather than by <random> distributions,
/// whose algorithms are implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : RandomStream(seed, 0) {}

    RandomStream(std::uint64_t seed, std::uint64_t task) {
        const std::uint64_t a = detail::splitmix64(seed);
        const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(task + 0x632be59bd9b4e019ULL));
        std::array<std::uint32_t, 4> words{
            static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
            static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    /// Substream for task `task` of the experiment seeded with `seed`.
    static RandomStream substream(std::uint64_t seed, std::uint64_t task) {
        return RandomStream(seed, task);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exp(rate), mean 1/rate.
    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    /// Standard normal, Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform_open() - 1.0;
            v = 2.0 * uniform_open() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Gamma(shape, rate), mean shape/rate. Marsaglia-Tsang; shapes below one
    /// use the boost Gamma(shape+1) * U^(1/shape).
    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0, 1.0);
            return g * std::pow(uniform_open(), 1.0 / shape) / rate;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dynprice
