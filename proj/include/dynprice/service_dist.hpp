#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include "dynprice/detail/format.hpp"
#include "dynprice/random.hpp"

namespace dynprice {

/// Service requirement laws. Rates follow the rate parameterisation:
/// Exponential(rate) has mean 1/rate, Gamma(shape, rate) has mean
/// shape/rate and variance shape/rate^2.
class ServiceDistribution {
public:
    struct Exponential { double rate; };
    struct Gamma { double shape; double rate; };
    struct Deterministic { double value; };

    static ServiceDistribution exponential(double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("exponential service rate must be > 0");
        return ServiceDistribution(Exponential{rate});
    }
    static ServiceDistribution gamma(double shape, double rate) {
        if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("gamma service shape must be > 0");
        if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("gamma service rate must be > 0");
        return ServiceDistribution(Gamma{shape, rate});
    }
    static ServiceDistribution deterministic(double value) {
        if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("deterministic service must be >= 0");
        return ServiceDistribution(Deterministic{value});
    }

    const std::variant<Exponential, Gamma, Deterministic>& kind() const noexcept { return kind_; }

    double mean() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return 1.0 / d.rate;
                else if constexpr (std::is_same_v<T, Gamma>) return d.shape / d.rate;
                else return d.value;
            },
            kind_);
    }

    double variance() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return 1.0 / (d.rate * d.rate);
                else if constexpr (std::is_same_v<T, Gamma>) return d.shape / (d.rate * d.rate);
                else return 0.0;
            },
            kind_);
    }

    double sample(RandomStream& rng) const {
        return std::visit(
            [&rng](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return rng.exponential(d.rate);
                else if constexpr (std::is_same_v<T, Gamma>) return rng.gamma(d.shape, d.rate);
                else return d.value;
            },
            kind_);
    }

    /// Canonical text form, e.g. "gamma(0.5, 0.33333333333333331)".
    std::string describe() const {
        return std::visit(
            [](const auto& d) -> std::string {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return "exponential(" + format_real(d.rate) + ")";
                else if constexpr (std::is_same_v<T, Gamma>)
                    return "gamma(" + format_real(d.shape) + ", " + format_real(d.rate) + ")";
                else return "deterministic(" + format_real(d.value) + ")";
            },
            kind_);
    }

private:
    explicit ServiceDistribution(std::variant<Exponential, Gamma, Deterministic> k) : kind_(k) {}
    std::variant<Exponential, Gamma, Deterministic> kind_;
};

inline double sample(const ServiceDistribution& dist, RandomStream& rng) { return dist.sample(rng); }

}  // namespace dynprice
