#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynprice/estimators.hpp"
#include "dynprice/queue_core.hpp"

namespace dynprice {

enum class WindowGrowth { Log, Sqrt, Power };

inline const char* to_string(WindowGrowth g) {
    switch (g) {
        case WindowGrowth::Log: return "log";
        case WindowGrowth::Sqrt: return "sqrt";
        case WindowGrowth::Power: return "power";
    }
    return "?";
}

/// Minimum window lengths T*_k: C log(k+1), C sqrt(k) or C k^e.
struct WindowSchedule {
    WindowGrowth growth = WindowGrowth::Log;
    double constant = 50.0;
    double exponent = 0.5;  // Power only

    double operator()(std::uint64_t k) const {
        const double kk = static_cast<double>(k);
        switch (growth) {
            case WindowGrowth::Log: return constant * std::log(kk + 1.0);
            case WindowGrowth::Sqrt: return constant * std::sqrt(kk);
            case WindowGrowth::Power: return constant * std::pow(kk, exponent);
        }
        return 0.0;
    }

    void validate() const {
        if (!(constant > 0.0)) throw std::invalid_argument("window constant must be positive");
        if (growth == WindowGrowth::Power && !(exponent > 0.0))
            throw std::invalid_argument("window exponent must be positive for a strictly increasing schedule");
    }
};

struct SgdConfig {
    double p_lo = 0.01;
    double p_hi = 50.0;
    double p0 = 20.0;
    double eta0 = 20.0;   // step sizes eta_k = eta0 * k^-alpha
    double alpha = 0.75;
    WindowSchedule window;
    std::uint64_t max_iterations = 150;

    double step_size(std::uint64_t k) const { return eta0 * std::pow(static_cast<double>(k), -alpha); }

    void validate() const {
        if (!(p_lo >= 0.0)) throw std::invalid_argument("p_lo must be >= 0");
        if (!(p_lo <= p_hi)) throw std::invalid_argument("p_lo must not exceed p_hi");
        if (!(p0 >= p_lo && p0 <= p_hi)) throw std::invalid_argument("p0 must lie in [p_lo, p_hi]");
        if (!(eta0 >= 0.0)) throw std::invalid_argument("eta must be nonnegative");
        if (!(alpha > 0.5 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (1/2, 1]");
        if (max_iterations == 0) throw std::invalid_argument("iterations must be positive");
        window.validate();
    }
};

struct SgdIteration {
    std::uint64_t k = 0;
    double price = 0.0;   // p_{k-1}, enforced during window k
    double t_star = 0.0;
    double duration = 0.0;
    std::uint64_t count = 0;
    double a_hat = 0.0;
    double grad_a_hat = 0.0;
    double psi_grad_hat = 0.0;
    double revenue = 0.0;  // p_{k-1} N_k
    double cum_sim_time = 0.0;
    std::uint64_t regenerations = 0;
};

struct SgdTrace {
    std::vector<SgdIteration> iterations;
    double final_price = 0.0;  // p_L
};

/// pi(x) = max(p_lo, min(p_hi, x)).
inline double project(double price, double p_lo, double p_hi) {
    if (!(p_lo <= p_hi)) throw std::invalid_argument("empty price interval");
    return std::max(p_lo, std::min(p_hi, price));
}

/// Projected stochastic gradient ascent on the revenue rate:
///   p_k = pi[p_{k-1} + eta_k * gradPsi_hat(p_{k-1})].
/// The workload carries over between windows.
inline SgdTrace run_sgd(const SgdConfig& config, const JoiningModel& model,
                        const ServiceDistribution& service, RandomStream& rng) {
    config.validate();
    SgdTrace trace;
    trace.iterations.reserve(config.max_iterations);
    QueueState state;
    double price = config.p0;
    double elapsed = 0.0;
    for (std::uint64_t k = 1; k <= config.max_iterations; ++k) {
        const double t_star = config.window(k);
        auto [next, rec] = run_window(state, model, price, t_star, rng, service);
        state = next;
        const GradientEstimate est = estimate_psi_grad(rec);
        elapsed += rec.duration;

        SgdIteration it;
        it.k = k;
        it.price = price;
        it.t_star = t_star;
        it.duration = rec.duration;
        it.count = rec.count;
        it.a_hat = est.a_hat;
        it.grad_a_hat = est.grad_a_hat;
        it.psi_grad_hat = est.psi_grad_hat;
        it.revenue = price * static_cast<double>(rec.count);
        it.cum_sim_time = elapsed;
        it.regenerations = rec.regenerations;
        trace.iterations.push_back(it);

        price = project(price + config.step_size(k) * est.psi_grad_hat, config.p_lo, config.p_hi);
    }
    trace.final_price = price;
    return trace;
}

}  // namespace dynprice
