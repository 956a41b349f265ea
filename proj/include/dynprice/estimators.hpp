#pragma once

#include <numeric>
#include <stdexcept>

#include "dynprice/queue_core.hpp"

namespace dynprice {

struct GradientEstimate {
    double a_hat = 0.0;         // mean effective interarrival time
    double grad_a_hat = 0.0;    // IPA estimate of its price derivative
    double psi_grad_hat = 0.0;  // revenue-rate gradient
    double psi_hat = 0.0;       // revenue rate p / a_hat
};

namespace detail {
inline void require_nonempty(const WindowRecord& record) {
    if (record.count == 0 || record.interarrivals.empty())
        throw std::invalid_argument("window record holds no effective arrivals");
}
}  // namespace detail

/// T / N. Equal to the mean recorded interarrival by construction of the window.
inline double estimate_a(const WindowRecord& record) {
    detail::require_nonempty(record);
    return record.duration / static_cast<double>(record.count);
}

inline double estimate_grad_a(const WindowRecord& record) {
    detail::require_nonempty(record);
    const double sum = std::accumulate(record.grad_interarrivals.begin(), record.grad_interarrivals.end(), 0.0);
    return sum / static_cast<double>(record.grad_interarrivals.size());
}

/// Plug-in gradient of Psi(p) = p / E[A(p)]:  1/A - p * dA / A^2.
inline GradientEstimate psi_gradient(double price, double a_hat, double grad_a_hat) {
    GradientEstimate g;
    g.a_hat = a_hat;
    g.grad_a_hat = grad_a_hat;
    g.psi_grad_hat = 1.0 / a_hat - price * grad_a_hat / (a_hat * a_hat);
    g.psi_hat = price / a_hat;
    return g;
}

inline GradientEstimate estimate_psi_grad(const WindowRecord& record) {
    return psi_gradient(record.price, estimate_a(record), estimate_grad_a(record));
}

}  // namespace dynprice
