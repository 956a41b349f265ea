#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dynprice/joining_models.hpp"
#include "dynprice/random.hpp"
#include "dynprice/service_dist.hpp"

namespace dynprice {

/// Queue state sampled just after an effective arrival.
struct QueueState {
    double workload_post = 0.0;    // workload just after the last effective arrival
    double grad_p_workload = 0.0;  // its pathwise derivative in the price
    double clock = 0.0;            // epoch of the last effective arrival
    std::uint64_t arrivals_seen = 0;
};

struct ArrivalEvent {
    double interarrival = 0.0;
    double grad_p_interarrival = 0.0;  // total derivative, through the workload too
    double service = 0.0;
    bool regenerated = false;          // arrival found the system empty
    double workload_pre = 0.0;
    double seed = 0.0;
};

/// One effective arrival driven by an explicit seed and service draw. Used
/// directly by coupled simulations that share randomness.
///
/// The interarrival is F^{-1}(seed; W) with W the previous post-arrival
/// workload; its total price derivative is the chain rule
///   dA/dp = dF^{-1}/dp + dF^{-1}/dw * dW/dp.
/// The workload derivative restarts from zero whenever the arrival finds the
/// system empty.
inline std::pair<QueueState, ArrivalEvent> step(const QueueState& state, const JoiningModel& model,
                                                double price, double seed, double service) {
    const InterarrivalLaw law(model, price, state.workload_post);
    const InverseSample inv = law.invert(seed);

    ArrivalEvent ev;
    ev.seed = seed;
    ev.service = service;
    ev.interarrival = inv.interarrival;
    ev.grad_p_interarrival = inv.partial_p + inv.partial_w * state.grad_p_workload;

    const double remaining = state.workload_post - inv.interarrival;
    QueueState next;
    if (remaining > 0.0) {
        ev.workload_pre = remaining;
        next.grad_p_workload = state.grad_p_workload - ev.grad_p_interarrival;
    } else {
        ev.workload_pre = 0.0;
        ev.regenerated = true;
        next.grad_p_workload = 0.0;
    }
    next.workload_post = ev.workload_pre + service;
    next.clock = state.clock + inv.interarrival;
    next.arrivals_seen = state.arrivals_seen + 1;
    return {next, ev};
}

/// One effective arrival with fresh randomness: the seed is drawn first, then
/// the service requirement.
inline std::pair<QueueState, ArrivalEvent> step(const QueueState& state, const JoiningModel& model,
                                                double price, RandomStream& rng,
                                                const ServiceDistribution& service) {
    const double seed = rng.uniform_open();
    const double s = service.sample(rng);
    return step(state, model, price, seed, s);
}

/// Observations from one constant-price window.
struct WindowRecord {
    double price = 0.0;
    double min_duration = 0.0;  // T*
    double duration = 0.0;      // T, sum of the window's interarrivals
    std::uint64_t count = 0;    // N, effective arrivals including the closing one
    std::vector<double> interarrivals;
    std::vector<double> grad_interarrivals;
    double opened_at = 0.0;
    std::uint64_t regenerations = 0;
};

/// Holds the price fixed until the window time first reaches `min_duration`
/// at an effective arrival; the window closes at that arrival. The workload
/// carries over, its price derivative restarts at zero.
inline std::pair<QueueState, WindowRecord> run_window(QueueState state, const JoiningModel& model,
                                                      double price, double min_duration,
                                                      RandomStream& rng,
                                                      const ServiceDistribution& service) {
    if (!(min_duration > 0.0)) throw std::invalid_argument("window length must be positive");
    WindowRecord rec;
    rec.price = price;
    rec.min_duration = min_duration;
    rec.opened_at = state.clock;
    state.grad_p_workload = 0.0;
    while (rec.duration < min_duration) {
        auto [next, ev] = step(state, model, price, rng, service);
        state = next;
        rec.duration += ev.interarrival;
        rec.interarrivals.push_back(ev.interarrival);
        rec.grad_interarrivals.push_back(ev.grad_p_interarrival);
        if (ev.regenerated) ++rec.regenerations;
        ++rec.count;
    }
    return {state, std::move(rec)};
}

}  // namespace dynprice
