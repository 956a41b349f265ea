#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dynprice/estimators.hpp"
#include "dynprice/parallel.hpp"
#include "dynprice/queue_core.hpp"
#include "dynprice/sgd_controller.hpp"

namespace dynprice {

// ---------------------------------------------------------------------------
// Revenue-rate curve and the p* oracle

/// Evenly spaced grid start, start + step, ..., stop (inclusive, rounded to
/// the nearest whole number of steps).
inline std::vector<double> make_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) throw std::invalid_argument("invalid price grid");
    const auto n = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = start + static_cast<double>(i) * step;
    return grid;
}

/// Mean effective interarrival time over `n_eff` arrivals of a queue started
/// empty at a fixed price.
inline double simulate_mean_interarrival(const JoiningModel& model, const ServiceDistribution& service,
                                         double price, std::uint64_t n_eff, RandomStream& rng) {
    if (n_eff == 0) throw std::invalid_argument("n_eff must be positive");
    double workload = 0.0;
    double total = 0.0;
    for (std::uint64_t i = 0; i < n_eff; ++i) {
        const double seed = rng.uniform_open();
        const double s = service.sample(rng);
        const double a = InterarrivalLaw(model, price, workload).inverse_cdf(seed);
        total += a;
        workload = std::max(workload - a, 0.0) + s;
    }
    return total / static_cast<double>(n_eff);
}

struct PsiCurve {
    std::vector<double> grid;
    std::vector<double> psi_hat;
    std::vector<double> a_hat;
    std::uint64_t n_eff = 0;
    std::size_t argmax_index = 0;
    double argmax_price = 0.0;
    double argmax_value = 0.0;
    // Vertex of the parabola through the argmax and its two neighbours;
    // equals the raw argmax when the peak sits on the grid boundary.
    double refined_price = 0.0;
    double refined_value = 0.0;

    /// Linear interpolation of psi_hat.
    double interpolate(double price) const {
        if (grid.empty()) throw std::logic_error("empty curve");
        if (price <= grid.front()) return psi_hat.front();
        if (price >= grid.back()) return psi_hat.back();
        const auto it = std::upper_bound(grid.begin(), grid.end(), price);
        const std::size_t j = static_cast<std::size_t>(it - grid.begin());
        const double t = (price - grid[j - 1]) / (grid[j] - grid[j - 1]);
        return psi_hat[j - 1] + t * (psi_hat[j] - psi_hat[j - 1]);
    }
};

inline void locate_peak(PsiCurve& curve) {
    const auto it = std::max_element(curve.psi_hat.begin(), curve.psi_hat.end());
    const std::size_t i = static_cast<std::size_t>(it - curve.psi_hat.begin());
    curve.argmax_index = i;
    curve.argmax_price = curve.grid[i];
    curve.argmax_value = curve.psi_hat[i];
    curve.refined_price = curve.argmax_price;
    curve.refined_value = curve.argmax_value;
    if (i == 0 || i + 1 >= curve.grid.size()) return;
    const double x0 = curve.grid[i - 1], x1 = curve.grid[i], x2 = curve.grid[i + 1];
    const double f0 = curve.psi_hat[i - 1], f1 = curve.psi_hat[i], f2 = curve.psi_hat[i + 1];
    // Newton form: f(x) = f0 + d1 (x - x0) + d2 (x - x0)(x - x1).
    const double d1 = (f1 - f0) / (x1 - x0);
    const double d2 = ((f2 - f1) / (x2 - x1) - d1) / (x2 - x0);
    if (!(d2 < 0.0)) return;
    const double xv = std::clamp(0.5 * (x0 + x1) - d1 / (2.0 * d2), x0, x2);
    curve.refined_price = xv;
    curve.refined_value = f0 + d1 * (xv - x0) + d2 * (xv - x0) * (xv - x1);
}

struct PsiCurveOptions {
    unsigned threads = 1;
    // Drive every grid point with the same random substream.
    bool common_random_numbers = false;
};

/// Psi_hat(p) = p / A_hat(p) on each grid point, A_hat over n_eff arrivals
/// from an empty queue. Grid point i uses substream (seed, i).
inline PsiCurve estimate_psi_curve(const JoiningModel& model, const ServiceDistribution& service,
                                   const std::vector<double>& grid, std::uint64_t n_eff,
                                   std::uint64_t seed, PsiCurveOptions options = {}) {
    if (grid.empty()) throw std::invalid_argument("price grid is empty");
    if (n_eff == 0) throw std::invalid_argument("n_eff must be positive");
    for (double p : grid) model.check_price(p);
    PsiCurve curve;
    curve.grid = grid;
    curve.n_eff = n_eff;
    curve.psi_hat.assign(grid.size(), 0.0);
    curve.a_hat.assign(grid.size(), 0.0);
    parallel_for(grid.size(), options.threads, [&](std::size_t i) {
        RandomStream rng(seed, options.common_random_numbers ? 0 : i);
        const double a = simulate_mean_interarrival(model, service, grid[i], n_eff, rng);
        curve.a_hat[i] = a;
        curve.psi_hat[i] = grid[i] / a;
    });
    locate_peak(curve);
    return curve;
}

struct GradientOracle {
    double value = 0.0;
    double std_error = 0.0;
};

/// Central difference (Psi_hat(p+h) - Psi_hat(p-h)) / 2h with both sides
/// driven by common random numbers, averaged over `pairs` independent pairs.
inline GradientOracle psi_gradient_oracle(const JoiningModel& model, const ServiceDistribution& service,
                                          double price, double h, std::uint64_t n_eff, std::size_t pairs,
                                          std::uint64_t seed, unsigned threads = 1) {
    if (!(h > 0.0) || price - h < 0.0) throw std::invalid_argument("finite-difference step leaves the price range");
    if (pairs == 0) throw std::invalid_argument("need at least one pair");
    std::vector<double> diffs(pairs);
    parallel_for(pairs, threads, [&](std::size_t r) {
        RandomStream lo(seed, r), hi(seed, r);
        const double a_lo = simulate_mean_interarrival(model, service, price - h, n_eff, lo);
        const double a_hi = simulate_mean_interarrival(model, service, price + h, n_eff, hi);
        diffs[r] = ((price + h) / a_hi - (price - h) / a_lo) / (2.0 * h);
    });
    GradientOracle out;
    for (double d : diffs) out.value += d;
    out.value /= static_cast<double>(pairs);
    if (pairs > 1) {
        double ss = 0.0;
        for (double d : diffs) ss += (d - out.value) * (d - out.value);
        out.std_error = std::sqrt(ss / static_cast<double>(pairs - 1) / static_cast<double>(pairs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coupling of queues that differ only in their initial workload

struct CouplingReport {
    // Entry n-1 holds the replication mean after the n-th effective arrival.
    std::vector<double> mean_abs_dw;  // |W1_n - W2_n|
    std::vector<double> mean_abs_da;  // |A1_n - A2_n|
    std::vector<double> mean_abs_dt;  // |T1_n - T2_n|, arrival epochs
    double initial_abs_dw = 0.0;
    double slope = 0.0;       // least-squares slope of log mean_abs_dw against n
    double decay_rate = 0.0;  // exp(slope), empirical contraction per arrival
    std::size_t replications = 0;
    // First n with W1_n == W2_n, or -1 if the pair never coupled.
    std::vector<std::int64_t> coupling_step;
    // After coupling every later interarrival agreed exactly, so the epoch
    // gap stayed frozen.
    bool gap_frozen = true;
};

/// Least-squares slope of log(y_n) against n over the strictly positive y.
inline double log_linear_slope(const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0)) continue;
        const double x = static_cast<double>(i + 1), ly = std::log(y[i]);
        sx += x; sy += ly; sxx += x * x; sxy += x * ly;
        ++m;
    }
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    const double md = static_cast<double>(m);
    return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

inline CouplingReport run_coupling(const JoiningModel& model, const ServiceDistribution& service, double price,
                                   double w1_0, double w2_0, std::size_t n_steps, std::size_t replications,
                                   std::uint64_t seed, unsigned threads = 1) {
    if (n_steps == 0 || replications == 0) throw std::invalid_argument("need steps and replications");
    if (!(w1_0 >= 0.0) || !(w2_0 >= 0.0)) throw std::invalid_argument("initial workloads must be nonnegative");
    struct Path {
        std::vector<double> dw, da, dt;
        std::int64_t coupled_at = -1;
        bool frozen = true;
    };
    std::vector<Path> paths(replications);
    parallel_for(replications, threads, [&](std::size_t r) {
        RandomStream rng(seed, r);
        Path& path = paths[r];
        path.dw.resize(n_steps);
        path.da.resize(n_steps);
        path.dt.resize(n_steps);
        QueueState q1, q2;
        q1.workload_post = w1_0;
        q2.workload_post = w2_0;
        double gap = 0.0;  // running sum of interarrival differences
        for (std::size_t n = 0; n < n_steps; ++n) {
            const double z = rng.uniform_open();
            const double s = service.sample(rng);
            auto [n1, e1] = step(q1, model, price, z, s);
            auto [n2, e2] = step(q2, model, price, z, s);
            q1 = n1;
            q2 = n2;
            if (path.coupled_at >= 0 && e1.interarrival != e2.interarrival) path.frozen = false;
            gap += e1.interarrival - e2.interarrival;
            path.dw[n] = std::abs(q1.workload_post - q2.workload_post);
            path.da[n] = std::abs(e1.interarrival - e2.interarrival);
            path.dt[n] = std::abs(gap);
            if (path.coupled_at < 0 && q1.workload_post == q2.workload_post)
                path.coupled_at = static_cast<std::int64_t>(n + 1);
        }
    });
    CouplingReport rep;
    rep.replications = replications;
    rep.initial_abs_dw = std::abs(w1_0 - w2_0);
    rep.mean_abs_dw.assign(n_steps, 0.0);
    rep.mean_abs_da.assign(n_steps, 0.0);
    rep.mean_abs_dt.assign(n_steps, 0.0);
    for (const Path& path : paths) {
        for (std::size_t n = 0; n < n_steps; ++n) {
            rep.mean_abs_dw[n] += path.dw[n];
            rep.mean_abs_da[n] += path.da[n];
            rep.mean_abs_dt[n] += path.dt[n];
        }
        rep.coupling_step.push_back(path.coupled_at);
        rep.gap_frozen = rep.gap_frozen && path.frozen;
    }
    const double inv = 1.0 / static_cast<double>(replications);
    for (std::size_t n = 0; n < n_steps; ++n) {
        rep.mean_abs_dw[n] *= inv;
        rep.mean_abs_da[n] *= inv;
        rep.mean_abs_dt[n] *= inv;
    }
    rep.slope = log_linear_slope(rep.mean_abs_dw);
    rep.decay_rate = std::exp(rep.slope);
    return rep;
}

// ---------------------------------------------------------------------------
// Bias and variability of the gradient estimator

struct BiasVarianceRow {
    double t_star = 0.0;
    std::size_t replications = 0;
    double mean_grad = 0.0;
    double std_error = 0.0;
    double oracle_grad = 0.0;
    double bias_proxy = 0.0;     // mean_grad - oracle_grad
    double second_moment = 0.0;  // mean of grad^2
    double variance = 0.0;
    double mean_count = 0.0;
};

/// Replicates single windows from one frozen state reached after a burn-in at
/// the target price; replication r of window size j uses substream
/// (seed, 1 + j * replications + r).
inline std::vector<BiasVarianceRow> bias_variance_diagnostic(
    const JoiningModel& model, const ServiceDistribution& service, double price,
    const std::vector<double>& window_sizes, std::size_t replications, double oracle_grad,
    std::uint64_t seed, double burn_in_time = 1e4, unsigned threads = 1) {
    if (window_sizes.empty() || replications < 2) throw std::invalid_argument("need window sizes and >= 2 replications");
    for (std::size_t j = 1; j < window_sizes.size(); ++j)
        if (!(window_sizes[j] > window_sizes[j - 1])) throw std::invalid_argument("window sizes must increase");
    RandomStream burn_rng(seed, 0);
    const QueueState frozen = run_window(QueueState{}, model, price, burn_in_time, burn_rng, service).first;

    std::vector<BiasVarianceRow> rows;
    for (std::size_t j = 0; j < window_sizes.size(); ++j) {
        std::vector<double> grads(replications), counts(replications);
        parallel_for(replications, threads, [&](std::size_t r) {
            RandomStream rng(seed, 1 + j * replications + r);
            const WindowRecord rec = run_window(frozen, model, price, window_sizes[j], rng, service).second;
            grads[r] = estimate_psi_grad(rec).psi_grad_hat;
            counts[r] = static_cast<double>(rec.count);
        });
        BiasVarianceRow row;
        row.t_star = window_sizes[j];
        row.replications = replications;
        row.oracle_grad = oracle_grad;
        const double n = static_cast<double>(replications);
        for (std::size_t r = 0; r < replications; ++r) {
            row.mean_grad += grads[r];
            row.second_moment += grads[r] * grads[r];
            row.mean_count += counts[r];
        }
        row.mean_grad /= n;
        row.second_moment /= n;
        row.mean_count /= n;
        for (double g : grads) row.variance += (g - row.mean_grad) * (g - row.mean_grad);
        row.variance /= n - 1.0;
        row.std_error = std::sqrt(row.variance / n);
        row.bias_proxy = row.mean_grad - oracle_grad;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Regret

struct RegretReport {
    double p_star = 0.0;
    double psi_star = 0.0;
    double alpha = 0.0;
    std::vector<double> increments;  // Psi* T_k - p_{k-1} N_k
    std::vector<double> cumulative;
    std::vector<double> comparator;  // sum_{j<=k} T*_j j^{-alpha/2}
    std::vector<double> ratio;       // cumulative / comparator
    // Split of each increment: (Psi* - Psi_hat(p_{k-1})) T_k from the price
    // gap, and the remainder from not being in steady state.
    std::vector<double> suboptimal_price;
    std::vector<double> nonstationarity;
};

inline RegretReport compute_regret(const SgdTrace& trace, const PsiCurve& oracle, double alpha) {
    if (oracle.grid.empty()) throw std::invalid_argument("oracle curve is empty");
    RegretReport rep;
    rep.p_star = oracle.refined_price;
    rep.psi_star = oracle.refined_value;
    rep.alpha = alpha;
    double cum = 0.0, comp = 0.0;
    for (const SgdIteration& it : trace.iterations) {
        if (it.price < oracle.grid.front() - 1e-12 || it.price > oracle.grid.back() + 1e-12)
            throw std::invalid_argument("oracle grid does not cover the traced prices");
        const double inc = rep.psi_star * it.duration - it.revenue;
        const double sub = (rep.psi_star - oracle.interpolate(it.price)) * it.duration;
        cum += inc;
        comp += it.t_star * std::pow(static_cast<double>(it.k), -alpha / 2.0);
        rep.increments.push_back(inc);
        rep.cumulative.push_back(cum);
        rep.comparator.push_back(comp);
        rep.ratio.push_back(cum / comp);
        rep.suboptimal_price.push_back(sub);
        rep.nonstationarity.push_back(inc - sub);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Service-time study

struct ServiceStudyRow {
    ServiceDistribution service;
    PsiCurve curve;
};

/// One revenue curve per service law; curve i uses seed + i.
inline std::vector<ServiceStudyRow> service_study(const JoiningModel& model,
                                                  const std::vector<ServiceDistribution>& services,
                                                  const std::vector<double>& grid, std::uint64_t n_eff,
                                                  std::uint64_t seed, PsiCurveOptions options = {}) {
    std::vector<ServiceStudyRow> rows;
    for (std::size_t i = 0; i < services.size(); ++i)
        rows.push_back({services[i], estimate_psi_curve(model, services[i], grid, n_eff, seed + i, options)});
    return rows;
}

}  // namespace dynprice
