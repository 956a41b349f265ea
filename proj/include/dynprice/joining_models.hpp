#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace dynprice {

enum class JoiningFamily { Exponential, Polynomial, GenericNumeric };

inline const char* to_string(JoiningFamily f) {
    switch (f) {
        case JoiningFamily::Exponential: return "exponential";
        case JoiningFamily::Polynomial: return "polynomial";
        case JoiningFamily::GenericNumeric: return "generic";
    }
    return "?";
}

/// Raised when quadrature or root finding misses its tolerance.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Joining probability H(p, v): chance that a potential customer quoted price
/// p with prospective wait v joins.
using JoiningFunction = std::function<double(double price, double wait)>;

struct NumericTolerances {
    double quadrature_abs = 1e-10;
    double quadrature_rel = 1e-13;
    unsigned max_depth = 12;
    double fd_relative_step = 1e-6;
};

/// A parametric joining-probability family together with the potential
/// arrival rate. Immutable.
class JoiningModel {
public:
    static JoiningModel exponential(double theta1, double theta2, double lambda) {
        return JoiningModel(JoiningFamily::Exponential, theta1, theta2, lambda, {}, {});
    }

    static JoiningModel polynomial(double theta1, double theta2, double lambda) {
        return JoiningModel(JoiningFamily::Polynomial, theta1, theta2, lambda, {}, {});
    }

    /// Arbitrary H handled by quadrature and root finding. `h` must map
    /// [0,inf)^2 into [0,1], be positive, and be nonincreasing in the wait.
    static JoiningModel generic(JoiningFunction h, double theta1, double theta2, double lambda,
                                NumericTolerances tol = {}) {
        if (!h) throw std::invalid_argument("generic joining model needs a joining function");
        return JoiningModel(JoiningFamily::GenericNumeric, theta1, theta2, lambda, std::move(h), tol);
    }

    /// Same H evaluated through the generic numeric path.
    JoiningModel as_generic(NumericTolerances tol = {}) const {
        JoiningModel self = *this;
        return generic([self](double p, double v) { return self.h(p, v); }, theta1_, theta2_,
                       lambda_, tol);
    }

    JoiningFamily family() const noexcept { return family_; }
    double theta1() const noexcept { return theta1_; }
    double theta2() const noexcept { return theta2_; }
    double lambda() const noexcept { return lambda_; }
    const NumericTolerances& tolerances() const noexcept { return tol_; }

    /// Uniform bound on pathwise price gradients (exponential family only).
    double gradient_bound() const noexcept { return theta1_ / theta2_; }

    double h(double price, double wait) const {
        switch (family_) {
            case JoiningFamily::Exponential: return std::exp(-theta1_ * price - theta2_ * wait);
            case JoiningFamily::Polynomial:
                return 1.0 / (1.0 + theta1_ * price * price + theta2_ * wait * wait);
            case JoiningFamily::GenericNumeric: return h_(price, wait);
        }
        return 0.0;
    }

    void check_price(double price) const {
        if (!(price >= 0.0) || !std::isfinite(price))
            throw std::domain_error("price outside joining model support: " + std::to_string(price));
    }

private:
    JoiningModel(JoiningFamily family, double theta1, double theta2, double lambda,
                 JoiningFunction h, NumericTolerances tol)
        : family_(family), theta1_(theta1), theta2_(theta2), lambda_(lambda), h_(std::move(h)),
          tol_(tol) {
        if (!(theta1 > 0.0) || !(theta2 > 0.0) || !(lambda > 0.0))
            throw std::invalid_argument("joining model requires theta1, theta2, lambda > 0");
    }

    JoiningFamily family_;
    double theta1_;
    double theta2_;
    double lambda_;
    JoiningFunction h_;
    NumericTolerances tol_;
};

/// H(p, V).
inline double eval_h(const JoiningModel& model, double price, double wait) {
    model.check_price(price);
    if (!(wait >= 0.0)) throw std::domain_error("wait must be nonnegative");
    return model.h(price, wait);
}

/// Inverse-transform output: the interarrival time and its partials in price
/// (workload held fixed) and in the initial workload (price held fixed).
struct InverseSample {
    double interarrival;
    double partial_p;
    double partial_w;
    bool busy;  // arrival before the workload drained
};

namespace detail {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Integrated joining intensity divided by Lambda: y = -log(1 - zeta) / Lambda.
inline double intensity_target(double seed, double lambda) { return -std::log1p(-seed) / lambda; }

}  // namespace detail

/// Law of the effective interarrival time at price p given the workload w
/// just after the previous effective arrival:
///   F(l) = 1 - exp(-Lambda J(l)),  J(l) = int_0^l H(p, (w - t)^+) dt.
/// Lightweight view; the model must outlive it.
class InterarrivalLaw {
public:
    InterarrivalLaw(const JoiningModel& model, double price, double initial_workload)
        : model_(&model), price_(price), w_(initial_workload) {
        model.check_price(price);
        if (!(initial_workload >= 0.0) || !std::isfinite(initial_workload))
            throw std::domain_error("initial workload must be finite and nonnegative");
        switch (model.family()) {
            case JoiningFamily::Exponential: {
                const double q = -std::expm1(-model.theta2() * w_) / model.theta2();
                j_at_w_ = std::exp(-model.theta1() * price_) * q;
                break;
            }
            case JoiningFamily::Polynomial: {
                const double a = 1.0 + model.theta1() * price_ * price_;
                const double sc = std::sqrt(model.theta2() * a);
                j_at_w_ = std::atan(std::sqrt(model.theta2() / a) * w_) / sc;
                break;
            }
            case JoiningFamily::GenericNumeric: j_at_w_ = generic_busy_integral(price_, w_, w_); break;
        }
        cdf_at_w_ = -std::expm1(-model.lambda() * j_at_w_);
    }

    const JoiningModel& model() const noexcept { return *model_; }
    double price() const noexcept { return price_; }
    double initial_workload() const noexcept { return w_; }

    /// F(w; w): probability the next effective arrival comes before the
    /// current workload drains. Seeds below it fall on the busy branch.
    double branch_point() const noexcept { return cdf_at_w_; }

    /// J(l; p, w).
    double integrated_intensity(double ell) const {
        const JoiningModel& m = *model_;
        switch (m.family()) {
            case JoiningFamily::Exponential: {
                const double t1p = m.theta1() * price_, t2 = m.theta2();
                if (ell < w_) return std::exp(-t1p - t2 * (w_ - ell)) * (-std::expm1(-t2 * ell)) / t2;
                return std::exp(-t1p) * (-std::expm1(-t2 * w_) / t2 + (ell - w_));
            }
            case JoiningFamily::Polynomial: {
                const double a = 1.0 + m.theta1() * price_ * price_;
                const double t2 = m.theta2();
                if (ell < w_) {
                    const double v = w_ - ell;
                    const double k = std::sqrt(t2 / a);
                    return std::atan(k * ell / (1.0 + t2 * w_ * v / a)) / std::sqrt(t2 * a);
                }
                return j_at_w_ + (ell - w_) / a;
            }
            case JoiningFamily::GenericNumeric: {
                if (ell < w_) return generic_busy_integral(price_, w_, ell);
                return j_at_w_ + (ell - w_) * m.h(price_, 0.0);
            }
        }
        return 0.0;
    }

    double cdf(double ell) const {
        if (!(ell >= 0.0)) throw std::domain_error("cdf argument must be nonnegative");
        return -std::expm1(-model_->lambda() * integrated_intensity(ell));
    }

    double inverse_cdf(double seed) const { return invert(seed).interarrival; }

    /// F^{-1}(seed) with both pure partials. Ties at the branch point go to
    /// the idle branch.
    InverseSample invert(double seed) const {
        if (!(seed > 0.0 && seed < 1.0)) throw std::domain_error("seed must lie in (0,1)");
        const JoiningModel& m = *model_;
        const double y = detail::intensity_target(seed, m.lambda());
        const bool busy = seed < cdf_at_w_;
        switch (m.family()) {
            case JoiningFamily::Exponential: return invert_exponential(y, busy);
            case JoiningFamily::Polynomial: return invert_polynomial(y, busy);
            case JoiningFamily::GenericNumeric: return invert_generic(seed, busy);
        }
        return {};
    }

private:
    InverseSample invert_exponential(double y, bool busy) const {
        const JoiningModel& m = *model_;
        const double t1 = m.theta1(), t2 = m.theta2();
        if (busy) {
            // l = log(1 + t2 y e^{t1 p + t2 w}) / t2, evaluated in log space.
            const double z = std::log(t2 * y) + t1 * price_ + t2 * w_;
            const double sig = detail::logistic(z);
            return {detail::softplus(z) / t2, (t1 / t2) * sig, sig, true};
        }
        const double scaled = y * std::exp(t1 * price_);
        const double drained = -std::expm1(-t2 * w_);
        return {w_ - drained / t2 + scaled, t1 * scaled, drained, false};
    }

    InverseSample invert_polynomial(double y, bool busy) const {
        const JoiningModel& m = *model_;
        const double t1 = m.theta1(), t2 = m.theta2();
        const double a = 1.0 + t1 * price_ * price_;
        const double sc = std::sqrt(t2 * a);
        const double c_over_s = std::sqrt(a / t2);
        const double dadp = 2.0 * t1 * price_;
        const double denom_w = a + t2 * w_ * w_;
        if (busy) {
            // tan(atan(u) - B) expanded to avoid cancellation when l << w.
            const double u = w_ / c_over_s;
            const double t = std::tan(sc * y);
            const double ell = std::min(w_, c_over_s * t * (1.0 + u * u) / (1.0 + u * t));
            const double v = w_ - ell;
            const double denom_v = a + t2 * v * v;
            const double dK = ell * (a - t2 * w_ * v) / (2.0 * a * denom_w * denom_v) +
                              std::atan((ell / c_over_s) / (1.0 + t2 * w_ * v / a)) / (2.0 * a * sc);
            const double dp = dadp * dK * denom_v;
            const double dw = t2 * ell * (w_ + v) / denom_w;
            return {ell, dp, dw, true};
        }
        const double ell = w_ + a * (y - j_at_w_);
        const double dp = dadp * y - 0.5 * dadp * j_at_w_ + 0.5 * dadp * w_ / denom_w;
        const double dw = t2 * w_ * w_ / denom_w;
        return {ell, dp, dw, false};
    }

    // int_{w-ell}^{w} H(p, v) dv for 0 <= ell <= w.
    double generic_busy_integral(double price, double w, double ell) const {
        if (ell <= 0.0) return 0.0;
        const JoiningModel& m = *model_;
        double err = 0.0;
        auto f = [&](double v) { return m.h(price, v); };
        const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            f, w - ell, w, m.tolerances().max_depth, m.tolerances().quadrature_rel, &err);
        const double abs_err = err * 0.5 * ell;
        if (abs_err > m.tolerances().quadrature_abs)
            throw NumericError("quadrature of joining intensity did not converge", abs_err);
        return val;
    }

    // Generic busy-branch root of J(l) = y on [0, w]; the idle branch is exact
    // because H is constant once the workload has drained.
    double generic_inverse_value(double price, double w, double seed) const {
        const JoiningModel& m = *model_;
        const double y = detail::intensity_target(seed, m.lambda());
        const double j_w = generic_busy_integral(price, w, w);
        const double f_w = -std::expm1(-m.lambda() * j_w);
        if (!(seed < f_w)) return w + (y - j_w) / m.h(price, 0.0);
        auto g = [&](double ell) { return generic_busy_integral(price, w, ell) - y; };
        std::uintmax_t iters = 200;
        const auto [lo, hi] = boost::math::tools::toms748_solve(
            g, 0.0, w, -y, j_w - y, boost::math::tools::eps_tolerance<double>(52), iters);
        double ell = 0.5 * (lo + hi);
        // Newton polish: dJ/dl = H(p, w - l).
        for (int i = 0; i < 2; ++i) {
            const double slope = m.h(price, w - ell);
            if (!(slope > 0.0)) break;
            ell = std::clamp(ell - g(ell) / slope, lo, hi);
        }
        return ell;
    }

    InverseSample invert_generic(double seed, bool busy) const {
        const double rel = model_->tolerances().fd_relative_step;
        const double ell = generic_inverse_value(price_, w_, seed);
        auto diff = [&](double x, auto&& eval) {
            const double h = rel * std::max(1.0, std::abs(x));
            if (x >= h) return (eval(x + h) - eval(x - h)) / (2.0 * h);
            return (eval(x + h) - eval(x)) / h;
        };
        const double dp = diff(price_, [&](double p) {
            return p == price_ ? ell : generic_inverse_value(p, w_, seed);
        });
        const double dw = diff(w_, [&](double w) {
            return w == w_ ? ell : generic_inverse_value(price_, w, seed);
        });
        return {ell, dp, dw, busy};
    }

    const JoiningModel* model_;
    double price_;
    double w_;
    double j_at_w_ = 0.0;
    double cdf_at_w_ = 0.0;
};

inline double cdf(const InterarrivalLaw& law, double ell) { return law.cdf(ell); }
inline double inverse_cdf(const InterarrivalLaw& law, double seed) { return law.inverse_cdf(seed); }
inline double partial_p_inverse(const InterarrivalLaw& law, double seed) { return law.invert(seed).partial_p; }
inline double partial_w_inverse(const InterarrivalLaw& law, double seed) { return law.invert(seed).partial_w; }

/// int_1^2 e^{-t x} / x^m dx.
inline double truncated_exponential_integral(unsigned m, double t, double tol = 1e-12) {
    double err = 0.0;
    auto f = [&](double x) { return std::exp(-t * x) / std::pow(x, static_cast<double>(m)); };
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1.0, 2.0, 25, tol, &err);
    if (err * 0.5 > tol) throw NumericError("E_m quadrature did not converge", err * 0.5);
    return val;
}

/// Same bound at a given rate parameter t.
inline double xi_moment_bound_at(double t, unsigned m, double tol = 1e-12) {
    if (!(t > 0.0)) throw std::invalid_argument("rate parameter must be positive");
    // t e^t E_m(t) = t int_1^2 e^{-t(x-1)} / x^m dx, keeps e^t from overflowing.
    double err = 0.0;
    auto f = [&](double x) { return std::exp(-t * (x - 1.0)) / std::pow(x, static_cast<double>(m)); };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1.0, 2.0, 25, tol, &err);
    if (err * 0.5 > tol) throw NumericError("E_m quadrature did not converge", err * 0.5);
    return t * integral + std::exp(-t);
}

/// Upper bound t e^t E_m(t) + e^{-t} on the m-th moment of the workload
/// contraction factor, with t = (Lambda/theta2) e^{-theta1 p}.
inline double xi_moment_bound(const JoiningModel& model, double price, unsigned m, double tol = 1e-12) {
    if (model.family() != JoiningFamily::Exponential)
        throw std::invalid_argument("xi_moment_bound is only defined for the exponential family");
    if (m == 0) throw std::invalid_argument("moment order must be positive");
    model.check_price(price);
    const double t = model.lambda() / model.theta2() * std::exp(-model.theta1() * price);
    return xi_moment_bound_at(t, m, tol);
}

}  // namespace dynprice
