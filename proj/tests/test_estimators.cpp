#include <gtest/gtest.h>

#include <cmath>

#include "dynprice/analysis.hpp"
#include "dynprice/estimators.hpp"
#include "oracles.hpp"

using namespace dynprice;

namespace {

WindowRecord record(std::vector<double> a, std::vector<double> g, double price = 1.0) {
    WindowRecord r;
    r.price = price;
    r.interarrivals = std::move(a);
    r.grad_interarrivals = std::move(g);
    r.count = r.interarrivals.size();
    for (double x : r.interarrivals) r.duration += x;
    return r;
}

const JoiningModel kExp = JoiningModel::exponential(0.1, 0.2, 20.0);
const JoiningModel kPoly = JoiningModel::polynomial(0.1, 0.2, 20.0);
const ServiceDistribution kExp2 = ServiceDistribution::exponential(2.0);

}  // namespace

TEST(EstimateA, Arithmetic) {
    EXPECT_DOUBLE_EQ(estimate_a(record({2, 3, 5}, {0, 0, 0})), 10.0 / 3.0);
    EXPECT_DOUBLE_EQ(estimate_a(record({0.7}, {0.1})), 0.7);
}

TEST(EstimateGradA, MeanOfSamples) {
    EXPECT_EQ(estimate_grad_a(record({1, 1}, {0, 0})), 0.0);
    EXPECT_DOUBLE_EQ(estimate_grad_a(record({1, 2, 3}, {0.1, 0.2, 0.6})), 0.3);
}

TEST(Estimators, EmptyRecordRejected) {
    const WindowRecord empty;
    EXPECT_THROW(estimate_a(empty), std::invalid_argument);
    EXPECT_THROW(estimate_grad_a(empty), std::invalid_argument);
    EXPECT_THROW(estimate_psi_grad(empty), std::invalid_argument);
}

TEST(PsiGradient, PlugIn) {
    EXPECT_DOUBLE_EQ(psi_gradient(5.0, 1.0, 0.0).psi_grad_hat, 1.0);
    EXPECT_DOUBLE_EQ(psi_gradient(4.0, 2.0, 0.5).psi_grad_hat, 0.0);
    const GradientEstimate g = estimate_psi_grad(record({2, 3, 5}, {0.3, 0.3, 0.3}, 6.0));
    EXPECT_DOUBLE_EQ(g.psi_hat, 6.0 / (10.0 / 3.0));
    EXPECT_DOUBLE_EQ(g.a_hat, 10.0 / 3.0);
    EXPECT_DOUBLE_EQ(g.grad_a_hat, 0.3);
}

TEST(EstimateGradA, ExponentialFamilyWithinBound) {
    RandomStream rng(1);
    QueueState s;
    for (double p : {1.0, 10.0, 20.0, 30.0}) {
        for (int k = 0; k < 20; ++k) {
            auto [next, rec] = run_window(s, kExp, p, 200.0, rng, kExp2);
            s = next;
            const double g = estimate_grad_a(rec);
            EXPECT_GE(g, 0.0);
            EXPECT_LE(g, kExp.gradient_bound()) << "p=" << p;
            EXPECT_GT(estimate_a(rec), 0.0);
        }
    }
}

TEST(EstimateGradA, ExceedsRatioBoundWhenQueueIsMostlyEmpty) {
    // With the queue nearly always empty, A is close to Exp(Lambda e^{-theta1 p})
    // and dE[A]/dp approaches theta1 e^{theta1 p} / Lambda, which passes
    // theta1/theta2 once e^{theta1 p} > Lambda/theta2.
    const double p = 50.0;
    RandomStream rng(2);
    QueueState s = run_window(QueueState{}, kExp, p, 1e3, rng, kExp2).first;
    double sum = 0.0;
    for (int k = 0; k < 20; ++k) {
        auto [next, rec] = run_window(s, kExp, p, 1e4, rng, kExp2);
        s = next;
        sum += estimate_grad_a(rec);
    }
    const double empty_queue = 0.1 * std::exp(0.1 * p) / 20.0;
    EXPECT_GT(sum / 20, kExp.gradient_bound());
    EXPECT_NEAR(sum / 20, empty_queue, 0.1 * empty_queue);
}

TEST(EstimateGradA, LongWindowMatchesFiniteDifference) {
    // Central difference of the long-run mean interarrival with common seeds.
    const double p = 15.0, h = 0.1;
    RandomStream lo(11), hi(11);
    const double fd = (simulate_mean_interarrival(kPoly, kExp2, p + h, 2000000, hi) -
                       simulate_mean_interarrival(kPoly, kExp2, p - h, 2000000, lo)) /
                      (2 * h);
    RandomStream rng(12);
    QueueState s = run_window(QueueState{}, kPoly, p, 1e3, rng, kExp2).first;
    double sum = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        auto [next, rec] = run_window(s, kPoly, p, 1e4, rng, kExp2);
        s = next;
        sum += estimate_grad_a(rec);
    }
    EXPECT_NEAR(sum / reps, fd, 0.05 * std::abs(fd));
}

TEST(EstimatePsiGrad, NearStationaryAtOptimum) {
    // Grid optimum of the polynomial example with Exp(2) service.
    const double p_star = 9.45;
    RandomStream rng(13);
    QueueState s = run_window(QueueState{}, kPoly, p_star, 1e3, rng, kExp2).first;
    double sum = 0.0;
    for (int r = 0; r < 50; ++r) {
        auto [next, rec] = run_window(s, kPoly, p_star, 1e4, rng, kExp2);
        s = next;
        sum += estimate_psi_grad(rec).psi_grad_hat;
    }
    EXPECT_LT(std::abs(sum / 50), 0.1);
}

TEST(EstimatePsiGrad, SpreadShrinksWithWindow) {
    const double p = 5.0;
    std::vector<double> sd;
    for (double t : {1e2, 1e3, 1e4}) {
        const auto rows = bias_variance_diagnostic(kPoly, kExp2, p, {t}, 100, 0.0, 21, 1e3);
        sd.push_back(std::sqrt(rows[0].variance));
    }
    EXPECT_GT(sd[0], sd[1]);
    EXPECT_GT(sd[1], sd[2]);
}
