#include <gtest/gtest.h>

#include <vector>

#include "dynprice/random.hpp"
#include "dynprice/service_dist.hpp"
#include "oracles.hpp"

using namespace dynprice;

namespace {

std::vector<double> draws(const ServiceDistribution& d, std::size_t n, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample(d, rng);
    return xs;
}

}  // namespace

TEST(ServiceDistribution, DeterministicIsConstant) {
    for (double x : draws(ServiceDistribution::deterministic(1.5), 1000, 1)) EXPECT_EQ(x, 1.5);
}

TEST(ServiceDistribution, ExponentialMean) {
    const auto m = oracle::moments(draws(ServiceDistribution::exponential(2.0), 1000000, 2));
    EXPECT_NEAR(m.mean, 0.5, 0.002);
    EXPECT_NEAR(m.variance, 0.25, 0.005);
}

TEST(ServiceDistribution, GammaShapeBelowOneMoments) {
    const auto d = ServiceDistribution::gamma(0.5, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(d.mean(), 1.5);
    EXPECT_DOUBLE_EQ(d.variance(), 4.5);
    const auto m = oracle::moments(draws(d, 1000000, 3));
    EXPECT_NEAR(m.mean, 1.5, 0.01);
    EXPECT_NEAR(m.variance, 4.5, 0.1);
}

TEST(ServiceDistribution, GammaShapeAboveOneMoments) {
    const auto m = oracle::moments(draws(ServiceDistribution::gamma(4.0, 4.0), 1000000, 4));
    EXPECT_NEAR(m.mean, 1.0, 0.002);
    EXPECT_NEAR(m.variance, 0.25, 0.003);
}

TEST(ServiceDistribution, GammaMatchesCdfByKs) {
    // Gamma(1, rate) is Exp(rate); Gamma(0.5, 1/2) is chi-square with one degree of freedom.
    auto xs = draws(ServiceDistribution::gamma(0.5, 0.5), 100000, 5);
    const double d = oracle::ks_distance(xs, [](double x) { return std::erf(std::sqrt(x / 2.0)); });
    EXPECT_LT(d, oracle::ks_critical_1pct(xs.size()));
}

TEST(ServiceDistribution, SamplesNonnegative) {
    for (const auto& d : {ServiceDistribution::exponential(0.1), ServiceDistribution::gamma(0.05, 2.0),
                          ServiceDistribution::deterministic(0.0)})
        for (double x : draws(d, 100000, 6)) EXPECT_GE(x, 0.0);
}

TEST(ServiceDistribution, SameSeedSameStream) {
    const auto d = ServiceDistribution::gamma(0.5, 1.0 / 3.0);
    EXPECT_EQ(draws(d, 1000, 9), draws(d, 1000, 9));
    EXPECT_NE(draws(d, 1000, 9), draws(d, 1000, 10));
}

TEST(ServiceDistribution, RejectsInvalidParameters) {
    EXPECT_THROW(ServiceDistribution::exponential(0.0), std::invalid_argument);
    EXPECT_THROW(ServiceDistribution::gamma(-1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(ServiceDistribution::gamma(1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(ServiceDistribution::deterministic(-0.1), std::invalid_argument);
}

TEST(ServiceDistribution, DescribeIsCanonical) {
    EXPECT_EQ(ServiceDistribution::exponential(2.0).describe(), "exponential(2)");
    EXPECT_EQ(ServiceDistribution::gamma(0.5, 1.0 / 3.0).describe(), "gamma(0.5, 0.33333333333333331)");
    EXPECT_EQ(ServiceDistribution::deterministic(1.5).describe(), "deterministic(1.5)");
}

TEST(RandomStream, SubstreamsAreReproducibleAndDistinct) {
    RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
}

TEST(RandomStream, UniformIsOpen) {
    RandomStream rng(1);
    for (int i = 0; i < 1000000; ++i) {
        const double u = rng.uniform_open();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}
