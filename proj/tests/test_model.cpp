#include <doctest.h>

#include <cmath>
#include <functional>

#include "dynascore/errors.hpp"
#include "dynascore/model.hpp"

using namespace dynascore;

namespace {

/// phi from a central difference of F, independent of the analytic density.
double phi_by_difference(const ValueDistribution& d, double v, double h = 1e-6) {
    const double a = std::max(d.lo(), v - h);
    const double b = std::min(d.hi(), v + h);
    const double f = (d.cdf(b) - d.cdf(a)) / (b - a);
    return v - (1.0 - d.cdf(v)) / f;
}

double bisect_root(double lo, double hi, const std::function<double(double)>& g) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Forward Euler on d mu = lambda mu (1 - mu) dt.
double euler_belief(double p, double lambda, double t, double dt) {
    double mu = p;
    const auto steps = static_cast<long>(std::llround(t / dt));
    const double h = t / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) mu += h * lambda * mu * (1.0 - mu);
    return mu;
}

}  // namespace

TEST_CASE("virtual value of the uniform law") {
    const auto u = ValueDistribution::uniform();
    CHECK(virtual_value(u, 1.0) == doctest::Approx(1.0));
    CHECK(virtual_value(u, 0.75) == doctest::Approx(0.5));
    CHECK(virtual_value(u, 0.75) == doctest::Approx(phi_by_difference(u, 0.75)).epsilon(1e-6));
    const double root = bisect_root(0.01, 1.0, [&](double v) { return phi_by_difference(u, v); });
    CHECK(virtual_value(u, 0.5) == doctest::Approx(0.0));
    CHECK(root == doctest::Approx(0.5).epsilon(1e-6));
    CHECK_THROWS_AS(virtual_value(u, 1.5), Error);
}

TEST_CASE("virtual value matches a difference of the CDF for the power law") {
    const auto d = ValueDistribution::power(2.0);
    for (double v : {0.2, 0.5, 0.9}) {
        CHECK(virtual_value(d, v) == doctest::Approx(phi_by_difference(d, v)).epsilon(1e-6));
        CHECK(weighted_virtual_value(d, v) == doctest::Approx(d.density(v) * virtual_value(d, v)));
    }
}

TEST_CASE("belief without news") {
    MarketParams m;
    CHECK(belief_no_news(m, 0.0) == 0.5);
    CHECK(belief_no_news(m, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(belief_no_news(m, std::log(3.0)) == doctest::Approx(euler_belief(0.5, 1.0, std::log(3.0), 1e-5)).epsilon(1e-5));
    CHECK(std::abs(belief_no_news(m, 1e3) - 1.0) <= 1e-9);
    CHECK_THROWS_AS(belief_no_news(m, -1.0), Error);

    m.lambda = 2.0;
    CHECK(belief_no_news(m, 0.3) == doctest::Approx(euler_belief(0.5, 2.0, 0.3, 1e-6)).epsilon(1e-5));
}

TEST_CASE("belief state of a world") {
    MarketParams m;
    const WorldRealization quiet{{1, 1}, {kInfinity, kInfinity}};
    CHECK(belief_at(m, quiet, 0.0).mu == std::vector<double>{0.5, 0.5});
    const auto later = belief_at(m, quiet, std::log(3.0));
    CHECK(later.mu[0] == doctest::Approx(0.75));
    CHECK(later.mu[1] == doctest::Approx(belief_no_news(m, std::log(3.0))));

    const WorldRealization ticked{{1, 0}, {kInfinity, 3.0}};
    const auto s = belief_at(m, ticked, 4.0);
    CHECK(s.mu[0] == doctest::Approx(belief_no_news(m, 4.0)));
    CHECK(s.mu[1] == 0.0);
    CHECK(belief_at(m, ticked, 2.9).mu[1] == doctest::Approx(belief_no_news(m, 2.9)));
}

TEST_CASE("world sampling") {
    rng::Stream s(11);
    MarketParams m;
    m.p = 1.0;
    const auto good = sample_world(m, s);
    CHECK(good.theta == std::vector<int>{1, 1});
    CHECK(std::isinf(good.clocks[0]));
    CHECK(std::isinf(good.clocks[1]));
    m.p = 0.0;
    const auto bad = sample_world(m, s);
    CHECK(bad.theta == std::vector<int>{0, 0});
    CHECK(std::isfinite(bad.clocks[0]));
    CHECK(std::isfinite(bad.clocks[1]));

    m.p = 0.5;
    double theta_sum = 0.0;
    double clock_sum = 0.0;
    std::size_t finite = 0;
    const std::size_t draws = 1000000;
    for (std::size_t i = 0; i < draws; ++i) {
        const auto w = sample_world(m, s);
        CHECK_UNARY(w.valid());
        for (std::size_t j = 0; j < w.size(); ++j) {
            theta_sum += w.theta[j];
            if (std::isfinite(w.clocks[j])) {
                clock_sum += w.clocks[j];
                ++finite;
            }
        }
    }
    CHECK(std::abs(theta_sum / (2.0 * draws) - 0.5) <= 0.002);
    CHECK(clock_sum / static_cast<double>(finite) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("value sampling") {
    const auto u = ValueDistribution::uniform();
    CHECK(u.quantile(0.5) == 0.5);
    rng::Stream s(5);
    const auto draws = sample_values(u, 1000000, s);
    double sum = 0.0;
    for (double v : draws) sum += v;
    CHECK(std::abs(sum / static_cast<double>(draws.size()) - 0.5) <= 0.002);

    const auto table = ValueDistribution::tabulated({0.2, 0.5, 1.5}, {0.0, 0.7, 1.0});
    for (const auto& d : {u, ValueDistribution::power(2.0, 3.0), table}) {
        for (double v : sample_values(d, 10000, s)) {
            CHECK_UNARY(v >= d.lo());
            CHECK_UNARY(v <= d.hi());
        }
    }
}

TEST_CASE("quantile inverts the CDF") {
    const auto table = ValueDistribution::tabulated({0.0, 0.3, 0.6, 1.0}, {0.0, 0.2, 0.9, 1.0});
    for (const auto& d : {ValueDistribution::uniform(), ValueDistribution::power(2.0), ValueDistribution::power(0.5, 2.0), table}) {
        for (int i = 0; i <= 100; ++i) {
            const double q = i / 100.0;
            CHECK(std::abs(d.cdf(d.quantile(q)) - q) <= 1e-8);
        }
    }
}

TEST_CASE("regularity scan") {
    CHECK_UNARY(check_regularity(ValueDistribution::uniform(), 1000).regular);
    CHECK_UNARY(check_regularity(ValueDistribution::power(2.0), 1000).regular);

    // Dense, sparse, dense: phi falls where the density drops at 0.2.
    const auto bimodal = ValueDistribution::tabulated({0.0, 0.2, 0.8, 1.0}, {0.0, 0.45, 0.55, 1.0});
    const auto report = check_regularity(bimodal, 1001);
    CHECK_FALSE(report.regular);
    REQUIRE(report.violation_at.has_value());
    CHECK(*report.violation_at == doctest::Approx(0.2).epsilon(0.01));
    CHECK(report.drop > 0.0);
}

TEST_CASE("beliefs are a martingale") {
    MarketParams m;
    m.p = 0.4;
    m.lambda = 1.5;
    const std::size_t n = 100000;
    for (double t : {0.5, 2.0}) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rng::Stream s(rng::derive_seed(99, i));
            const double mu = belief_at(m, sample_world(m, s), t).mu[0];
            sum += mu;
            sq += mu * mu;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
        CHECK(std::abs(mean - m.p) <= 3.0 * se);
    }
}

TEST_CASE("beliefs are consistent") {
    MarketParams m;
    m.n = 3;
    const double t = 1e3 / m.lambda;
    for (std::size_t i = 0; i < 10000; ++i) {
        rng::Stream s(rng::derive_seed(3, i));
        const auto w = sample_world(m, s);
        const auto b = belief_at(m, w, t);
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w.theta[j] == 1) {
                CHECK(std::abs(b.mu[j] - 1.0) <= 1e-6);
            } else if (w.clocks[j] <= t) {
                CHECK(b.mu[j] == 0.0);
            }
        }
    }
}

TEST_CASE("market parameter validation") {
    MarketParams m;
    CHECK_NOTHROW(m.validate());
    m.p = 1.2;
    CHECK_THROWS_AS(m.validate(), Error);
    m = {};
    m.lambda = 0.0;
    CHECK_THROWS_AS(m.validate(), Error);
    m = {};
    m.n = 1;
    CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("streams are reproducible and independent") {
    rng::Stream a(rng::derive_seed(1, 0));
    rng::Stream b(rng::derive_seed(1, 0));
    rng::Stream c(rng::derive_seed(1, 1));
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        CHECK(x != c());
    }
}
