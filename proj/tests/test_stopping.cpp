#include <doctest.h>

#include <cmath>

#include "dynascore/errors.hpp"
#include "dynascore/oracle.hpp"
#include "dynascore/revenue.hpp"
#include "dynascore/stopping.hpp"

using namespace dynascore;

namespace {

WorldRealization world(std::vector<int> theta, std::vector<double> clocks) {
    return {std::move(theta), std::move(clocks)};
}

/// Time for the no-news belief ODE to reach `target`, by forward Euler.
double euler_hitting_time(double mu0, double target, double lambda, double dt) {
    double mu = mu0;
    double t = 0.0;
    while (mu < target) {
        const double step = lambda * mu * (1.0 - mu);
        if (mu + dt * step >= target) return t + (target - mu) / step;
        mu += dt * step;
        t += dt;
    }
    return t;
}

}  // namespace

TEST_CASE("second-price timing ignores bids") {
    CHECK(spa_stop({{0.9, 0.4}}).kind == PolicyKind::StopNow);
    CHECK(spa_stop({{0.4, 0.4}}).kind == PolicyKind::StopNow);
    CHECK(spa_stop({{0.0, 0.0}}).kind == PolicyKind::StopNow);
    rng::Stream s(17);
    for (int i = 0; i < 10000; ++i) {
        const BidProfile b{{s.uniform(), s.uniform()}};
        CHECK(spa_stop(b).kind == PolicyKind::StopNow);
    }
}

TEST_CASE("first-price stops in the limit") {
    const BidProfile b{{0.9, 0.4}};
    CHECK(fpa_stop(b, world({1, 1}, {kInfinity, kInfinity})).realized_revenue == 0.9);
    CHECK(fpa_stop(b, world({0, 1}, {0.7, kInfinity})).realized_revenue == 0.4);
    CHECK(fpa_stop(b, world({0, 0}, {0.7, 1.2})).realized_revenue == 0.0);
    CHECK(std::isinf(fpa_stop(b, world({0, 1}, {0.7, kInfinity})).exercise_time));
}

TEST_CASE("second-price policy with reserve") {
    CHECK(spa_reserve_policy({{0.9, 0.85}}, 0.4).kind == PolicyKind::StopNow);
    CHECK(spa_reserve_policy({{0.9, 0.6}}, 0.4).kind == PolicyKind::ContinueUntilNews);
    const auto none = spa_reserve_policy({{0.3, 0.2}}, 0.4);
    CHECK(none.kind == PolicyKind::StopNow);
    CHECK(none.note.find("no sale") != std::string::npos);
}

TEST_CASE("second-price reserve value") {
    CHECK(spa_reserve_value(0.5, 0.6, 0.4) == doctest::Approx(0.35));
    CHECK(spa_reserve_value(1.0, 0.6, 0.4) == doctest::Approx(0.6));
    CHECK(spa_reserve_value(0.5, 0.9, 0.4) == doctest::Approx(0.45));

    const DPResult dp = dp_solve(spa_reserve_dp(0.6, 0.4));
    const auto mid = static_cast<std::size_t>(std::llround(0.5 / 1e-3));
    CHECK(std::abs(dp.value[mid] - 0.35) <= 1e-3);
}

TEST_CASE("reserve value dominates stopping when the second bid is low") {
    for (double b2 : {0.2, 0.5, 0.79}) {
        const double reserve = 0.4;
        for (int k = 0; k <= 1000; ++k) {
            const double mu = k / 1000.0;
            const double v = spa_reserve_value(mu, b2, reserve);
            if (k == 0 || k == 1000) {
                CHECK(v == doctest::Approx(mu * b2));
            } else if (b2 >= reserve) {
                CHECK(v > mu * b2);
            } else {
                CHECK(v >= mu * b2);
            }
        }
    }
}

TEST_CASE("discounted first-price threshold") {
    MarketParams m;
    m.r = 0.1;
    CHECK(fpa_discount_threshold(1.0, 1.0, m) == doctest::Approx(0.9));
    CHECK(fpa_discount_threshold(1.0, 0.05, m) == doctest::Approx(0.5));
    m.r = 1e-9;
    CHECK(fpa_discount_threshold(1.0, 0.5, m) == doctest::Approx(1.0));
    CHECK_THROWS_AS(fpa_discount_threshold(1.0, 0.0, m), Error);

    const DPResult dp = dp_solve(fpa_discount_dp(1.0, 1.0, 0.1));
    REQUIRE(dp.boundary.has_value());
    CHECK(std::abs(*dp.boundary - 0.9) <= 1e-3 + 1e-12);
}

TEST_CASE("threshold falls as the bid ratio rises") {
    MarketParams m;
    m.p = 0.01;
    m.r = 0.05;
    double previous = 2.0;
    for (int i = 0; i <= 50; ++i) {
        const double b2 = 1.0 - i * 0.019;
        const double t = fpa_discount_threshold(1.0, b2, m);
        CHECK(t < previous);
        previous = t;
    }
}

TEST_CASE("hitting time of the no-news belief") {
    CHECK(no_news_stop_time(0.5, 0.9, 1.0) == doctest::Approx(std::log(9.0)));
    CHECK(no_news_stop_time(0.5, 0.9, 1.0) == doctest::Approx(euler_hitting_time(0.5, 0.9, 1.0, 1e-5)).epsilon(1e-4));
    CHECK(no_news_stop_time(0.5, 0.5, 1.0) == 0.0);
    CHECK(no_news_stop_time(0.3, 0.8, 2.0) == doctest::Approx(0.5 * no_news_stop_time(0.3, 0.8, 1.0)));
}

TEST_CASE("discounted first-price value and pasting") {
    const double b1 = 1.0;
    for (auto [b2, rho] : {std::pair{1.0, 0.1}, std::pair{0.8, 0.05}, std::pair{0.9, 0.3}}) {
        const double mu_bar = 1.0 - rho * b1 / b2;
        CHECK(std::abs(fpa_discount_value(mu_bar, b1, b2, rho, mu_bar) - mu_bar * b1) <= 1e-12);
        const double h = 1e-7;
        const double left = (fpa_discount_value(mu_bar, b1, b2, rho, mu_bar) -
                             fpa_discount_value(mu_bar - h, b1, b2, rho, mu_bar)) / h;
        CHECK(std::abs(left - b1) <= 1e-6);
    }

    // Vanishing discount approaches the exact limit revenue, enumerated.
    for (double mu : {0.2, 0.5, 0.8}) {
        AuctionSpec spec;
        spec.format = Format::FirstPrice;
        spec.params.p = mu;
        const double exact = enumerate_expected_revenue(spec, {{1.0, 0.6}});
        CHECK(fpa_discount_value_function(mu, 1.0, 0.6, 1e-7) == doctest::Approx(exact).epsilon(1e-5));
        CHECK(exact == doctest::Approx(mu * mu + mu * (1.0 - mu) * 1.6));
    }

    const DPResult dp = dp_solve(fpa_discount_dp(1.0, 1.0, 0.1));
    CHECK(std::abs(dp.value[500] - fpa_discount_value(0.5, 1.0, 1.0, 0.1, 0.9)) <= 1e-2);
}

TEST_CASE("three-bidder policy") {
    CHECK(spa3_policy(1.0, 0.5, 0.3).kind == PolicyKind::ContinueUntilNews);
    CHECK(spa3_value(1.0, 0.5, 0.3) == doctest::Approx(0.5));
    CHECK(spa3_policy(1.0, 0.8, 0.3).kind == PolicyKind::StopNow);
    for (double mu : {0.1, 0.5, 0.9}) {
        CHECK(spa3_value(mu, 0.8, 0.3) == doctest::Approx(0.8 * mu));
        CHECK(spa3_value(mu, 0.7, 0.0) == doctest::Approx(0.7 * mu));
    }
    CHECK(spa3_policy(1.0, 0.7, 0.0).kind == PolicyKind::StopNow);
}

TEST_CASE("first-price with three bidders") {
    const BidProfile b{{0.9, 0.8, 0.1}};
    const auto two = fpa_n_stop(b, world({0, 1, 1}, {0.5, kInfinity, kInfinity}));
    REQUIRE(two.winner.has_value());
    CHECK(*two.winner == 1);
    CHECK(two.realized_revenue == doctest::Approx(0.8));
    const auto none = fpa_n_stop(b, world({0, 0, 0}, {0.5, 0.2, 2.0}));
    CHECK_FALSE(none.winner.has_value());
    CHECK(none.realized_revenue == 0.0);
    const auto all = fpa_n_stop(b, world({1, 1, 1}, {kInfinity, kInfinity, kInfinity}));
    CHECK(*all.winner == 0);
    CHECK(all.realized_revenue == doctest::Approx(0.9));
}

TEST_CASE("executing a second-price auction") {
    AuctionSpec spec;
    const BidProfile b{{0.9, 0.4}};
    const auto won = exercise(spec, b, world({1, 0}, {kInfinity, 0.3}));
    CHECK(*won.winner == 0);
    CHECK(won.payment_if_clicked == doctest::Approx(0.4));
    CHECK(won.exercise_time == 0.0);
    CHECK(won.realized_revenue == doctest::Approx(0.4));
    CHECK(exercise(spec, b, world({0, 1}, {0.3, kInfinity})).realized_revenue == 0.0);

    spec.reserve = 0.4;
    const auto waited = exercise(spec, {{0.9, 0.6}}, world({1, 0}, {kInfinity, 1.3}));
    CHECK(waited.exercise_time == doctest::Approx(1.3));
    CHECK(*waited.winner == 0);
    CHECK(waited.realized_revenue == doctest::Approx(0.4));

    ExperimentConfig c;
    c.spec = spec;
    c.bidding = FixedBids{{0.9, 0.6}};
    c.n_samples = 400000;
    c.seed = 8;
    const auto est = simulate_revenue(c);
    CHECK(std::abs(est.mean - spa_reserve_value(0.5, 0.6, 0.4)) <= 3.0 * est.std_error);
}

TEST_CASE("second-price revenue is p times the second bid") {
    ExperimentConfig c;
    c.bidding = FixedBids{{0.9, 0.4}};
    c.n_samples = 1000000;
    c.seed = 21;
    const auto est = simulate_revenue(c);
    CHECK(std::abs(est.mean - 0.5 * 0.4) <= 3.0 * est.std_error);
}

TEST_CASE("second-price never stops later than first-price") {
    rng::Stream s(404);
    std::size_t violations = 0;
    for (int n : {2, 3}) {
        for (double r : {0.0, 0.2}) {
            if (n == 3 && r > 0.0) continue;
            AuctionSpec spa;
            spa.params.n = n;
            spa.params.r = r;
            AuctionSpec fpa = spa;
            fpa.format = Format::FirstPrice;
            for (int i = 0; i < 20000; ++i) {
                const auto w = sample_world(spa.params, s);
                BidProfile b;
                for (int j = 0; j < n; ++j) b.bids.push_back(0.05 + 0.95 * s.uniform());
                if (!(exercise(spa, b, w).exercise_time <= exercise(fpa, b, w).exercise_time)) ++violations;
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("unsupported combinations are rejected") {
    AuctionSpec spec;
    spec.format = Format::FirstPrice;
    spec.params.n = 3;
    spec.params.r = 0.1;
    CHECK_THROWS_AS(require_supported(spec), Error);
    spec.params.n = 2;
    spec.params.r = 0.0;
    CHECK_NOTHROW(require_supported(spec));
}
