#pragma once

// Independent checks for the closed forms: a dynamic program on the pre-news
// belief grid, a Monte Carlo estimate of the discounted win probability, and
// exact expected revenue by enumerating quality outcomes.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dynascore/stopping.hpp"

namespace dynascore {

/// Optimal stopping of a pre-news value process. All `n_active` bidders share
/// the belief mu; absent news it follows the logistic law, and the first tick
/// pays `jump_payoff(mu)` (the value right after one bidder drops, averaged
/// over which one). Time is measured in units of 1/lambda.
struct DPSpec {
    std::function<double(double)> payoff_stop;
    std::function<double(double)> jump_payoff;
    int n_active = 2;
    double rho = 0.0;
    double grid_step = 1e-3;
    /// Upper bound on lambda * dt for one Bellman step.
    double max_step = 1e-4;
    /// Value at mu = 1 (stop in the limit). Defaults to payoff_stop(1).
    std::optional<double> limit_value;
    double tolerance = 1e-10;
    /// A belief is flagged as stopping when continuation beats stopping by no
    /// more than this. The value itself is always the exact maximum.
    double tie_tolerance = 1e-9;
    int max_sweeps = 50;
};

struct DPResult {
    std::vector<double> mu;
    std::vector<double> value;
    std::vector<char> stop_region;
    /// 0 if every interior belief stops, the edge of the stopping interval if
    /// the grid splits, empty if every interior belief continues.
    std::optional<double> boundary;
    int sweeps = 0;
    double last_delta = 0.0;
    bool converged = false;
};

DPResult dp_solve(const DPSpec& spec);

/// True when the interior stopping flags form an upper or a lower interval.
bool has_interval_structure(const DPResult& result);

DPSpec spa_reserve_dp(double b2, double reserve);
DPSpec spa_dp(double b2);
DPSpec fpa_discount_dp(double b1, double b2, double rho);
DPSpec spa3_dp(double b2, double b3);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// Simulates the opponent's quality and clock, applies the discounted
/// first-price stopping rule and averages exp(-r * stop) * win (1/2 on ties).
Estimate mc_allocation_prob(double b_own, double b_opp, const MarketParams& params,
                            std::size_t n_samples, std::uint64_t seed);

/// Exact expected revenue for fixed bids, summing over the 2^n quality
/// outcomes and integrating the clock order statistics in closed form.
double enumerate_expected_revenue(const AuctionSpec& spec, const BidProfile& bids);

}  // namespace dynascore
