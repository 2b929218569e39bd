#pragma once

// Optimal exercise policies, closed-form auctioneer value functions, and a
// single executor that turns (spec, bids, world) into a realized outcome.

#include <optional>
#include <string>

#include "dynascore/model.hpp"

namespace dynascore {

enum class Format { FirstPrice, SecondPrice };

/// Optimal: the auctioneer's sequentially rational stopping rule.
/// ForcedLimit: run the auction at the first-price rule (the limit), whatever
/// the format. Used for the revenue-equivalence anchor.
enum class Timing { Optimal, ForcedLimit };

struct AuctionSpec {
    Format format = Format::SecondPrice;
    double reserve = 0.0;
    MarketParams params;
    Timing timing = Timing::Optimal;
};

const char* to_string(Format format) noexcept;

enum class PolicyKind { StopNow, ContinueUntilNews, StopAtLimit };

struct PolicyDecision {
    PolicyKind kind = PolicyKind::StopNow;
    std::string note;
};

struct Outcome {
    std::optional<std::size_t> winner;
    double payment_if_clicked = 0.0;
    double exercise_time = 0.0;
    double realized_revenue = 0.0;
};

struct ExerciseOptions {
    /// Second-price payments are floored at the reserve and bids below the
    /// reserve are ineligible. Switching this off is a fault-injection hook
    /// for negative-control runs.
    bool floor_at_reserve = true;
};

PolicyDecision spa_stop(const BidProfile& bids);

/// First-price, two bidders, r = 0: stops in the limit; the winner is the
/// highest bidder among good ads.
Outcome fpa_stop(const BidProfile& bids, const WorldRealization& world);

PolicyDecision spa_reserve_policy(const BidProfile& bids, double reserve);

/// Pre-news auctioneer value of a second-price auction with reserve R when the
/// second-highest bid is b2 (both bidders still alive at common belief mu).
double spa_reserve_value(double mu, double b2, double reserve);

/// Belief threshold max{1 - rho b1/b2, p} at which a discounted first-price
/// auction stops absent news. Expects b1 >= b2.
double fpa_discount_threshold(double b1, double b2, const MarketParams& params);

/// Time for the no-news belief to travel from mu0 to mu_bar.
double no_news_stop_time(double mu0, double mu_bar, double lambda);

/// Continuation value of the discounted first-price auction for mu <= mu_bar.
double fpa_discount_value(double mu, double b1, double b2, double rho, double mu_bar);

/// No-news stopping time of a discounted first-price auction for a bid pair,
/// given in either order: +inf when r = 0, zero when either bid is zero.
double fpa_pair_stop_time(double bid_a, double bid_b, const MarketParams& params);

/// Full pre-news value function of the discounted first-price auction:
/// the continuation closed form below the raw threshold, mu b1 above it.
double fpa_discount_value_function(double mu, double b1, double b2, double rho);

/// Expects b1 >= b2 >= b3.
PolicyDecision spa3_policy(double b1, double b2, double b3);
double spa3_value(double mu, double b2, double b3);

/// First-price, any n, r = 0. exercise_time is the first time only one
/// bidder's belief is still positive (+inf if two or more ads are good).
Outcome fpa_n_stop(const BidProfile& bids, const WorldRealization& world);

/// Dispatches to the policy for `spec`. Throws UnsupportedCombination outside
/// the solved cases.
Outcome exercise(const AuctionSpec& spec, const BidProfile& bids, const WorldRealization& world,
                 const ExerciseOptions& options = {});

/// Throws UnsupportedCombination if `exercise` cannot run this spec.
void require_supported(const AuctionSpec& spec);

}  // namespace dynascore
