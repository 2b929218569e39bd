#pragma once

// Monte Carlo and closed-form auctioneer revenue.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dynascore/equilibrium.hpp"
#include "dynascore/stopping.hpp"

namespace dynascore {

struct Truthful {};
/// fpa_bid_with_reserve when the spec has a reserve, the closed form otherwise.
struct ClosedFormFPA {};
struct SolvedEquilibrium {
    BidFunction bids;
};
struct FixedBids {
    std::vector<double> bids;
};

using Bidding = std::variant<Truthful, ClosedFormFPA, SolvedEquilibrium, FixedBids>;

std::string bidding_label(const Bidding& bidding);

struct ExperimentConfig {
    AuctionSpec spec;
    ValueDistribution dist = ValueDistribution::uniform();
    Bidding bidding = Truthful{};
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    ExerciseOptions exercise;
};

/// Throws InvalidArgument when the bidding mode does not fit the format:
/// truthful bidding needs a second-price auction whose timing ignores bids.
void validate(const ExperimentConfig& config);

struct RevenueEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// Realized revenue of every replication, in replication order.
std::vector<double> simulate_draws(const ExperimentConfig& config,
                                   Execution execution = Execution::Parallel);

RevenueEstimate simulate_revenue(const ExperimentConfig& config,
                                 Execution execution = Execution::Parallel);

/// Order-independent summation: the result depends only on the values and
/// their order, never on how the work was scheduled.
double pairwise_sum(const double* data, std::size_t n);

struct PairedEstimate {
    RevenueEstimate a;
    RevenueEstimate b;
    double ratio = 0.0;      // a.mean / b.mean
    double ratio_se = 0.0;   // delta method with the sample covariance
};

/// Runs both configs on common random numbers; they must share seed and
/// n_samples.
PairedEstimate simulate_paired(const ExperimentConfig& a, const ExperimentConfig& b,
                               Execution execution = Execution::Parallel);

/// E[max(phi(v1), phi(v2))] for two iid draws.
double expected_max_virtual(const ValueDistribution& dist);
/// E[phi(v)] for one draw.
double expected_virtual(const ValueDistribution& dist);
/// E[max(phi(v1), phi(v2), 0)].
double expected_max_virtual_positive(const ValueDistribution& dist);
/// E[max(phi(v), 0)].
double expected_virtual_positive(const ValueDistribution& dist);

/// No reserve, r = 0, two bidders.
double revenue_closed_form(Format format, const ValueDistribution& dist, double p);

double optimal_revenue(const ValueDistribution& dist, double p);

struct RatioCheck {
    double ratio = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    bool pass = false;
};

/// Second-price over first-price revenue on common random numbers; passes
/// when within three standard errors of 1/p.
RatioCheck check_revenue_ratio(const ValueDistribution& dist, double p, std::size_t n_samples,
                               std::uint64_t seed, Execution execution = Execution::Parallel);

struct DiscountRow {
    double r = 0.0;
    RevenueEstimate first_price;
    RevenueEstimate second_price;
    SolverReport solver;
};

/// One row per rate, preceded by an r = 0 row. First-price revenue uses the
/// solved equilibrium at each rate; all rows share random numbers.
std::vector<DiscountRow> revenue_vs_discount(const ValueDistribution& dist, double p, double lambda,
                                             const std::vector<double>& r_grid,
                                             std::size_t n_samples, std::uint64_t seed,
                                             const SolverOptions& solver = {});

}  // namespace dynascore
