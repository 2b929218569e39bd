#pragma once

// Equilibrium bids, the optimal reserve and allocation rule, and an iterated
// best-response solver for the discounted first-price auction.

#include <cstddef>
#include <optional>
#include <vector>

#include "dynascore/model.hpp"

namespace dynascore {

/// Piecewise-linear bid function on a value grid. Types below `threshold` do
/// not bid.
struct BidFunction {
    std::vector<double> grid_values;
    std::vector<double> grid_bids;
    double threshold = 0.0;

    std::optional<double> operator()(double v) const;
    /// Nondecreasing and 0 <= bid <= value at every grid point.
    bool valid() const noexcept;
};

struct SolverReport {
    int iterations = 0;
    double sup_norm_delta = 0.0;
    bool converged = false;
    double tolerance = 0.0;
    /// sup over the value grid of |best response - returned bid|, measured
    /// on the bid lattice after the last iterate.
    double best_response_gap = 0.0;
};

double fpa_bid_closed_form(const ValueDistribution& dist, double p, double v);

/// Empty when v < reserve.
std::optional<double> fpa_bid_with_reserve(const ValueDistribution& dist, double p, double reserve,
                                           double v);

struct ReserveResult {
    double value = 0.0;
    /// False when phi > 0 on the whole support (no root, value = support lo).
    bool binding = true;
};

ReserveResult optimal_reserve(const ValueDistribution& dist);

/// 0-based winner of the quality-weighted virtual value contest, or empty when
/// neither entry is positive. Ties go to the lower index.
std::optional<std::size_t> optimal_allocation(double v1, double v2, const std::pair<int, int>& theta,
                                              const ValueDistribution& dist);

/// Discounted probability that the own ad is shown and paid for in a
/// two-bidder discounted first-price auction, ties split in half.
double allocation_prob_discounted(double b_own, double b_opp, const MarketParams& params);

struct SolverOptions {
    std::size_t value_grid = 512;
    std::size_t bid_grid = 1024;
    /// Fine lattice is bid_grid step / refine; one coarse step either side of
    /// the coarse argmax is searched on it.
    std::size_t refine = 16;
    double damping = 0.5;
    double tolerance = 1e-4;
    int max_iters = 200;
    double reserve = 0.0;
    Execution execution = Execution::Parallel;
    /// Starting bids for the solver; the r = 0 closed form when empty.
    std::optional<BidFunction> initial;
};

/// Tabulates a bid rule on `options.value_grid` points over [max(lo, R), hi].
/// With a positive reserve the rule is fpa_bid_with_reserve, else the closed
/// form.
BidFunction tabulate_closed_form(const ValueDistribution& dist, double p,
                                 const SolverOptions& options);

/// Expected allocation E[x(b, opponent(V))] over the opponent's value.
double expected_allocation(const ValueDistribution& dist, const MarketParams& params,
                           const BidFunction& opponent, double bid);

/// Best response of type v against `opponent` on the options' bid lattice.
double fpa_best_response(const ValueDistribution& dist, const MarketParams& params,
                         const BidFunction& opponent, double v, const SolverOptions& options);

/// Best responses for every point of `values` at once. Candidate bids are the
/// union of all windows, so the result is monotone in v.
std::vector<double> fpa_best_response_sweep(const ValueDistribution& dist,
                                            const MarketParams& params,
                                            const BidFunction& opponent,
                                            const std::vector<double>& values,
                                            const SolverOptions& options);

struct EquilibriumResult {
    BidFunction bids;
    SolverReport report;
};

/// Damped symmetric iteration from the r = 0 closed form. Each step replaces
/// the bids with the envelope-condition best reply to the current allocation,
/// b(v) = v - (U(v0) + int A) / A(v); the lattice best response is the check.
EquilibriumResult fpa_equilibrium_solve(const ValueDistribution& dist, const MarketParams& params,
                                        const SolverOptions& options = {});

/// Lower bound v_max - eps - 2R on the profit of the deviation that breaks a
/// second-price auction with reserve R: the deviator bids above 2R and pays an
/// opponent bid capped at 2R.
double deviation_profit_bound(double v_max, double reserve, double eps);

struct DeviationWitness {
    double v_max = 0.0;
    double reserve = 0.0;
    double eps = 0.0;
    /// v_max > 2R and eps < (v_max - 2R) / 2.
    bool premise_holds = false;
    double profit = 0.0;
};

/// Evaluates the deviation construction at the optimal reserve of `dist`.
DeviationWitness deviation_witness(const ValueDistribution& dist, double eps);

}  // namespace dynascore
