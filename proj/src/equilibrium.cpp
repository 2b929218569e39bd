#include "dynascore/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "dynascore/errors.hpp"
#include "dynascore/stopping.hpp"

namespace dynascore {

std::optional<double> BidFunction::operator()(double v) const {
    if (v < threshold || grid_values.empty()) return std::nullopt;
    if (v <= grid_values.front()) return grid_bids.front();
    if (v >= grid_values.back()) return grid_bids.back();
    const auto it = std::upper_bound(grid_values.begin(), grid_values.end(), v);
    const auto i = static_cast<std::size_t>(std::distance(grid_values.begin(), it)) - 1;
    const double w = (v - grid_values[i]) / (grid_values[i + 1] - grid_values[i]);
    return grid_bids[i] + w * (grid_bids[i + 1] - grid_bids[i]);
}

bool BidFunction::valid() const noexcept {
    if (grid_values.size() != grid_bids.size() || grid_values.size() < 2) return false;
    for (std::size_t i = 0; i < grid_bids.size(); ++i) {
        if (grid_bids[i] < 0.0 || grid_bids[i] > grid_values[i]) return false;
        if (i > 0 && (grid_bids[i] < grid_bids[i - 1] || !(grid_values[i] > grid_values[i - 1]))) {
            return false;
        }
    }
    return true;
}

namespace {

void require_in_support(const ValueDistribution& dist, double v) {
    if (!(v >= dist.lo() && v <= dist.hi())) {
        throw Error(ErrorCode::OutOfSupport, "v = " + std::to_string(v) + " outside support");
    }
}

void require_prior(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "p must lie in (0, 1]");
}

double phi_or_minus_inf(const ValueDistribution& dist, double v) {
    return dist.density(v) > 0.0 ? virtual_value(dist, v)
                                  : -std::numeric_limits<double>::infinity();
}

}  // namespace

double fpa_bid_closed_form(const ValueDistribution& dist, double p, double v) {
    require_in_support(dist, v);
    require_prior(p);
    const double denom = (1.0 - p) / p + dist.cdf(v);
    if (denom == 0.0) return 0.0;
    return dist.partial_mean(dist.lo(), v) / denom;
}

std::optional<double> fpa_bid_with_reserve(const ValueDistribution& dist, double p, double reserve,
                                           double v) {
    require_in_support(dist, v);
    require_in_support(dist, reserve);
    require_prior(p);
    if (v < reserve) return std::nullopt;
    const double odds = (1.0 - p) / p;
    const double denom = odds + dist.cdf(v);
    if (denom == 0.0) return reserve;
    return (dist.partial_mean(reserve, v) + (odds + dist.cdf(reserve)) * reserve) / denom;
}

ReserveResult optimal_reserve(const ValueDistribution& dist) {
    auto g = [&dist](double v) { return weighted_virtual_value(dist, v); };
    if (g(dist.lo()) >= 0.0) return {dist.lo(), false};
    auto done = [](double a, double b) { return b - a <= 1e-12; };
    const auto [a, b] = boost::math::tools::bisect(g, dist.lo(), dist.hi(), done);
    return {0.5 * (a + b), true};
}

std::optional<std::size_t> optimal_allocation(double v1, double v2, const std::pair<int, int>& theta,
                                              const ValueDistribution& dist) {
    require_in_support(dist, v1);
    require_in_support(dist, v2);
    const double s1 = theta.first != 0 ? phi_or_minus_inf(dist, v1) : 0.0;
    const double s2 = theta.second != 0 ? phi_or_minus_inf(dist, v2) : 0.0;
    if (s1 <= 0.0 && s2 <= 0.0) return std::nullopt;
    return s1 >= s2 ? 0 : 1;
}

double allocation_prob_discounted(double b_own, double b_opp, const MarketParams& params) {
    const double p = params.p;
    const double at_stop = b_own > b_opp ? 1.0 : (b_own == b_opp ? 0.5 : 0.0);
    if (params.r == 0.0) return (1.0 - p) + p * at_stop;
    const double stop = fpa_pair_stop_time(b_own, b_opp, params);
    const double r = params.r;
    const double lambda = params.lambda;
    const double decay = std::exp(-(lambda + r) * stop);
    // A bad opponent ticks before the stop with density lambda e^{-lambda t}.
    const double early = lambda / (lambda + r) * -std::expm1(-(lambda + r) * stop);
    return p * std::exp(-r * stop) * at_stop + (1.0 - p) * (early + decay * at_stop);
}

namespace {

constexpr double kGaussNode = 0.57735026918962576451;  // 1/sqrt(3)

/// Opponent bid distribution prepared for repeated integration: two
/// Gauss-Legendre nodes in quantile space per value-grid segment.
struct OpponentLaw {
    const ValueDistribution* dist = nullptr;
    const BidFunction* bids = nullptr;
    double absent_mass = 0.0;
    std::vector<double> half_mass;   // per segment
    std::vector<double> node_bid;    // two per segment
};

OpponentLaw prepare(const ValueDistribution& dist, const BidFunction& opponent) {
    OpponentLaw law;
    law.dist = &dist;
    law.bids = &opponent;
    law.absent_mass = dist.cdf(opponent.threshold);
    const auto& vs = opponent.grid_values;
    const auto& bs = opponent.grid_bids;
    const std::size_t segments = vs.size() - 1;
    law.half_mass.resize(segments);
    law.node_bid.resize(2 * segments);
    for (std::size_t k = 0; k < segments; ++k) {
        const double q0 = dist.cdf(vs[k]);
        const double q1 = dist.cdf(vs[k + 1]);
        const double mid = 0.5 * (q0 + q1);
        const double half = 0.5 * (q1 - q0);
        law.half_mass[k] = half;
        for (int j = 0; j < 2; ++j) {
            const double v = dist.quantile(mid + (j == 0 ? -half : half) * kGaussNode);
            const double w = (v - vs[k]) / (vs[k + 1] - vs[k]);
            law.node_bid[2 * k + j] = bs[k] + std::clamp(w, 0.0, 1.0) * (bs[k + 1] - bs[k]);
        }
    }
    return law;
}

/// Integral of x(bid, opponent(V)) over V in [a, c] inside segment k.
double piece_integral(const OpponentLaw& law, const MarketParams& params, std::size_t k, double a,
                      double c, double bid) {
    const auto& vs = law.bids->grid_values;
    const auto& bs = law.bids->grid_bids;
    const double q0 = law.dist->cdf(a);
    const double q1 = law.dist->cdf(c);
    const double mid = 0.5 * (q0 + q1);
    const double half = 0.5 * (q1 - q0);
    double sum = 0.0;
    for (double side : {-1.0, 1.0}) {
        const double v = law.dist->quantile(mid + side * half * kGaussNode);
        const double w = std::clamp((v - vs[k]) / (vs[k + 1] - vs[k]), 0.0, 1.0);
        sum += allocation_prob_discounted(bid, bs[k] + w * (bs[k + 1] - bs[k]), params);
    }
    return half * sum;
}

double integrate_allocation(const OpponentLaw& law, const MarketParams& params, double bid) {
    const auto& vs = law.bids->grid_values;
    const auto& bs = law.bids->grid_bids;
    const std::size_t segments = vs.size() - 1;

    // Opponent bids where x(bid, .) jumps (ties) or has a kink (the stop
    // threshold meets the prior).
    std::vector<double> cuts{bid};
    if (params.r > 0.0 && params.p < 1.0) {
        const double ratio = params.rho() / (1.0 - params.p);
        cuts.push_back(bid * ratio);
        if (ratio > 0.0) cuts.push_back(bid / ratio);
    }
    std::vector<std::pair<std::size_t, double>> crossings;
    for (double s : cuts) {
        const auto it = std::lower_bound(bs.begin(), bs.end(), s);
        const auto i = static_cast<std::size_t>(std::distance(bs.begin(), it));
        if (i == 0 || i == bs.size() || !(bs[i - 1] < s && s < bs[i])) continue;
        const std::size_t k = i - 1;
        const double v = vs[k] + (s - bs[k]) / (bs[k + 1] - bs[k]) * (vs[k + 1] - vs[k]);
        crossings.emplace_back(k, v);
    }
    std::sort(crossings.begin(), crossings.end());

    double total = law.absent_mass;
    std::size_t c = 0;
    for (std::size_t k = 0; k < segments; ++k) {
        if (c < crossings.size() && crossings[c].first == k) {
            double a = vs[k];
            while (c < crossings.size() && crossings[c].first == k) {
                total += piece_integral(law, params, k, a, crossings[c].second, bid);
                a = crossings[c].second;
                ++c;
            }
            total += piece_integral(law, params, k, a, vs[k + 1], bid);
            continue;
        }
        total += law.half_mass[k] * (allocation_prob_discounted(bid, law.node_bid[2 * k], params) +
                                     allocation_prob_discounted(bid, law.node_bid[2 * k + 1], params));
    }
    return total;
}

void require_solvable(const MarketParams& params, const SolverOptions& options) {
    params.validate();
    if (params.n != 2) {
        throw Error(ErrorCode::UnsupportedCombination, "equilibrium solver needs n = 2");
    }
    if (options.reserve > 0.0 && params.r > 0.0) {
        throw Error(ErrorCode::UnsupportedCombination, "reserve prices with r > 0 are not solved");
    }
    if (options.bid_grid < 3 || options.refine < 1 || options.value_grid < 2) {
        throw Error(ErrorCode::InvalidArgument, "grid sizes too small");
    }
}

}  // namespace

double expected_allocation(const ValueDistribution& dist, const MarketParams& params,
                           const BidFunction& opponent, double bid) {
    return integrate_allocation(prepare(dist, opponent), params, bid);
}

std::vector<double> fpa_best_response_sweep(const ValueDistribution& dist,
                                            const MarketParams& params,
                                            const BidFunction& opponent,
                                            const std::vector<double>& values,
                                            const SolverOptions& options) {
    require_solvable(params, options);
    const bool parallel = options.execution == Execution::Parallel;
    const OpponentLaw law = prepare(dist, opponent);

    const double low = options.reserve;
    const double high = dist.hi();
    const std::size_t refine = options.refine;
    const std::size_t last = (options.bid_grid - 1) * refine;
    const double fine_step = (high - low) / static_cast<double>(last);
    auto lattice_bid = [&](std::size_t m) {
        return m == last ? high : low + static_cast<double>(m) * fine_step;
    };
    const auto n_values = static_cast<std::ptrdiff_t>(values.size());
    for (double v : values) {
        if (v < low) throw Error(ErrorCode::InvalidArgument, "value below the reserve cannot bid");
    }

    const auto n_coarse = static_cast<std::ptrdiff_t>(options.bid_grid);
    std::vector<double> coarse_x(options.bid_grid);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t k = 0; k < n_coarse; ++k) {
        coarse_x[static_cast<std::size_t>(k)] =
            integrate_allocation(law, params, lattice_bid(static_cast<std::size_t>(k) * refine));
    }

    std::vector<std::size_t> coarse_best(values.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < n_values; ++i) {
        const double v = values[static_cast<std::size_t>(i)];
        std::size_t best = 0;
        double best_u = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < options.bid_grid; ++k) {
            const double u = (v - lattice_bid(k * refine)) * coarse_x[k];
            if (u > best_u) {
                best_u = u;
                best = k;
            }
        }
        coarse_best[static_cast<std::size_t>(i)] = best;
    }

    std::vector<char> wanted(last + 1, 0);
    for (std::size_t k = 0; k < options.bid_grid; ++k) wanted[k * refine] = 1;
    for (std::size_t k : coarse_best) {
        const std::size_t from = k == 0 ? 0 : (k - 1) * refine;
        const std::size_t to = std::min(last, (k + 1) * refine);
        for (std::size_t m = from; m <= to; ++m) wanted[m] = 1;
    }
    std::vector<std::size_t> candidates;
    for (std::size_t m = 0; m <= last; ++m) {
        if (wanted[m]) candidates.push_back(m);
    }

    std::vector<double> cand_x(candidates.size());
    const auto n_cand = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t j = 0; j < n_cand; ++j) {
        const std::size_t m = candidates[static_cast<std::size_t>(j)];
        cand_x[static_cast<std::size_t>(j)] =
            m % refine == 0 ? coarse_x[m / refine] : integrate_allocation(law, params, lattice_bid(m));
    }

    std::vector<double> result(values.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < n_values; ++i) {
        const double v = values[static_cast<std::size_t>(i)];
        double best_bid = low;
        double best_u = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            const double b = lattice_bid(candidates[j]);
            const double u = (v - b) * cand_x[j];
            if (u > best_u) {
                best_u = u;
                best_bid = b;
            }
        }
        result[static_cast<std::size_t>(i)] = best_bid;
    }
    return result;
}

double fpa_best_response(const ValueDistribution& dist, const MarketParams& params,
                         const BidFunction& opponent, double v, const SolverOptions& options) {
    return fpa_best_response_sweep(dist, params, opponent, {v}, options).front();
}

BidFunction tabulate_closed_form(const ValueDistribution& dist, double p,
                                 const SolverOptions& options) {
    BidFunction out;
    out.threshold = std::max(dist.lo(), options.reserve);
    const std::size_t n = options.value_grid;
    const double step = (dist.hi() - out.threshold) / static_cast<double>(n - 1);
    out.grid_values.resize(n);
    out.grid_bids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = i + 1 == n ? dist.hi() : out.threshold + step * static_cast<double>(i);
        out.grid_values[i] = v;
        out.grid_bids[i] = options.reserve > 0.0 ? *fpa_bid_with_reserve(dist, p, options.reserve, v)
                                                 : fpa_bid_closed_form(dist, p, v);
    }
    return out;
}

EquilibriumResult fpa_equilibrium_solve(const ValueDistribution& dist, const MarketParams& params,
                                        const SolverOptions& options) {
    require_solvable(params, options);
    const bool parallel = options.execution == Execution::Parallel;
    EquilibriumResult res;
    res.bids = tabulate_closed_form(dist, params.p, options);
    if (options.initial) {
        double floor = options.reserve;
        for (std::size_t i = 0; i < res.bids.grid_values.size(); ++i) {
            const double v = res.bids.grid_values[i];
            floor = std::clamp((*options.initial)(v).value_or(options.reserve), floor, v);
            res.bids.grid_bids[i] = floor;
        }
    }
    res.report.tolerance = options.tolerance;
    const auto& values = res.bids.grid_values;
    const std::size_t n = values.size();
    const auto n_signed = static_cast<std::ptrdiff_t>(n);
    std::vector<double> alloc(n);
    std::vector<double> target(n);

    for (int it = 1; it <= options.max_iters; ++it) {
        auto& bids = res.bids.grid_bids;
        const OpponentLaw law = prepare(dist, res.bids);
#pragma omp parallel for schedule(static) if (parallel)
        for (std::ptrdiff_t i = 0; i < n_signed; ++i) {
            const auto k = static_cast<std::size_t>(i);
            alloc[k] = integrate_allocation(law, params, bids[k]);
        }
        // Envelope condition: U(v) = U(v0) + int_{v0}^{v} A(s) ds and
        // b(v) = v - U(v) / A(v), with the lowest type at its best response.
        const double low_bid = fpa_best_response(dist, params, res.bids, values.front(), options);
        double utility = (values.front() - low_bid) * integrate_allocation(law, params, low_bid);
        target[0] = low_bid;
        for (std::size_t i = 1; i < n; ++i) {
            utility += 0.5 * (alloc[i - 1] + alloc[i]) * (values[i] - values[i - 1]);
            const double b = alloc[i] > 0.0 ? values[i] - utility / alloc[i] : target[i - 1];
            target[i] = std::clamp(std::max(b, target[i - 1]), options.reserve, values[i]);
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = options.damping * bids[i] + (1.0 - options.damping) * target[i];
            delta = std::max(delta, std::abs(next - bids[i]));
            bids[i] = next;
        }
        res.report.iterations = it;
        res.report.sup_norm_delta = delta;
        if (delta <= options.tolerance) {
            res.report.converged = true;
            break;
        }
    }

    const auto reply = fpa_best_response_sweep(dist, params, res.bids, values, options);
    for (std::size_t i = 0; i < n; ++i) {
        res.report.best_response_gap =
            std::max(res.report.best_response_gap, std::abs(reply[i] - res.bids.grid_bids[i]));
    }
    return res;
}

double deviation_profit_bound(double v_max, double reserve, double eps) {
    return v_max - eps - 2.0 * reserve;
}

DeviationWitness deviation_witness(const ValueDistribution& dist, double eps) {
    DeviationWitness w;
    w.v_max = dist.hi();
    w.reserve = optimal_reserve(dist).value;
    w.eps = eps;
    w.premise_holds = w.v_max > 2.0 * w.reserve && eps < 0.5 * (w.v_max - 2.0 * w.reserve);
    w.profit = deviation_profit_bound(w.v_max, w.reserve, eps);
    return w;
}

}  // namespace dynascore
