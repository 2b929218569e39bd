#include "dynascore/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "dynascore/errors.hpp"
#include "dynascore/rng.hpp"

namespace dynascore {

namespace {

constexpr double kTopBelief = 1.0 - 1e-10;

}  // namespace

DPResult dp_solve(const DPSpec& spec) {
    if (!(spec.grid_step > 0.0) || !(spec.max_step > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "grid_step and max_step must be positive");
    }
    const auto cells = static_cast<std::size_t>(std::llround(1.0 / spec.grid_step));
    DPResult res;
    res.mu.resize(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) res.mu[k] = static_cast<double>(k) / static_cast<double>(cells);
    res.value.assign(cells + 1, 0.0);
    res.stop_region.assign(cells + 1, 1);

    const double limit = spec.limit_value.value_or(spec.payoff_stop(1.0));
    const double n = static_cast<double>(spec.n_active);

    std::vector<double> next(cells + 1, 0.0);
    for (int sweep = 1; sweep <= spec.max_sweeps; ++sweep) {
        next[cells] = limit;
        next[0] = spec.payoff_stop(0.0);
        // Beliefs only drift up before news, so one downward pass in belief
        // order is a Gauss-Seidel sweep of the Bellman recursion.
        for (std::size_t k = cells; k-- > 1;) {
            const double x0 = logit(res.mu[k]);
            const double x1 = logit(k + 1 == cells ? kTopBelief : res.mu[k + 1]);
            const auto steps = static_cast<std::size_t>(std::ceil((x1 - x0) / spec.max_step));
            const double dt = (x1 - x0) / static_cast<double>(steps);
            const double survive_bad = std::exp(-dt);
            const double discount = std::exp(-spec.rho * dt);
            const double half_discount = std::exp(-0.5 * spec.rho * dt);

            double w = next[k + 1];
            bool stop_here = true;
            for (std::size_t j = steps; j-- > 0;) {
                const double x = x0 + static_cast<double>(j) * dt;
                const double belief = logistic(x);
                const double survive = std::pow(belief + (1.0 - belief) * survive_bad, n);
                const double tick_belief = logistic(x + 0.5 * dt);
                const double cont = discount * survive * w +
                                    (1.0 - survive) * half_discount * spec.jump_payoff(tick_belief);
                const double stop = spec.payoff_stop(belief);
                stop_here = stop >= cont - spec.tie_tolerance;
                w = std::max(stop, cont);
            }
            next[k] = w;
            res.stop_region[k] = stop_here ? 1 : 0;
        }
        double delta = 0.0;
        for (std::size_t k = 0; k <= cells; ++k) delta = std::max(delta, std::abs(next[k] - res.value[k]));
        res.value = next;
        res.sweeps = sweep;
        res.last_delta = delta;
        if (sweep > 1 && delta <= spec.tolerance) {
            res.converged = true;
            break;
        }
    }

    const bool first_stops = res.stop_region[1] != 0;
    std::optional<std::size_t> edge;
    for (std::size_t k = 2; k < cells; ++k) {
        if ((res.stop_region[k] != 0) != first_stops) {
            edge = k;
            break;
        }
    }
    if (edge) {
        res.boundary = res.mu[*edge];
    } else if (first_stops) {
        res.boundary = 0.0;
    }
    return res;
}

bool has_interval_structure(const DPResult& result) {
    int switches = 0;
    for (std::size_t k = 2; k + 1 < result.stop_region.size(); ++k) {
        if (result.stop_region[k] != result.stop_region[k - 1]) ++switches;
    }
    return switches <= 1;
}

DPSpec spa_reserve_dp(double b2, double reserve) {
    DPSpec spec;
    spec.payoff_stop = [b2](double mu) { return mu * b2; };
    spec.jump_payoff = [reserve](double mu) { return mu * reserve; };
    return spec;
}

DPSpec spa_dp(double b2) {
    DPSpec spec;
    spec.payoff_stop = [b2](double mu) { return mu * b2; };
    spec.jump_payoff = [](double) { return 0.0; };
    return spec;
}

DPSpec fpa_discount_dp(double b1, double b2, double rho) {
    DPSpec spec;
    const double high = std::max(b1, b2);
    const double sum = b1 + b2;
    spec.payoff_stop = [high](double mu) { return mu * high; };
    spec.jump_payoff = [sum](double mu) { return 0.5 * mu * sum; };
    spec.rho = rho;
    return spec;
}

DPSpec spa3_dp(double b2, double b3) {
    DPSpec spec;
    spec.payoff_stop = [b2](double mu) { return mu * b2; };
    spec.jump_payoff = [b2, b3](double mu) { return mu * (b2 + 2.0 * b3) / 3.0; };
    spec.n_active = 3;
    return spec;
}

Estimate mc_allocation_prob(double b_own, double b_opp, const MarketParams& params,
                            std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    const double stop = fpa_pair_stop_time(b_own, b_opp, params);
    const double at_stop = b_own > b_opp ? 1.0 : (b_own == b_opp ? 0.5 : 0.0);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        rng::Stream stream(rng::derive_seed(seed, i));
        const bool opp_good = stream.bernoulli(params.p);
        const double clock = stream.exponential(params.lambda);
        const double opp_tick = opp_good ? kInfinity : clock;
        double x = 0.0;
        if (opp_tick < stop) {
            x = params.r > 0.0 ? std::exp(-params.r * opp_tick) : 1.0;
        } else {
            x = at_stop * (params.r > 0.0 ? std::exp(-params.r * stop) : 1.0);
        }
        sum += x;
        sum_sq += x * x;
    }
    const double n = static_cast<double>(n_samples);
    Estimate est;
    est.mean = sum / n;
    est.n_samples = n_samples;
    const double var = n > 1.0 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
    est.std_error = std::sqrt(var / n);
    return est;
}

namespace {

struct Sale {
    std::optional<std::size_t> winner;
    double payment = 0.0;
};

/// Auction among `alive` bidders whose beliefs are equal (scores reduce to
/// bids). Bids below `floor` cannot win or set the price.
Sale equal_belief_sale(Format format, const std::vector<double>& bids,
                       const std::vector<char>& alive, double floor) {
    Sale sale;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (!alive[i] || bids[i] < floor) continue;
        if (!sale.winner || bids[i] > bids[*sale.winner]) sale.winner = i;
    }
    if (!sale.winner) return sale;
    if (format == Format::FirstPrice) {
        sale.payment = bids[*sale.winner];
        return sale;
    }
    double runner_up = 0.0;
    for (std::size_t j = 0; j < bids.size(); ++j) {
        if (j == *sale.winner || !alive[j] || bids[j] < floor) continue;
        runner_up = std::max(runner_up, bids[j]);
    }
    sale.payment = std::max(runner_up, floor);
    return sale;
}

double clicked_revenue(const Sale& sale, const std::vector<int>& theta) {
    return sale.winner ? static_cast<double>(theta[*sale.winner]) * sale.payment : 0.0;
}

}  // namespace

double enumerate_expected_revenue(const AuctionSpec& spec, const BidProfile& bids) {
    require_supported(spec);
    const auto& params = spec.params;
    const int n = params.n;
    if (n > 3) throw Error(ErrorCode::UnsupportedCombination, "enumeration is limited to n <= 3");
    if (bids.size() != static_cast<std::size_t>(n)) {
        throw Error(ErrorCode::InvalidArgument, "bid profile must have n entries");
    }
    const auto& b = bids.bids;
    const double p = params.p;
    const double floor = spec.reserve;
    const double r = params.r;
    const double lambda = params.lambda;
    const bool fpa = spec.format == Format::FirstPrice;

    enum class Rule { Now, Limit, FirstTick, Discounted };
    Rule rule = Rule::Now;
    if (spec.timing == Timing::ForcedLimit || (fpa && r == 0.0)) {
        rule = Rule::Limit;
    } else if (fpa) {
        rule = Rule::Discounted;
    } else if (n == 3) {
        std::vector<double> s = b;
        std::sort(s.begin(), s.end(), std::greater<>());
        rule = spa3_policy(s[0], s[1], s[2]).kind == PolicyKind::StopNow ? Rule::Now : Rule::FirstTick;
    } else if (spec.reserve > 0.0) {
        rule = spa_reserve_policy(bids, spec.reserve).kind == PolicyKind::StopNow ? Rule::Now
                                                                                  : Rule::FirstTick;
    }

    const std::vector<char> everyone(static_cast<std::size_t>(n), 1);
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> theta(static_cast<std::size_t>(n));
        std::vector<char> good(static_cast<std::size_t>(n));
        std::vector<std::size_t> bad;
        double weight = 1.0;
        for (int i = 0; i < n; ++i) {
            const bool g = (mask >> i) & 1u;
            theta[static_cast<std::size_t>(i)] = g ? 1 : 0;
            good[static_cast<std::size_t>(i)] = g ? 1 : 0;
            weight *= g ? p : 1.0 - p;
            if (!g) bad.push_back(static_cast<std::size_t>(i));
        }
        if (weight == 0.0) continue;

        const Format format = spec.format;
        double revenue = 0.0;
        switch (rule) {
            case Rule::Now:
                revenue = clicked_revenue(equal_belief_sale(format, b, everyone, floor), theta);
                break;
            case Rule::Limit:
                revenue = clicked_revenue(equal_belief_sale(format, b, good, floor), theta);
                break;
            case Rule::FirstTick: {
                if (bad.empty()) {
                    revenue = clicked_revenue(equal_belief_sale(format, b, good, floor), theta);
                    break;
                }
                // iid clocks: each bad bidder is equally likely to drop first.
                for (std::size_t dropped : bad) {
                    std::vector<char> alive = everyone;
                    alive[dropped] = 0;
                    revenue += clicked_revenue(equal_belief_sale(format, b, alive, floor), theta);
                }
                revenue /= static_cast<double>(bad.size());
                break;
            }
            case Rule::Discounted: {
                const double stop = fpa_pair_stop_time(b[0], b[1], params);
                const double at_stop =
                    clicked_revenue(equal_belief_sale(format, b, everyone, floor), theta);
                const double k = static_cast<double>(bad.size());
                // First tick ~ Exp(k lambda); E[exp(-r tau); tau < stop] in closed form.
                revenue = std::exp(-(k * lambda + r) * stop) * at_stop;
                if (!bad.empty()) {
                    const double rate = k * lambda;
                    const double early = rate / (rate + r) * -std::expm1(-(rate + r) * stop);
                    double survivor = 0.0;
                    for (std::size_t dropped : bad) {
                        std::vector<char> alive = everyone;
                        alive[dropped] = 0;
                        survivor += clicked_revenue(equal_belief_sale(format, b, alive, floor), theta);
                    }
                    revenue += early * survivor / k;
                }
                break;
            }
        }
        total += weight * revenue;
    }
    return total;
}

}  // namespace dynascore
