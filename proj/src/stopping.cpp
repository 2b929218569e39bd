#include "dynascore/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynascore/errors.hpp"

namespace dynascore {

const char* to_string(Format format) noexcept {
    return format == Format::FirstPrice ? "first-price" : "second-price";
}

namespace {

struct SortedPair {
    double high;
    double low;
};

SortedPair sort_pair(const BidProfile& bids) {
    return {std::max(bids.bids[0], bids.bids[1]), std::min(bids.bids[0], bids.bids[1])};
}

std::vector<double> limit_beliefs(const WorldRealization& world) {
    std::vector<double> mu(world.size());
    for (std::size_t i = 0; i < world.size(); ++i) mu[i] = static_cast<double>(world.theta[i]);
    return mu;
}

std::vector<double> beliefs_when(const MarketParams& params, const WorldRealization& world,
                                 double t) {
    if (std::isinf(t)) return limit_beliefs(world);
    return belief_at(params, world, t).mu;
}

/// Highest scored eligible bid among bidders with positive belief; lowest
/// index wins ties.
std::optional<std::size_t> scored_winner(const std::vector<double>& bids,
                                         const std::vector<double>& mu, double floor) {
    std::optional<std::size_t> best;
    double best_score = -1.0;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (!(mu[i] > 0.0) || bids[i] < floor) continue;
        const double score = mu[i] * bids[i];
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

Outcome run_auction(Format format, const std::vector<double>& bids, const std::vector<double>& mu,
                    const WorldRealization& world, double floor, double time, double r) {
    Outcome out;
    out.exercise_time = time;
    out.winner = scored_winner(bids, mu, floor);
    if (!out.winner) return out;
    const std::size_t w = *out.winner;
    if (format == Format::FirstPrice) {
        out.payment_if_clicked = bids[w];
    } else {
        double runner_up = 0.0;
        for (std::size_t j = 0; j < bids.size(); ++j) {
            if (j == w || bids[j] < floor) continue;
            runner_up = std::max(runner_up, mu[j] * bids[j]);
        }
        out.payment_if_clicked = std::max(runner_up / mu[w], floor);
    }
    double discount = 1.0;
    if (r > 0.0) discount = std::isinf(time) ? 0.0 : std::exp(-r * time);
    out.realized_revenue = static_cast<double>(world.theta[w]) * out.payment_if_clicked * discount;
    return out;
}

double first_tick(const WorldRealization& world) {
    return *std::min_element(world.clocks.begin(), world.clocks.end());
}

void check_inputs(const AuctionSpec& spec, const BidProfile& bids, const WorldRealization& world) {
    const auto n = static_cast<std::size_t>(spec.params.n);
    if (bids.size() != n || world.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "bid profile and world must have n entries");
    }
    if (!bids.valid()) throw Error(ErrorCode::InvalidArgument, "bids must be finite and >= 0");
}

}  // namespace

PolicyDecision spa_stop(const BidProfile&) {
    return {PolicyKind::StopNow, "revenue process is a supermartingale"};
}

Outcome fpa_stop(const BidProfile& bids, const WorldRealization& world) {
    return run_auction(Format::FirstPrice, bids.bids, limit_beliefs(world), world, 0.0, kInfinity,
                       0.0);
}

PolicyDecision spa_reserve_policy(const BidProfile& bids, double reserve) {
    const auto [b1, b2] = sort_pair(bids);
    if (b1 < reserve) return {PolicyKind::StopNow, "no sale: both bids below the reserve"};
    if (b2 >= 2.0 * reserve) return {PolicyKind::StopNow, "competition beats waiting"};
    if (b2 >= reserve) return {PolicyKind::ContinueUntilNews, "reserve backstop beats competition"};
    return {PolicyKind::StopNow, "single eligible bidder: value is a martingale"};
}

double spa_reserve_value(double mu, double b2, double reserve) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorCode::DomainError, "belief outside [0, 1]");
    if (b2 >= 2.0 * reserve) return mu * b2;
    return (b2 - 2.0 * reserve) * mu * mu + 2.0 * reserve * mu;
}

double fpa_discount_threshold(double b1, double b2, const MarketParams& params) {
    if (b2 == 0.0) throw Error(ErrorCode::ZeroBid, "threshold undefined for a zero bid");
    if (b1 < b2) throw Error(ErrorCode::InvalidArgument, "expects b1 >= b2");
    return std::max(1.0 - params.rho() * b1 / b2, params.p);
}

double no_news_stop_time(double mu0, double mu_bar, double lambda) {
    if (mu_bar <= mu0) return 0.0;
    if (!(mu0 > 0.0) || !(mu_bar < 1.0)) {
        throw Error(ErrorCode::DomainError, "hitting time needs 0 < mu0 <= mu_bar < 1");
    }
    return (logit(mu_bar) - logit(mu0)) / lambda;
}

double fpa_pair_stop_time(double bid_a, double bid_b, const MarketParams& params) {
    if (params.r == 0.0) return kInfinity;
    const double high = std::max(bid_a, bid_b);
    const double low = std::min(bid_a, bid_b);
    if (!(low > 0.0)) return 0.0;
    return no_news_stop_time(params.p, fpa_discount_threshold(high, low, params), params.lambda);
}

double fpa_discount_value(double mu, double b1, double b2, double rho, double mu_bar) {
    if (!(mu_bar > 0.0 && mu_bar < 1.0)) throw Error(ErrorCode::DomainError, "mu_bar outside (0, 1)");
    if (!(mu >= 0.0 && mu <= mu_bar)) throw Error(ErrorCode::DomainError, "mu outside [0, mu_bar]");
    if (mu == 0.0) return 0.0;
    const double odds_ratio = mu * (1.0 - mu_bar) / (mu_bar * (1.0 - mu));
    return mu * (1.0 - mu) * (b1 + b2) / (rho + 1.0) +
           b1 / (1.0 + rho) * mu * mu * std::pow(odds_ratio, rho);
}

double fpa_discount_value_function(double mu, double b1, double b2, double rho) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorCode::DomainError, "belief outside [0, 1]");
    if (rho == 0.0) return mu * mu * b1 + mu * (1.0 - mu) * (b1 + b2);
    if (b2 == 0.0) return mu * b1;
    const double raw = 1.0 - rho * b1 / b2;
    if (raw <= 0.0 || mu >= raw) return mu * b1;
    return fpa_discount_value(mu, b1, b2, rho, raw);
}

PolicyDecision spa3_policy(double, double b2, double b3) {
    if (b2 >= 2.0 * b3) return {PolicyKind::StopNow, "third bid too weak to justify waiting"};
    return {PolicyKind::ContinueUntilNews, "wait for the first bad news, then stop"};
}

double spa3_value(double mu, double b2, double b3) {
    if (b2 >= 2.0 * b3) return mu * b2;
    return 0.5 * (b2 - 2.0 * b3) * mu * mu * mu + 0.5 * (b2 + 2.0 * b3) * mu;
}

Outcome fpa_n_stop(const BidProfile& bids, const WorldRealization& world) {
    Outcome out = run_auction(Format::FirstPrice, bids.bids, limit_beliefs(world), world, 0.0,
                              kInfinity, 0.0);
    const auto good = std::count(world.theta.begin(), world.theta.end(), 1);
    if (good < 2) {
        std::vector<double> sorted = world.clocks;
        std::sort(sorted.begin(), sorted.end());
        out.exercise_time = sorted[sorted.size() - 2];
    }
    return out;
}

void require_supported(const AuctionSpec& spec) {
    spec.params.validate();
    const int n = spec.params.n;
    const bool reserve = spec.reserve > 0.0;
    const bool discounted = spec.params.r > 0.0;
    const bool fpa = spec.format == Format::FirstPrice;
    auto reject = [&](const char* why) {
        throw Error(ErrorCode::UnsupportedCombination,
                    std::string(to_string(spec.format)) + ", n=" + std::to_string(n) + ": " + why);
    };
    if (spec.reserve < 0.0) reject("negative reserve");
    if (reserve && discounted) reject("reserve prices with r > 0 are not solved");
    if (spec.timing == Timing::ForcedLimit && discounted) reject("forced limit timing needs r = 0");
    if (reserve && n != 2) reject("reserve prices are solved for two bidders only");
    if (discounted && n != 2) reject("r > 0 is solved for two bidders only");
    if (!fpa && n > 3) reject("second-price stopping is solved for n <= 3");
    if (!fpa && n == 3 && spec.timing == Timing::ForcedLimit) reject("forced timing needs n = 2");
}

Outcome exercise(const AuctionSpec& spec, const BidProfile& bids, const WorldRealization& world,
                 const ExerciseOptions& options) {
    require_supported(spec);
    check_inputs(spec, bids, world);
    const auto& params = spec.params;
    const double floor = options.floor_at_reserve ? spec.reserve : 0.0;
    const double r = params.r;

    auto run_at = [&](double t) {
        return run_auction(spec.format, bids.bids, beliefs_when(params, world, t), world, floor, t, r);
    };

    if (spec.timing == Timing::ForcedLimit) return run_at(kInfinity);

    if (spec.format == Format::FirstPrice) {
        if (params.n > 2) return fpa_n_stop(bids, world);
        if (r == 0.0) return run_at(kInfinity);
        const double stop = fpa_pair_stop_time(bids.bids[0], bids.bids[1], params);
        return run_at(std::min(stop, first_tick(world)));
    }

    if (params.n == 3) {
        std::vector<double> sorted = bids.bids;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const auto policy = spa3_policy(sorted[0], sorted[1], sorted[2]);
        return run_at(policy.kind == PolicyKind::StopNow ? 0.0 : first_tick(world));
    }
    if (spec.reserve == 0.0) return run_at(0.0);
    const auto policy = spa_reserve_policy(bids, spec.reserve);
    return run_at(policy.kind == PolicyKind::StopNow ? 0.0 : first_tick(world));
}

}  // namespace dynascore
