#include "dynascore/revenue.hpp"

#include <algorithm>
#include <cmath>

#include "dynascore/errors.hpp"
#include "dynascore/quadrature.hpp"
#include "dynascore/rng.hpp"

namespace dynascore {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> bids_for(const ExperimentConfig& config, const std::vector<double>& values) {
    const double p = config.spec.params.p;
    const double reserve = config.spec.reserve;
    const auto& dist = config.dist;
    return std::visit(
        Overloaded{
            [&](const Truthful&) { return values; },
            [&](const ClosedFormFPA&) {
                std::vector<double> out(values.size());
                for (std::size_t i = 0; i < values.size(); ++i) {
                    // No bid is encoded as 0, which the reserve rules out.
                    out[i] = reserve > 0.0
                                 ? fpa_bid_with_reserve(dist, p, reserve, values[i]).value_or(0.0)
                                 : fpa_bid_closed_form(dist, p, values[i]);
                }
                return out;
            },
            [&](const SolvedEquilibrium& s) {
                std::vector<double> out(values.size());
                for (std::size_t i = 0; i < values.size(); ++i) out[i] = s.bids(values[i]).value_or(0.0);
                return out;
            },
            [&](const FixedBids& f) { return f.bids; },
        },
        config.bidding);
}

double replication(const ExperimentConfig& config, std::size_t index) {
    rng::Stream stream(rng::derive_seed(config.seed, index));
    const auto n = static_cast<std::size_t>(config.spec.params.n);
    const WorldRealization world = sample_world(config.spec.params, stream);
    const std::vector<double> values = sample_values(config.dist, n, stream);
    const BidProfile bids{bids_for(config, values)};
    return exercise(config.spec, bids, world, config.exercise).realized_revenue;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // sample variance
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    const std::size_t n = x.size();
    m.mean = pairwise_sum(x.data(), n) / static_cast<double>(n);
    if (n < 2) return m;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - m.mean) * (x[i] - m.mean);
    m.variance = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    return m;
}

RevenueEstimate estimate_from(const std::vector<double>& draws, std::uint64_t seed) {
    const Moments m = moments(draws);
    RevenueEstimate est;
    est.mean = m.mean;
    est.std_error = std::sqrt(m.variance / static_cast<double>(draws.size()));
    est.n_samples = draws.size();
    est.seed = seed;
    return est;
}

}  // namespace

std::string bidding_label(const Bidding& bidding) {
    return std::visit(Overloaded{
                          [](const Truthful&) { return std::string("truthful"); },
                          [](const ClosedFormFPA&) { return std::string("closed-form"); },
                          [](const SolvedEquilibrium&) { return std::string("equilibrium"); },
                          [](const FixedBids&) { return std::string("fixed"); },
                      },
                      bidding);
}

void validate(const ExperimentConfig& config) {
    require_supported(config.spec);
    if (config.n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    const auto& spec = config.spec;
    const bool spa = spec.format == Format::SecondPrice;
    if (std::holds_alternative<Truthful>(config.bidding)) {
        const bool bid_free_timing =
            spec.timing == Timing::ForcedLimit || (spec.reserve == 0.0 && spec.params.n == 2);
        if (!spa || !bid_free_timing) {
            throw Error(ErrorCode::InvalidArgument,
                        "truthful bidding needs a second-price auction with bid-independent timing");
        }
    }
    if (std::holds_alternative<ClosedFormFPA>(config.bidding) ||
        std::holds_alternative<SolvedEquilibrium>(config.bidding)) {
        if (spa || spec.params.n != 2) {
            throw Error(ErrorCode::InvalidArgument, "equilibrium bids are for two-bidder first-price");
        }
    }
    if (const auto* f = std::get_if<FixedBids>(&config.bidding)) {
        if (f->bids.size() != static_cast<std::size_t>(spec.params.n)) {
            throw Error(ErrorCode::InvalidArgument, "fixed bids must have n entries");
        }
        if (!BidProfile{f->bids}.valid()) {
            throw Error(ErrorCode::InvalidArgument, "fixed bids must be finite and >= 0");
        }
    }
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

std::vector<double> simulate_draws(const ExperimentConfig& config, Execution execution) {
    validate(config);
    const bool parallel = execution == Execution::Parallel;
    std::vector<double> draws(config.n_samples);
    const auto n = static_cast<std::ptrdiff_t>(config.n_samples);
    // Exceptions cannot leave an OpenMP region; validate() has already
    // rejected everything exercise() would throw on.
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        draws[static_cast<std::size_t>(i)] = replication(config, static_cast<std::size_t>(i));
    }
    return draws;
}

RevenueEstimate simulate_revenue(const ExperimentConfig& config, Execution execution) {
    return estimate_from(simulate_draws(config, execution), config.seed);
}

PairedEstimate simulate_paired(const ExperimentConfig& a, const ExperimentConfig& b,
                               Execution execution) {
    if (a.seed != b.seed || a.n_samples != b.n_samples) {
        throw Error(ErrorCode::InvalidArgument, "paired runs need the same seed and n_samples");
    }
    const auto xa = simulate_draws(a, execution);
    const auto xb = simulate_draws(b, execution);
    PairedEstimate out;
    out.a = estimate_from(xa, a.seed);
    out.b = estimate_from(xb, b.seed);
    const std::size_t n = xa.size();
    const Moments ma = moments(xa);
    const Moments mb = moments(xb);
    double cov = 0.0;
    if (n > 1) {
        std::vector<double> prod(n);
        for (std::size_t i = 0; i < n; ++i) prod[i] = (xa[i] - ma.mean) * (xb[i] - mb.mean);
        cov = pairwise_sum(prod.data(), n) / static_cast<double>(n - 1);
    }
    const double mu_a = ma.mean;
    const double mu_b = mb.mean;
    out.ratio = mu_a / mu_b;
    const double var = ma.variance / (mu_b * mu_b) + mu_a * mu_a * mb.variance / std::pow(mu_b, 4) -
                       2.0 * mu_a * cov / std::pow(mu_b, 3);
    out.ratio_se = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    return out;
}

double expected_max_virtual(const ValueDistribution& dist) {
    // The larger of two iid virtual values has density 2 F f; phi f is the
    // weighted virtual value.
    auto g = [&dist](double v) { return 2.0 * dist.cdf(v) * weighted_virtual_value(dist, v); };
    return integrate(g, dist.lo(), dist.hi(), dist.breakpoints());
}

double expected_virtual(const ValueDistribution& dist) {
    auto g = [&dist](double v) { return weighted_virtual_value(dist, v); };
    return integrate(g, dist.lo(), dist.hi(), dist.breakpoints());
}

double expected_max_virtual_positive(const ValueDistribution& dist) {
    const double from = optimal_reserve(dist).value;
    auto g = [&dist](double v) { return 2.0 * dist.cdf(v) * weighted_virtual_value(dist, v); };
    return integrate(g, from, dist.hi(), dist.breakpoints());
}

double expected_virtual_positive(const ValueDistribution& dist) {
    const double from = optimal_reserve(dist).value;
    auto g = [&dist](double v) { return weighted_virtual_value(dist, v); };
    return integrate(g, from, dist.hi(), dist.breakpoints());
}

double revenue_closed_form(Format format, const ValueDistribution& dist, double p) {
    const double e = expected_max_virtual(dist);
    return format == Format::SecondPrice ? p * e : p * p * e;
}

double optimal_revenue(const ValueDistribution& dist, double p) {
    return p * p * expected_max_virtual_positive(dist) +
           2.0 * p * (1.0 - p) * expected_virtual_positive(dist);
}

RatioCheck check_revenue_ratio(const ValueDistribution& dist, double p, std::size_t n_samples,
                               std::uint64_t seed, Execution execution) {
    ExperimentConfig spa;
    spa.spec.format = Format::SecondPrice;
    spa.spec.params.p = p;
    spa.dist = dist;
    spa.bidding = Truthful{};
    spa.n_samples = n_samples;
    spa.seed = seed;
    ExperimentConfig fpa = spa;
    fpa.spec.format = Format::FirstPrice;
    fpa.bidding = ClosedFormFPA{};

    const PairedEstimate pair = simulate_paired(spa, fpa, execution);
    RatioCheck check;
    check.ratio = pair.ratio;
    check.std_error = pair.ratio_se;
    check.target = 1.0 / p;
    check.pass = std::abs(check.ratio - check.target) <= 3.0 * check.std_error;
    return check;
}

std::vector<DiscountRow> revenue_vs_discount(const ValueDistribution& dist, double p, double lambda,
                                             const std::vector<double>& r_grid,
                                             std::size_t n_samples, std::uint64_t seed,
                                             const SolverOptions& solver) {
    std::vector<double> rates{0.0};
    rates.insert(rates.end(), r_grid.begin(), r_grid.end());
    std::vector<DiscountRow> rows;
    for (double r : rates) {
        MarketParams params;
        params.p = p;
        params.lambda = lambda;
        params.r = r;
        DiscountRow row;
        row.r = r;
        auto eq = fpa_equilibrium_solve(dist, params, solver);
        row.solver = eq.report;

        ExperimentConfig fpa;
        fpa.spec.format = Format::FirstPrice;
        fpa.spec.params = params;
        fpa.dist = dist;
        fpa.bidding = SolvedEquilibrium{std::move(eq.bids)};
        fpa.n_samples = n_samples;
        fpa.seed = seed;
        ExperimentConfig spa = fpa;
        spa.spec.format = Format::SecondPrice;
        spa.bidding = Truthful{};

        row.first_price = simulate_revenue(fpa, solver.execution);
        row.second_price = simulate_revenue(spa, solver.execution);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace dynascore
