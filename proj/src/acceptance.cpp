#include "dynascore/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "dynascore/cli.hpp"
#include "dynascore/equilibrium.hpp"
#include "dynascore/oracle.hpp"
#include "dynascore/revenue.hpp"

namespace dynascore {

namespace {

namespace fs = std::filesystem;

constexpr std::size_t kBigSample = 1000000;

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(10);
    s << x;
    return s.str();
}

CheckResult check(std::string name, bool pass, double observed, double tolerance,
                  std::string detail = "") {
    return {std::move(name), pass, observed, tolerance, std::move(detail)};
}

/// |estimate - target| <= 3 se.
CheckResult within_3se(std::string name, double estimate, double target, double se) {
    const double tol = 3.0 * se;
    return check(std::move(name), std::abs(estimate - target) <= tol, estimate, tol,
                 "target " + fmt(target) + ", se " + fmt(se));
}

/// |a - b| <= tol.
CheckResult close_to(std::string name, double observed, double target, double tol) {
    return check(std::move(name), std::abs(observed - target) <= tol, observed, tol,
                 "target " + fmt(target));
}

ExperimentConfig base_config(Format format, const ValueDistribution& dist, double p,
                             std::uint64_t seed, std::size_t n_samples) {
    ExperimentConfig c;
    c.spec.format = format;
    c.spec.params.p = p;
    c.dist = dist;
    c.seed = seed;
    c.n_samples = n_samples;
    c.bidding = format == Format::SecondPrice ? Bidding{Truthful{}} : Bidding{ClosedFormFPA{}};
    return c;
}

struct NamedDist {
    const char* name;
    ValueDistribution dist;
};

std::vector<NamedDist> families() {
    return {{"uniform", ValueDistribution::uniform()}, {"power2", ValueDistribution::power(2.0)}};
}

std::vector<CheckResult> revenue_ratio(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    for (const auto& [name, dist] : families()) {
        for (double p : {0.25, 0.5, 0.75}) {
            const RatioCheck rc = check_revenue_ratio(dist, p, kBigSample, o.seed);
            const std::string cell = std::string(name) + " p=" + fmt(p);
            out.push_back(within_3se(cell + " ratio within 3se of 1/p", rc.ratio, rc.target, rc.std_error));
            out.push_back(close_to(cell + " ratio within 0.02 of 1/p", rc.ratio, rc.target, 0.02));
        }
    }
    return out;
}

std::vector<CheckResult> closed_form_anchors(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    out.push_back(close_to("uniform E[max phi] by quadrature", expected_max_virtual(ValueDistribution::uniform()),
                           1.0 / 3.0, 1e-8));
    const double p = 0.5;
    for (const auto& [name, dist] : families()) {
        const double e = expected_max_virtual(dist);
        for (Format f : {Format::SecondPrice, Format::FirstPrice}) {
            const RevenueEstimate est = simulate_revenue(base_config(f, dist, p, o.seed, kBigSample));
            const double target = f == Format::SecondPrice ? p * e : p * p * e;
            out.push_back(within_3se(std::string(name) + " " + to_string(f) + " MC mean", est.mean, target,
                                     est.std_error));
        }
    }
    return out;
}

std::vector<CheckResult> revenue_equivalence(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    for (const auto& [name, dist] : families()) {
        for (double p : {0.5, 0.25}) {
            ExperimentConfig c = base_config(Format::SecondPrice, dist, p, o.seed, kBigSample);
            c.spec.timing = Timing::ForcedLimit;
            const RevenueEstimate est = simulate_revenue(c);
            out.push_back(within_3se(std::string(name) + " p=" + fmt(p) +
                                         " second-price at first-price timing vs first-price closed form",
                                     est.mean, revenue_closed_form(Format::FirstPrice, dist, p), est.std_error));
        }
    }
    return out;
}

double sup_diff(const DPResult& res, const std::function<double(double)>& f) {
    double d = 0.0;
    for (std::size_t k = 0; k < res.mu.size(); ++k) d = std::max(d, std::abs(res.value[k] - f(res.mu[k])));
    return d;
}

std::vector<CheckResult> reserve_oracle(const AcceptanceOptions&) {
    std::vector<CheckResult> out;
    const double reserve = 0.4;
    for (double ratio : {0.5, 1.0, 1.5, 1.9, 2.1, 3.0}) {
        const double b2 = ratio * reserve;
        const DPResult res = dp_solve(spa_reserve_dp(b2, reserve));
        const double d = sup_diff(res, [&](double mu) { return spa_reserve_value(mu, b2, reserve); });
        const std::string tag = "b2/R=" + fmt(ratio);
        out.push_back(check(tag + " sup-norm vs closed form", d <= 1e-3 && res.converged, d, 1e-3));
        const bool stops = ratio >= 2.0;
        const bool region_ok = has_interval_structure(res) &&
                               (stops ? res.boundary == 0.0 : !res.boundary.has_value());
        out.push_back(check(tag + (stops ? " stops everywhere" : " continues everywhere"), region_ok,
                            res.boundary.value_or(-1.0), 0.0));
    }
    return out;
}

std::vector<CheckResult> discounted_fpa(const AcceptanceOptions&) {
    std::vector<CheckResult> out;
    const double step = 1e-3;
    for (double rho : {0.05, 0.1, 0.5}) {
        for (auto [b1, b2] : {std::pair{1.0, 1.0}, std::pair{1.0, 0.8}}) {
            const std::string tag = "rho=" + fmt(rho) + " b=(" + fmt(b1) + "," + fmt(b2) + ")";
            const double mu_bar = 1.0 - rho * b1 / b2;
            const DPResult res = dp_solve(fpa_discount_dp(b1, b2, rho));
            const double boundary = res.boundary.value_or(-1.0);
            out.push_back(close_to(tag + " free boundary", boundary, mu_bar, step + 1e-12));
            const double d = sup_diff(res, [&](double mu) { return fpa_discount_value_function(mu, b1, b2, rho); });
            out.push_back(check(tag + " value sup-norm", d <= 1e-2, d, 1e-2));
            const double gap = std::abs(fpa_discount_value(mu_bar, b1, b2, rho, mu_bar) - mu_bar * b1);
            out.push_back(check(tag + " continuous pasting", gap <= 1e-12, gap, 1e-12));
        }
    }
    return out;
}

std::vector<CheckResult> three_bidders(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    for (auto [b2, b3] : {std::pair{0.8, 0.6}, std::pair{0.5, 0.4}, std::pair{0.9, 0.5},
                          std::pair{0.8, 0.3}, std::pair{1.0, 0.5}}) {
        const std::string tag = "(b2,b3)=(" + fmt(b2) + "," + fmt(b3) + ")";
        const DPResult res = dp_solve(spa3_dp(b2, b3));
        const double d = sup_diff(res, [&](double mu) { return spa3_value(mu, b2, b3); });
        out.push_back(check(tag + " sup-norm vs closed form", d <= 1e-3, d, 1e-3));
        if (b2 >= 2.0 * b3) {
            out.push_back(check(tag + " immediate stop", res.boundary == 0.0, res.boundary.value_or(-1.0), 0.0));
        }
    }

    const auto dist = ValueDistribution::uniform();
    std::size_t violations = 0;
    std::size_t worlds = 0;
    for (int n : {2, 3}) {
        AuctionSpec spa;
        spa.params.n = n;
        AuctionSpec fpa = spa;
        fpa.format = Format::FirstPrice;
        for (std::size_t i = 0; i < 100000; ++i) {
            rng::Stream s(rng::derive_seed(o.seed ^ 0x7a11ULL, i));
            const auto world = sample_world(spa.params, s);
            const BidProfile bids{sample_values(dist, static_cast<std::size_t>(n), s)};
            const double t2 = exercise(spa, bids, world).exercise_time;
            const double t1 = exercise(fpa, bids, world).exercise_time;
            if (!(t2 <= t1)) ++violations;
            ++worlds;
        }
    }
    out.push_back(check("exercise-time ordering on " + std::to_string(worlds) + " worlds", violations == 0,
                        static_cast<double>(violations), 0.0));
    return out;
}

std::vector<CheckResult> equilibrium_solver(const AcceptanceOptions&) {
    std::vector<CheckResult> out;
    const auto dist = ValueDistribution::uniform();
    MarketParams params;
    // Start from truthful bids so the closed form is not the initial guess.
    SolverOptions from_truth;
    from_truth.initial = BidFunction{{0.0, 1.0}, {0.0, 1.0}, 0.0};
    const auto eq = fpa_equilibrium_solve(dist, params, from_truth);
    double d = 0.0;
    for (std::size_t i = 0; i < eq.bids.grid_values.size(); ++i) {
        d = std::max(d, std::abs(eq.bids.grid_bids[i] - fpa_bid_closed_form(dist, params.p, eq.bids.grid_values[i])));
    }
    out.push_back(check("r=0 fixed point from truthful start vs closed form (512 points)",
                        d <= 1e-3 && eq.report.converged && eq.bids.grid_values.size() == 512, d, 1e-3));
    out.push_back(check("r=0 fixed point vs lattice best response", eq.report.best_response_gap <= 1e-3,
                        eq.report.best_response_gap, 1e-3));

    SolverOptions with_reserve;
    with_reserve.reserve = 0.5;
    const BidFunction opponent = tabulate_closed_form(dist, params.p, with_reserve);
    std::vector<double> values;
    for (int i = 0; i <= 64; ++i) values.push_back(0.5 + 0.5 * i / 64.0);
    const auto reply = fpa_best_response_sweep(dist, params, opponent, values, with_reserve);
    double dr = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        dr = std::max(dr, std::abs(reply[i] - *fpa_bid_with_reserve(dist, params.p, 0.5, values[i])));
    }
    out.push_back(check("reserve bids vs best-response oracle (R=0.5)", dr <= 1e-3, dr, 1e-3));
    return out;
}

std::vector<CheckResult> dominance_chain(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    const auto dist = ValueDistribution::uniform();
    double worst = kInfinity;
    for (int i = 1; i <= 9; ++i) {
        const double p = 0.1 * i;
        const double opt = optimal_revenue(dist, p);
        const double spa = revenue_closed_form(Format::SecondPrice, dist, p);
        const double fpa = revenue_closed_form(Format::FirstPrice, dist, p);
        const double slack = std::min({opt - spa, spa - fpa, opt - fpa / p});
        worst = std::min(worst, slack);
    }
    out.push_back(check("optimal >= second-price >= first-price, optimal >= first-price/p (p=0.1..0.9)",
                        worst >= -1e-9, worst, 1e-9));

    const double reserve = optimal_reserve(dist).value;
    for (double p : {0.25, 0.5, 0.75}) {
        ExperimentConfig c = base_config(Format::FirstPrice, dist, p, o.seed, kBigSample);
        c.spec.reserve = reserve;
        c.exercise.floor_at_reserve = !o.inject_reserve_fault;
        const RevenueEstimate est = simulate_revenue(c);
        out.push_back(within_3se("first-price with optimal reserve MC vs optimal revenue, p=" + fmt(p), est.mean,
                                 optimal_revenue(dist, p), est.std_error));
    }

    // Reserve revenue at fixed bids: one profile per branch of the policy.
    for (auto [b1, b2] : {std::pair{0.9, 0.3}, std::pair{0.7, 0.6}}) {
        ExperimentConfig c = base_config(Format::SecondPrice, dist, 0.5, o.seed, 200000);
        c.spec.reserve = 0.4;
        c.bidding = FixedBids{{b1, b2}};
        c.exercise.floor_at_reserve = !o.inject_reserve_fault;
        const RevenueEstimate est = simulate_revenue(c);
        const double exact = enumerate_expected_revenue(c.spec, BidProfile{{b1, b2}});
        out.push_back(within_3se("second-price R=0.4 bids (" + fmt(b1) + "," + fmt(b2) + ") MC vs enumeration",
                                 est.mean, exact, est.std_error));
    }
    return out;
}

std::vector<CheckResult> deviation(const AcceptanceOptions&) {
    const DeviationWitness w = deviation_witness(ValueDistribution::uniform(), 0.1);
    return {check("deviation profit v_max - eps - 2R > 0 (uniform, R=" + fmt(w.reserve) + ", eps=0.1)",
                  w.profit > 0.0, w.profit, 0.0,
                  std::string("premise v_max > 2R and eps < (v_max - 2R)/2 ") +
                      (w.premise_holds ? "holds" : "does not hold"))};
}

std::vector<CheckResult> discount_ranking(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    const auto rows = revenue_vs_discount(ValueDistribution::uniform(), 0.5, 1.0, {0.1, 0.03, 0.01},
                                          kBigSample, o.seed);
    const double base = rows.front().first_price.mean;
    double previous = kInfinity;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string tag = "r=" + fmt(row.r);
        out.push_back(check(tag + " solver converged", row.solver.converged, row.solver.sup_norm_delta,
                            row.solver.tolerance));
        out.push_back(check(tag + " first-price below second-price", row.first_price.mean < row.second_price.mean,
                            row.first_price.mean, row.second_price.mean));
        const double gap = std::abs(row.first_price.mean - base);
        out.push_back(check(tag + " |pi1(r) - pi1(0)| below previous rate", gap < previous, gap, previous));
        previous = gap;
    }
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<CheckResult> determinism(const AcceptanceOptions& o) {
    std::vector<CheckResult> out;
    fs::create_directories(o.scratch);
    const fs::path config = o.scratch / "determinism.cfg";
    {
        std::ofstream cfg(config);
        cfg << "market.p = 0.5\nmarket.lambda = 1\n"
               "run.n_samples = 50000\nrun.seed = " << o.seed << "\n"
               "solver.value_grid = 128\nsolver.bid_grid = 256\n"
               "experiment.a.format = second-price\n"
               "experiment.b.format = first-price\nexperiment.b.bidding = closed-form\n"
               "experiment.c.format = first-price\nexperiment.c.bidding = equilibrium\nexperiment.c.r = 0.03\n"
               "experiment.d.format = second-price\nexperiment.d.reserve = 0.4\n"
               "experiment.d.bidding = fixed\nexperiment.d.bids = 0.7, 0.6\n"
               "experiment.e.format = first-price\nexperiment.e.reserve = optimal\n";
    }
    const int saved = omp_get_max_threads();
    std::vector<std::string> revenue;
    std::vector<std::string> bids;
    const std::vector<int> threads{1, 2, 4, 1};
    for (std::size_t i = 0; i < threads.size(); ++i) {
        RunOptions run;
        run.config = config;
        run.threads = threads[i];
        run.out = o.scratch / ("run" + std::to_string(i));
        cmd_simulate(run);
        cmd_equilibrium(run);
        revenue.push_back(slurp(run.out / "revenue.csv"));
        bids.push_back(slurp(run.out / "bids.csv"));
    }
    omp_set_num_threads(saved);
    for (std::size_t i = 1; i < threads.size(); ++i) {
        const std::string tag = "threads " + std::to_string(threads[0]) + " vs " + std::to_string(threads[i]);
        out.push_back(check(tag + ": revenue.csv byte-identical", !revenue[0].empty() && revenue[i] == revenue[0],
                            static_cast<double>(revenue[i].size()), 0.0));
        out.push_back(check(tag + ": bids.csv byte-identical", !bids[0].empty() && bids[i] == bids[0],
                            static_cast<double>(bids[i].size()), 0.0));
    }
    return out;
}

struct Criterion {
    int id;
    const char* title;
    std::vector<CheckResult> (*run)(const AcceptanceOptions&);
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {1, "revenue ratio pi2/pi1 = 1/p", revenue_ratio},
        {2, "closed-form revenue anchors", closed_form_anchors},
        {3, "revenue equivalence at the first-price stopping rule", revenue_equivalence},
        {4, "reserve value function vs dynamic program", reserve_oracle},
        {5, "discounted first-price free boundary and value", discounted_fpa},
        {6, "three-bidder value function and exercise-time ordering", three_bidders},
        {7, "equilibrium solver vs closed forms", equilibrium_solver},
        {8, "reserve dominance chain", dominance_chain},
        {9, "second-price reserve deviation witness", deviation},
        {10, "first-price below second-price for small discount rates", discount_ranking},
        {11, "byte-identical outputs across thread counts", determinism},
    };
    return all;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
    const auto& all = criteria();
    const auto it = std::find_if(all.begin(), all.end(), [id](const Criterion& c) { return c.id == id; });
    CriterionResult res;
    res.id = id;
    if (it == all.end()) {
        res.title = "unknown criterion";
        return res;
    }
    res.title = it->title;
    spdlog::info("criterion {}: {}", id, res.title);
    const auto start = std::chrono::steady_clock::now();
    res.checks = it->run(options);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.pass = !res.checks.empty() &&
               std::all_of(res.checks.begin(), res.checks.end(), [](const CheckResult& c) { return c.pass; });
    return res;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    std::vector<CriterionResult> out;
    for (const auto& c : criteria()) {
        if (!options.only.empty() &&
            std::find(options.only.begin(), options.only.end(), c.id) == options.only.end()) {
            continue;
        }
        out.push_back(run_criterion(c.id, options));
    }
    return out;
}

}  // namespace dynascore
