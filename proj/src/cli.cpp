#include "dynascore/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>

#include <omp.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

#include "dynascore/acceptance.hpp"
#include "dynascore/errors.hpp"
#include "dynascore/oracle.hpp"

#ifndef DYNASCORE_VERSION
#define DYNASCORE_VERSION "0.0.0"
#endif

namespace dynascore {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

int exit_code_for(const std::exception& error) {
    if (const auto* e = dynamic_cast<const Error*>(&error)) {
        return e->code() == ErrorCode::UnsupportedCombination ? exit_code::unsupported
                                                              : exit_code::config_error;
    }
    return exit_code::config_error;
}

void set_threads(std::optional<int> threads) {
    if (threads && *threads > 0) omp_set_num_threads(*threads);
}

const std::vector<std::string>& config_schema() {
    static const std::vector<std::string> keys{
        "market.p",          "market.lambda",        "market.r",
        "market.n",          "dist.family",          "dist.k",
        "dist.hi",           "dist.path",            "run.n_samples",
        "run.seed",          "experiment.*.format",  "experiment.*.reserve",
        "experiment.*.bidding", "experiment.*.bids", "experiment.*.timing",
        "experiment.*.p",    "experiment.*.r",       "experiment.*.lambda",
        "experiment.*.n",    "solver.value_grid",    "solver.bid_grid",
        "solver.refine",     "solver.damping",       "solver.tolerance",
        "solver.max_iters",  "solver.reserve",
    };
    return keys;
}

namespace {

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& digest,
                    std::uint64_t seed, std::vector<std::string> outputs) {
    outputs.push_back("manifest.json");
    json m;
    m["command"] = command;
    m["config_digest"] = digest;
    m["seed"] = seed;
    m["tool_version"] = DYNASCORE_VERSION;
    m["timestamp"] = timestamp_utc();
    m["outputs"] = outputs;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

Format parse_format(const std::string& s, const std::string& key) {
    if (s == "second-price" || s == "spa") return Format::SecondPrice;
    if (s == "first-price" || s == "fpa") return Format::FirstPrice;
    throw Error(ErrorCode::ConfigError,
                "field '" + key + "': expected first-price or second-price, got '" + s + "'");
}

Timing parse_timing(const std::string& s, const std::string& key) {
    if (s == "optimal") return Timing::Optimal;
    if (s == "forced-limit") return Timing::ForcedLimit;
    throw Error(ErrorCode::ConfigError,
                "field '" + key + "': expected optimal or forced-limit, got '" + s + "'");
}

double reserve_value(const Config& cfg, const std::string& key, const ValueDistribution& dist) {
    if (!cfg.has(key)) return 0.0;
    if (cfg.text(key) == "optimal") return optimal_reserve(dist).value;
    return cfg.real(key);
}

Config load_checked(const fs::path& path) {
    Config cfg = Config::load(path);
    cfg.require_known(config_schema());
    return cfg;
}

std::uint64_t seed_for(const Config& cfg, const RunOptions& options) {
    if (options.seed) return *options.seed;
    const auto s = cfg.integer_or("run.seed", 1);
    if (s < 0) throw Error(ErrorCode::ConfigError, "field 'run.seed': must be >= 0");
    return static_cast<std::uint64_t>(s);
}

}  // namespace

MarketParams market_from_config(const Config& cfg) {
    MarketParams params;
    params.p = cfg.real("market.p");
    params.lambda = cfg.real_or("market.lambda", 1.0);
    params.r = cfg.real_or("market.r", 0.0);
    params.n = static_cast<int>(cfg.integer_or("market.n", 2));
    try {
        params.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, std::string("market section: ") + e.what());
    }
    return params;
}

ValueDistribution dist_from_config(const Config& cfg) {
    const std::string family = cfg.text_or("dist.family", "uniform");
    const double hi = cfg.real_or("dist.hi", 1.0);
    if (family == "uniform") return ValueDistribution::uniform(hi);
    if (family == "power") return ValueDistribution::power(cfg.real("dist.k"), hi);
    if (family == "tabulated") return ValueDistribution::load_tabulated(cfg.text("dist.path"));
    throw Error(ErrorCode::ConfigError,
                "field 'dist.family': expected uniform, power or tabulated, got '" + family + "'");
}

SolverOptions solver_from_config(const Config& cfg, const ValueDistribution& dist) {
    SolverOptions o;
    o.value_grid = static_cast<std::size_t>(cfg.integer_or("solver.value_grid", 512));
    o.bid_grid = static_cast<std::size_t>(cfg.integer_or("solver.bid_grid", 1024));
    o.refine = static_cast<std::size_t>(cfg.integer_or("solver.refine", 16));
    o.damping = cfg.real_or("solver.damping", 0.5);
    o.tolerance = cfg.real_or("solver.tolerance", 1e-4);
    o.max_iters = static_cast<int>(cfg.integer_or("solver.max_iters", 200));
    o.reserve = reserve_value(cfg, "solver.reserve", dist);
    if (o.value_grid < 2 || o.bid_grid < 3 || o.refine < 1 || o.max_iters < 1) {
        throw Error(ErrorCode::ConfigError, "solver section: grid sizes or max_iters too small");
    }
    if (!(o.damping >= 0.0 && o.damping < 1.0)) {
        throw Error(ErrorCode::ConfigError, "field 'solver.damping': must lie in [0, 1)");
    }
    return o;
}

std::vector<NamedExperiment> experiments_from_config(const Config& cfg, std::uint64_t seed,
                                                     bool inject_reserve_fault) {
    const MarketParams market = market_from_config(cfg);
    const ValueDistribution dist = dist_from_config(cfg);
    const auto n_samples = cfg.integer_or("run.n_samples", 100000);
    if (n_samples < 1) throw Error(ErrorCode::ConfigError, "field 'run.n_samples': must be >= 1");

    const auto names = cfg.groups("experiment");
    if (names.empty()) throw Error(ErrorCode::ConfigError, "missing required field 'experiment.<name>.format'");
    std::vector<NamedExperiment> out;
    for (const auto& name : names) {
        const std::string k = "experiment." + name + ".";
        ExperimentConfig e;
        e.dist = dist;
        e.n_samples = static_cast<std::size_t>(n_samples);
        e.seed = seed;
        e.exercise.floor_at_reserve = !inject_reserve_fault;
        e.spec.format = parse_format(cfg.text(k + "format"), k + "format");
        e.spec.timing = parse_timing(cfg.text_or(k + "timing", "optimal"), k + "timing");
        e.spec.reserve = reserve_value(cfg, k + "reserve", dist);
        e.spec.params = market;
        e.spec.params.p = cfg.real_or(k + "p", market.p);
        e.spec.params.r = cfg.real_or(k + "r", market.r);
        e.spec.params.lambda = cfg.real_or(k + "lambda", market.lambda);
        e.spec.params.n = static_cast<int>(cfg.integer_or(k + "n", market.n));

        const std::string bidding = cfg.text_or(
            k + "bidding", e.spec.format == Format::SecondPrice ? "truthful" : "closed-form");
        if (bidding == "truthful") {
            e.bidding = Truthful{};
        } else if (bidding == "closed-form") {
            e.bidding = ClosedFormFPA{};
        } else if (bidding == "fixed") {
            e.bidding = FixedBids{cfg.reals(k + "bids")};
        } else if (bidding == "equilibrium") {
            require_supported(e.spec);
            SolverOptions solver = solver_from_config(cfg, dist);
            solver.reserve = e.spec.reserve;
            spdlog::info("solving equilibrium for experiment '{}'", name);
            auto eq = fpa_equilibrium_solve(dist, e.spec.params, solver);
            if (!eq.report.converged) {
                spdlog::warn("experiment '{}': solver stopped at delta {} after {} iterations", name,
                             eq.report.sup_norm_delta, eq.report.iterations);
            }
            e.bidding = SolvedEquilibrium{std::move(eq.bids)};
        } else {
            throw Error(ErrorCode::ConfigError,
                        "field '" + k + "bidding': expected truthful, closed-form, equilibrium or fixed");
        }
        try {
            validate(e);
        } catch (const Error& err) {
            if (err.code() == ErrorCode::UnsupportedCombination) throw;
            throw Error(ErrorCode::ConfigError, "experiment '" + name + "': " + err.what());
        }
        out.push_back({name, std::move(e)});
    }
    return out;
}

int cmd_simulate(const RunOptions& options) {
    set_threads(options.threads);
    const Config cfg = load_checked(options.config);
    const std::uint64_t seed = seed_for(cfg, options);
    const auto experiments = experiments_from_config(cfg, seed, options.inject_reserve_fault);
    fs::create_directories(options.out);

    std::string csv = "format,reserve,r,p,lambda,bidding,n_samples,seed,mean,std_error\n";
    for (const auto& [name, e] : experiments) {
        spdlog::info("simulating '{}' ({} samples)", name, e.n_samples);
        const RevenueEstimate est = simulate_revenue(e);
        csv += std::string(to_string(e.spec.format)) + "," + format_real(e.spec.reserve) + "," +
               format_real(e.spec.params.r) + "," + format_real(e.spec.params.p) + "," +
               format_real(e.spec.params.lambda) + "," + bidding_label(e.bidding) + "," +
               std::to_string(est.n_samples) + "," + std::to_string(est.seed) + "," +
               format_real(est.mean) + "," + format_real(est.std_error) + "\n";
    }
    write_text(options.out / "revenue.csv", csv);
    write_manifest(options.out, "simulate", cfg.digest(), seed, {"revenue.csv"});
    return exit_code::ok;
}

int cmd_equilibrium(const RunOptions& options) {
    set_threads(options.threads);
    const Config cfg = load_checked(options.config);
    const std::uint64_t seed = seed_for(cfg, options);
    const MarketParams params = market_from_config(cfg);
    const ValueDistribution dist = dist_from_config(cfg);
    const SolverOptions solver = solver_from_config(cfg, dist);
    fs::create_directories(options.out);

    const auto eq = fpa_equilibrium_solve(dist, params, solver);
    std::string csv = "v,bid\n";
    for (std::size_t i = 0; i < eq.bids.grid_values.size(); ++i) {
        csv += format_real(eq.bids.grid_values[i]) + "," + format_real(eq.bids.grid_bids[i]) + "\n";
    }
    write_text(options.out / "bids.csv", csv);

    json report;
    report["iterations"] = eq.report.iterations;
    report["sup_norm_delta"] = eq.report.sup_norm_delta;
    report["converged"] = eq.report.converged;
    report["tolerance"] = eq.report.tolerance;
    report["best_response_gap"] = eq.report.best_response_gap;
    write_text(options.out / "solver.json", report.dump(2) + "\n");
    write_manifest(options.out, "equilibrium", cfg.digest(), seed, {"bids.csv", "solver.json"});

    if (!eq.report.converged) {
        spdlog::error("solver did not converge: delta {} > tolerance {}", eq.report.sup_norm_delta,
                      eq.report.tolerance);
        return exit_code::not_converged;
    }
    return exit_code::ok;
}

int cmd_value_function(const ValueFunctionArgs& args) {
    std::vector<double> b{args.b1, args.b2};
    if (args.b3) b.push_back(*args.b3);
    std::sort(b.begin(), b.end(), std::greater<>());

    AuctionSpec spec;
    spec.format = args.format;
    spec.reserve = args.reserve;
    spec.params.p = args.p;
    spec.params.lambda = args.lambda;
    spec.params.r = args.r;
    spec.params.n = static_cast<int>(b.size());
    require_supported(spec);
    if (!BidProfile{b}.valid()) throw Error(ErrorCode::InvalidArgument, "bids must be finite and >= 0");
    if (!(args.grid_step > 0.0 && args.grid_step <= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "grid step must lie in (0, 0.5]");
    }
    const double rho = spec.params.rho();
    const bool spa = args.format == Format::SecondPrice;
    if (!spa && (b.size() == 3 || args.reserve > 0.0)) {
        throw Error(ErrorCode::UnsupportedCombination,
                    "first-price value function is solved for two bidders without reserve");
    }

    DPSpec dp;
    std::function<double(double)> closed;
    if (spa && b.size() == 3) {
        dp = spa3_dp(b[1], b[2]);
        closed = [&](double mu) { return spa3_value(mu, b[1], b[2]); };
    } else if (spa) {
        dp = spa_reserve_dp(b[1], args.reserve);
        dp.rho = rho;
        closed = [&](double mu) { return spa_reserve_value(mu, b[1], args.reserve); };
    } else {
        dp = fpa_discount_dp(b[0], b[1], rho);
        closed = [&](double mu) { return fpa_discount_value_function(mu, b[0], b[1], rho); };
    }
    dp.grid_step = args.grid_step;
    const DPResult res = dp_solve(dp);

    fs::create_directories(args.out);
    const std::string boundary = res.boundary ? format_real(*res.boundary) : "";
    std::string csv = "mu,closed_form,dp_oracle,abs_diff,stop,boundary\n";
    for (std::size_t k = 0; k < res.mu.size(); ++k) {
        const double cf = closed(res.mu[k]);
        csv += format_real(res.mu[k]) + "," + format_real(cf) + "," + format_real(res.value[k]) + "," +
               format_real(std::abs(cf - res.value[k])) + "," + (res.stop_region[k] ? "1" : "0") + "," +
               boundary + "\n";
    }
    write_text(args.out / "value.csv", csv);

    json digest_src;
    digest_src["format"] = to_string(args.format);
    digest_src["bids"] = b;
    digest_src["reserve"] = args.reserve;
    digest_src["r"] = args.r;
    digest_src["lambda"] = args.lambda;
    digest_src["p"] = args.p;
    digest_src["grid_step"] = args.grid_step;
    Config pseudo;
    for (const auto& [k, v] : digest_src.items()) pseudo.set(k, v.dump());
    write_manifest(args.out, "value-function", pseudo.digest(), 0, {"value.csv"});
    if (!res.converged) spdlog::warn("dp oracle stopped at delta {}", res.last_delta);
    return exit_code::ok;
}

int cmd_verify(const RunOptions& options) {
    set_threads(options.threads);
    AcceptanceOptions acc;
    if (options.seed) acc.seed = *options.seed;
    acc.inject_reserve_fault = options.inject_reserve_fault;
    fs::create_directories(options.out);
    acc.scratch = options.out / "scratch";
    const auto results = run_acceptance(acc);

    json report;
    report["seed"] = acc.seed;
    report["inject_reserve_fault"] = acc.inject_reserve_fault;
    bool all = true;
    for (const auto& c : results) {
        all = all && c.pass;
        json jc;
        jc["criterion"] = c.id;
        jc["title"] = c.title;
        jc["pass"] = c.pass;
        jc["seconds"] = c.seconds;
        for (const auto& ch : c.checks) {
            jc["checks"].push_back({{"name", ch.name},
                                    {"pass", ch.pass},
                                    {"observed", ch.observed},
                                    {"tolerance", ch.tolerance},
                                    {"detail", ch.detail}});
        }
        report["criteria"].push_back(jc);
        std::printf("[%s] %2d %s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str());
    }
    report["all_pass"] = all;
    write_text(options.out / "verify_report.json", report.dump(2) + "\n");
    fs::remove_all(acc.scratch);
    write_manifest(options.out, "verify", "", acc.seed, {"verify_report.json"});
    return all ? exit_code::ok : exit_code::verify_failed;
}

}  // namespace dynascore
