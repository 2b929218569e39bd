#include <cstdlib>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dynascore/cli.hpp"
#include "dynascore/errors.hpp"

using namespace dynascore;

namespace {

void init_logging() {
    const char* level = std::getenv("DYNASCORE_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
    spdlog::set_pattern("[%l] %v");
}

void add_run_flags(CLI::App* cmd, RunOptions& run, std::string& fault) {
    cmd->add_option("--config", run.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", run.out, "Output directory");
    cmd->add_option("--seed", run.seed, "Master seed, overrides run.seed");
    cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--inject-fault", fault)->check(CLI::IsMember({"reserve-floor"}))->group("");
}

}  // namespace

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"Dynamic auctions with learning: revenue, equilibrium and value-function experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "0.1.0");

    RunOptions run;
    std::string fault;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo revenue for every configured experiment");
    add_run_flags(simulate, run, fault);
    auto* equilibrium = app.add_subcommand("equilibrium", "Solve the discounted first-price equilibrium");
    add_run_flags(equilibrium, run, fault);

    RunOptions verify_run;
    std::string verify_fault;
    auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
    verify->add_option("--out", verify_run.out, "Output directory");
    verify->add_option("--seed", verify_run.seed, "Master seed");
    verify->add_option("--threads", verify_run.threads, "Worker threads")->check(CLI::PositiveNumber);
    verify->add_option("--inject-fault", verify_fault)->check(CLI::IsMember({"reserve-floor"}))->group("");

    ValueFunctionArgs vf;
    const std::map<std::string, Format> formats{{"second-price", Format::SecondPrice},
                                                {"spa", Format::SecondPrice},
                                                {"first-price", Format::FirstPrice},
                                                {"fpa", Format::FirstPrice}};
    auto* value = app.add_subcommand("value-function", "Closed-form value function against the dynamic program");
    value->add_option("--format", vf.format, "second-price or first-price")
        ->required()
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("second-price|first-price REQUIRED");
    value->add_option("--b1", vf.b1, "Bid of bidder 1")->required();
    value->add_option("--b2", vf.b2, "Bid of bidder 2")->required();
    value->add_option("--b3", vf.b3, "Bid of bidder 3");
    value->add_option("--reserve", vf.reserve, "Reserve price");
    value->add_option("--r", vf.r, "Discount rate");
    value->add_option("--lambda", vf.lambda, "Bad-news intensity");
    value->add_option("--p", vf.p, "Prior probability of a good ad");
    value->add_option("--grid-step", vf.grid_step, "Belief grid step");
    value->add_option("--out", vf.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_code::ok : exit_code::config_error;
    }

    try {
        if (*simulate || *equilibrium) {
            run.inject_reserve_fault = fault == "reserve-floor";
            return *simulate ? cmd_simulate(run) : cmd_equilibrium(run);
        }
        if (*verify) {
            verify_run.inject_reserve_fault = verify_fault == "reserve-floor";
            return cmd_verify(verify_run);
        }
        return cmd_value_function(vf);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}
