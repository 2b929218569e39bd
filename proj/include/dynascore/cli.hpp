#pragma once

// Subcommands of the experiment runner. Each returns a process exit code.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynascore/config.hpp"
#include "dynascore/equilibrium.hpp"
#include "dynascore/revenue.hpp"

namespace dynascore {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verify_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int unsupported = 3;
inline constexpr int not_converged = 4;
}  // namespace exit_code

struct RunOptions {
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    /// Negative control: second-price payments lose their reserve floor.
    bool inject_reserve_fault = false;
};

struct ValueFunctionArgs {
    Format format = Format::SecondPrice;
    double b1 = 1.0;
    double b2 = 0.0;
    std::optional<double> b3;
    double reserve = 0.0;
    double r = 0.0;
    double lambda = 1.0;
    double p = 0.5;
    double grid_step = 1e-3;
    std::filesystem::path out = ".";
};

int cmd_simulate(const RunOptions& options);
int cmd_equilibrium(const RunOptions& options);
int cmd_value_function(const ValueFunctionArgs& args);
int cmd_verify(const RunOptions& options);

/// Maps a library error to the documented exit code.
int exit_code_for(const std::exception& error);

/// Shortest text with 17 significant digits, `.` decimal point.
std::string format_real(double x);

MarketParams market_from_config(const Config& cfg);
ValueDistribution dist_from_config(const Config& cfg);
SolverOptions solver_from_config(const Config& cfg, const ValueDistribution& dist);

struct NamedExperiment {
    std::string name;
    ExperimentConfig config;
};

/// Experiments in name order. Solves the equilibrium for `bidding =
/// equilibrium` entries; throws ConfigError on schema problems.
std::vector<NamedExperiment> experiments_from_config(const Config& cfg, std::uint64_t seed,
                                                     bool inject_reserve_fault);

/// Every key the runner understands.
const std::vector<std::string>& config_schema();

void set_threads(std::optional<int> threads);

}  // namespace dynascore
