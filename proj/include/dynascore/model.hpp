#pragma once

// Economic primitives: value laws, virtual values, the Poisson bad-news belief
// process and sampling of world realizations.

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dynascore/rng.hpp"

namespace dynascore {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Kernels that loop over independent items take this switch; both paths give
/// bit-identical results.
enum class Execution { Serial, Parallel };

/// A value law F on [lo, hi] with density, CDF, quantile and partial first
/// moment. Built-in families are analytic; the tabulated family interpolates a
/// CDF table linearly, so its density is piecewise constant.
class ValueDistribution {
public:
    static ValueDistribution uniform(double hi = 1.0);
    /// F(v) = (v / hi)^k on [0, hi], k > 0.
    static ValueDistribution power(double k, double hi = 1.0);
    /// Strictly increasing `values` and `cdf`, cdf.front() == 0, cdf.back() == 1.
    static ValueDistribution tabulated(std::vector<double> values, std::vector<double> cdf,
                                       std::string label = "tabulated");
    /// Two whitespace-separated columns `v cdf` per line; `#` starts a comment.
    static ValueDistribution load_tabulated(const std::filesystem::path& path);

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    const std::string& label() const noexcept { return label_; }

    double density(double v) const;
    double cdf(double v) const;
    double quantile(double q) const;
    /// Integral of y f(y) over [a, b] clipped to the support.
    double partial_mean(double a, double b) const;
    /// Interior points where the density is not smooth (table knots).
    std::span<const double> breakpoints() const noexcept;

private:
    struct Power {
        double k;
    };
    struct Table {
        std::vector<double> v;
        std::vector<double> F;
        std::vector<double> f;  // density on [v[i], v[i+1])
    };

    ValueDistribution(double lo, double hi, std::string label, std::variant<Power, Table> law);

    std::size_t segment(double v) const;

    double lo_;
    double hi_;
    std::string label_;
    std::variant<Power, Table> law_;
    std::vector<double> knots_;
};

/// v - (1 - F(v)) / f(v). Throws OutOfSupport / ZeroDensity.
double virtual_value(const ValueDistribution& dist, double v);

/// f(v) * phi(v) = v f(v) - (1 - F(v)); finite wherever f is, same sign as phi.
double weighted_virtual_value(const ValueDistribution& dist, double v);

struct RegularityReport {
    bool regular = true;
    std::optional<double> violation_at;  // first grid point where phi dropped
    double drop = 0.0;
};

/// Scans phi on `grid_size` equally spaced points (endpoints included, points
/// with zero density skipped) and flags the first decrease beyond 1e-9.
RegularityReport check_regularity(const ValueDistribution& dist, std::size_t grid_size);

struct MarketParams {
    double p = 0.5;       // prior probability of a good ad
    double lambda = 1.0;  // bad-news intensity
    double r = 0.0;       // discount / departure rate
    int n = 2;            // bidders

    double rho() const noexcept { return r / lambda; }
    /// Throws InvalidArgument unless p in [0,1], lambda > 0, r >= 0, n >= 2.
    void validate() const;
};

/// Sampled qualities and first bad-news times. clocks[i] is +inf exactly when
/// theta[i] == 1.
struct WorldRealization {
    std::vector<int> theta;
    std::vector<double> clocks;

    std::size_t size() const noexcept { return theta.size(); }
    bool valid() const noexcept;
};

struct BidProfile {
    std::vector<double> bids;

    std::size_t size() const noexcept { return bids.size(); }
    bool valid() const noexcept;
};

struct BeliefState {
    std::vector<double> mu;
    double time = 0.0;
};

double logit(double mu);
double logistic(double x);

/// Common belief after `t` units of time without news.
double belief_no_news(const MarketParams& params, double t);

BeliefState belief_at(const MarketParams& params, const WorldRealization& world, double t);

WorldRealization sample_world(const MarketParams& params, rng::Stream& stream);

std::vector<double> sample_values(const ValueDistribution& dist, std::size_t n, rng::Stream& stream);

}  // namespace dynascore
