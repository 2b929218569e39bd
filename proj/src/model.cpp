#include "dynascore/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dynascore/errors.hpp"

namespace dynascore {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::OutOfSupport: return "OutOfSupport";
        case ErrorCode::ZeroDensity: return "ZeroDensity";
        case ErrorCode::NegativeTime: return "NegativeTime";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ZeroBid: return "ZeroBid";
        case ErrorCode::UnsupportedCombination: return "UnsupportedCombination";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

ValueDistribution::ValueDistribution(double lo, double hi, std::string label,
                                     std::variant<Power, Table> law)
    : lo_(lo), hi_(hi), label_(std::move(label)), law_(std::move(law)) {
    if (const auto* t = std::get_if<Table>(&law_)) {
        knots_.assign(t->v.begin() + 1, t->v.end() - 1);
    }
}

ValueDistribution ValueDistribution::uniform(double hi) {
    if (!(hi > 0.0)) throw Error(ErrorCode::InvalidArgument, "uniform support must have hi > 0");
    return {0.0, hi, "uniform", Power{1.0}};
}

ValueDistribution ValueDistribution::power(double k, double hi) {
    if (!(k > 0.0) || !(hi > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "power law needs k > 0 and hi > 0");
    }
    std::ostringstream label;
    label << "power(k=" << k << ")";
    return {0.0, hi, label.str(), Power{k}};
}

ValueDistribution ValueDistribution::tabulated(std::vector<double> values, std::vector<double> cdf,
                                               std::string label) {
    if (values.size() != cdf.size() || values.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "CDF table needs at least two rows of equal length");
    }
    if (cdf.front() != 0.0 || cdf.back() != 1.0) {
        throw Error(ErrorCode::InvalidArgument, "CDF table must start at 0 and end at 1");
    }
    if (values.front() < 0.0) throw Error(ErrorCode::InvalidArgument, "values must be nonnegative");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > values[i - 1]) || !(cdf[i] > cdf[i - 1])) {
            throw Error(ErrorCode::InvalidArgument,
                        "CDF table must be strictly increasing in both columns (row " +
                            std::to_string(i + 1) + ")");
        }
    }
    Table t{std::move(values), std::move(cdf), {}};
    t.f.resize(t.v.size() - 1);
    for (std::size_t i = 0; i + 1 < t.v.size(); ++i) {
        t.f[i] = (t.F[i + 1] - t.F[i]) / (t.v[i + 1] - t.v[i]);
    }
    const double lo = t.v.front();
    const double hi = t.v.back();
    return {lo, hi, std::move(label), std::move(t)};
}

ValueDistribution ValueDistribution::load_tabulated(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open CDF table " + path.string());
    std::vector<double> v, F;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double a = 0.0, b = 0.0;
        if (!(row >> a)) continue;
        if (!(row >> b)) {
            throw Error(ErrorCode::InvalidArgument,
                        path.string() + ":" + std::to_string(lineno) + ": expected two columns");
        }
        v.push_back(a);
        F.push_back(b);
    }
    return tabulated(std::move(v), std::move(F), path.filename().string());
}

std::size_t ValueDistribution::segment(double v) const {
    const auto& t = std::get<Table>(law_);
    auto it = std::upper_bound(t.v.begin(), t.v.end(), v);
    auto idx = static_cast<std::size_t>(std::distance(t.v.begin(), it));
    if (idx == 0) return 0;
    return std::min(idx - 1, t.f.size() - 1);
}

double ValueDistribution::density(double v) const {
    if (v < lo_ || v > hi_) return 0.0;
    if (const auto* pw = std::get_if<Power>(&law_)) {
        if (pw->k == 1.0) return 1.0 / hi_;
        return pw->k * std::pow(v, pw->k - 1.0) / std::pow(hi_, pw->k);
    }
    return std::get<Table>(law_).f[segment(v)];
}

double ValueDistribution::cdf(double v) const {
    if (v <= lo_) return 0.0;
    if (v >= hi_) return 1.0;
    if (const auto* pw = std::get_if<Power>(&law_)) return std::pow(v / hi_, pw->k);
    const auto& t = std::get<Table>(law_);
    const std::size_t i = segment(v);
    return t.F[i] + t.f[i] * (v - t.v[i]);
}

double ValueDistribution::quantile(double q) const {
    if (q <= 0.0) return lo_;
    if (q >= 1.0) return hi_;
    if (const auto* pw = std::get_if<Power>(&law_)) {
        return pw->k == 1.0 ? q * hi_ : hi_ * std::pow(q, 1.0 / pw->k);
    }
    const auto& t = std::get<Table>(law_);
    auto it = std::upper_bound(t.F.begin(), t.F.end(), q);
    const auto i = std::min(static_cast<std::size_t>(std::distance(t.F.begin(), it)) - 1,
                            t.f.size() - 1);
    return t.v[i] + (q - t.F[i]) / t.f[i];
}

double ValueDistribution::partial_mean(double a, double b) const {
    a = std::clamp(a, lo_, hi_);
    b = std::clamp(b, lo_, hi_);
    if (b <= a) return 0.0;
    if (const auto* pw = std::get_if<Power>(&law_)) {
        const double k = pw->k;
        return k / (k + 1.0) * (std::pow(b, k + 1.0) - std::pow(a, k + 1.0)) / std::pow(hi_, k);
    }
    const auto& t = std::get<Table>(law_);
    double total = 0.0;
    for (std::size_t i = 0; i < t.f.size(); ++i) {
        const double x0 = std::max(a, t.v[i]);
        const double x1 = std::min(b, t.v[i + 1]);
        if (x1 > x0) total += t.f[i] * 0.5 * (x1 * x1 - x0 * x0);
    }
    return total;
}

std::span<const double> ValueDistribution::breakpoints() const noexcept { return knots_; }

double virtual_value(const ValueDistribution& dist, double v) {
    if (v < dist.lo() || v > dist.hi()) {
        throw Error(ErrorCode::OutOfSupport, "v = " + std::to_string(v) + " outside support");
    }
    const double f = dist.density(v);
    if (!(f > 0.0)) throw Error(ErrorCode::ZeroDensity, "f(" + std::to_string(v) + ") = 0");
    return v - (1.0 - dist.cdf(v)) / f;
}

double weighted_virtual_value(const ValueDistribution& dist, double v) {
    return v * dist.density(v) - (1.0 - dist.cdf(v));
}

RegularityReport check_regularity(const ValueDistribution& dist, std::size_t grid_size) {
    if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be >= 2");
    RegularityReport report;
    std::optional<double> prev;
    const double step = (dist.hi() - dist.lo()) / static_cast<double>(grid_size - 1);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double v = i + 1 == grid_size ? dist.hi() : dist.lo() + step * static_cast<double>(i);
        const double f = dist.density(v);
        if (!(f > 0.0) || !std::isfinite(f)) continue;
        const double phi = v - (1.0 - dist.cdf(v)) / f;
        if (prev && phi - *prev < -1e-9) {
            report.regular = false;
            report.violation_at = v;
            report.drop = *prev - phi;
            return report;
        }
        prev = phi;
    }
    return report;
}

void MarketParams::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must lie in [0, 1]");
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorCode::InvalidArgument, "r must be >= 0");
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be >= 2");
}

bool WorldRealization::valid() const noexcept {
    if (theta.size() != clocks.size()) return false;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (theta[i] == 1) {
            if (!std::isinf(clocks[i])) return false;
        } else if (theta[i] == 0) {
            if (!std::isfinite(clocks[i]) || !(clocks[i] > 0.0)) return false;
        } else {
            return false;
        }
    }
    return true;
}

bool BidProfile::valid() const noexcept {
    return std::ranges::all_of(bids, [](double b) { return std::isfinite(b) && b >= 0.0; });
}

double logit(double mu) { return std::log(mu) - std::log1p(-mu); }

double logistic(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double belief_no_news(const MarketParams& params, double t) {
    if (t < 0.0) throw Error(ErrorCode::NegativeTime, "t = " + std::to_string(t));
    const double p = params.p;
    return p / (p + (1.0 - p) * std::exp(-params.lambda * t));
}

BeliefState belief_at(const MarketParams& params, const WorldRealization& world, double t) {
    const double drift = belief_no_news(params, t);
    BeliefState state{std::vector<double>(world.size()), t};
    for (std::size_t i = 0; i < world.size(); ++i) {
        state.mu[i] = t >= world.clocks[i] ? 0.0 : drift;
    }
    return state;
}

WorldRealization sample_world(const MarketParams& params, rng::Stream& stream) {
    const auto n = static_cast<std::size_t>(params.n);
    WorldRealization world{std::vector<int>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        // Two draws per bidder regardless of quality keeps streams aligned.
        const bool good = stream.bernoulli(params.p);
        const double clock = stream.exponential(params.lambda);
        world.theta[i] = good ? 1 : 0;
        world.clocks[i] = good ? kInfinity : clock;
    }
    return world;
}

std::vector<double> sample_values(const ValueDistribution& dist, std::size_t n, rng::Stream& stream) {
    std::vector<double> values(n);
    for (auto& v : values) v = dist.quantile(stream.uniform());
    return values;
}

}  // namespace dynascore
