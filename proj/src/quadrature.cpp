#include "dynascore/quadrature.hpp"

#include <algorithm>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace dynascore {

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> splits, double abs_tol) {
    if (!(b > a)) return 0.0;
    std::vector<double> edges{a};
    for (double s : splits) {
        if (s > a && s < b) edges.push_back(s);
    }
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    // Boost's tolerance is relative to the piece's L1 norm; our integrands have
    // L1 norm below one on the support, so this bounds the absolute error too.
    const double piece_tol = abs_tol / static_cast<double>(edges.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        total += GK::integrate(f, edges[i], edges[i + 1], 20, piece_tol);
    }
    return total;
}

}  // namespace dynascore
