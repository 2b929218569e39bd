#pragma once

#include <functional>
#include <span>

namespace dynascore {

/// Adaptive Gauss-Kronrod integral of `f` over [a, b]. The interval is split at
/// every point of `splits` that falls strictly inside it, so integrands with
/// known kinks converge to `abs_tol` without chasing the kink.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> splits = {}, double abs_tol = 1e-10);

}  // namespace dynascore
