#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace flutterlab {

/// Composite Simpson rule over uniformly spaced samples. The sample
/// count must be odd (an even number of panels).
inline double simpson(std::span<const double> y, double h) {
    const std::size_t n = y.size();
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("simpson: need an odd sample count >= 3");
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i + 1 < n; i += 2) odd += y[i];
    for (std::size_t i = 2; i + 1 < n; i += 2) even += y[i];
    return h / 3.0 * (y[0] + 4.0 * odd + 2.0 * even + y[n - 1]);
}

/// Composite Simpson rule for a callable on [a, b] with n samples
/// (n odd). Evaluation order is fixed, so results are deterministic.
template <typename F>
double simpson_fn(F&& f, double a, double b, int n) {
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("simpson_fn: need an odd sample count >= 3");
    const double h = (b - a) / (n - 1);
    double odd = 0.0, even = 0.0;
    for (int i = 1; i + 1 < n; i += 2) odd += f(a + i * h);
    for (int i = 2; i + 1 < n; i += 2) even += f(a + i * h);
    return h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

}  // namespace flutterlab
