#pragma once

#include "twm/types.hpp"

#include <cstddef>
#include <vector>

namespace twm {

/// Composite trapezoid rule on uniformly spaced samples.
template <class T>
T trapezoid(const std::vector<T>& f, double h) {
    if (f.size() < 2) return T{};
    T acc = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
    return acc * h;
}

/// Composite Simpson rule; falls back to Simpson 3/8 on the last three
/// intervals when the interval count is odd.
template <class T>
T simpson(const std::vector<T>& f, double h) {
    if (f.size() < 2) return T{};
    const std::size_t n = f.size() - 1;  // intervals
    if (n == 1) return 0.5 * h * (f[0] + f[1]);
    if (n == 2) return h / 3.0 * (f[0] + 4.0 * f[1] + f[2]);
    std::size_t even = (n % 2 == 0) ? n : n - 3;
    T acc{};
    for (std::size_t i = 0; i + 2 <= even; i += 2) acc += f[i] + 4.0 * f[i + 1] + f[i + 2];
    acc *= h / 3.0;
    if (even != n) {
        const std::size_t j = even;
        acc += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
    }
    return acc;
}

} // namespace twm
