#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bhlab {

// Uniform grid t_k = k h, k = 0..n_points-1. Solvers on it are O(n^2), so
// the point count is capped; refine by shrinking the horizon, not past the cap.
struct TimeGrid {
    static constexpr std::size_t kMaxPoints = 50'000;

    TimeGrid(double step, std::size_t points) : h(step), n_points(points) {
        if (!(h > 0.0)) throw std::invalid_argument("grid step must be positive");
        if (n_points < 2) throw std::invalid_argument("grid needs at least two points");
        if (n_points > kMaxPoints) throw std::invalid_argument("grid exceeds the point cap");
    }

    double point(std::size_t k) const { return h * double(k); }
    double horizon() const { return h * double(n_points - 1); }

    double h;
    std::size_t n_points;
};

template <class T>
struct GridFunction {
    explicit GridFunction(TimeGrid g) : grid(g) {}

    TimeGrid grid;
    std::vector<T> values;
    std::vector<T> increments; // Stieltjes masses per step when meaningful
};

} // namespace bhlab
