#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "invgen/report.hpp"
#include "invgen/symexpr.hpp"

namespace invgen {

/// Tensor grid over the first min(n, 4) coordinates ({lo, mid, hi}; the rest at
/// their midpoints) followed by `random_count` uniform points drawn from a
/// seeded generator. Same chart + count + seed gives the same list everywhere.
std::vector<Point> default_samples(const Chart& chart, std::size_t random_count = 32, std::uint64_t seed = 0);

/// Uniform points in the box only.
std::vector<Point> random_samples(const Chart& chart, std::size_t count, std::uint64_t seed);

/// Portable uniform doubles in [0, 1) (splitmix64), independent of the
/// standard library's distribution implementations.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64();
    double next();
    double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

private:
    std::uint64_t state_;
};

using PointFunction = std::function<Eigen::VectorXd(const Point&)>;

/// Fourth-order finite-difference derivative of f along coordinate `axis`.
/// Uses the centered five-point stencil when it fits in the box and one-sided
/// five-point stencils near the faces, so f is never queried outside the box.
Eigen::VectorXd box_derivative(const PointFunction& f, const Chart& chart, const Point& at, std::size_t axis,
                               double step);

/// Columns j = d f / d x^j for every coordinate.
Eigen::MatrixXd box_jacobian(const PointFunction& f, const Chart& chart, const Point& at, double rel_step);

/// Default finite-difference step for a coordinate: rel_step * interval width.
double fd_step(const Chart& chart, std::size_t axis, double rel_step);

}  // namespace invgen
