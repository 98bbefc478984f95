#include "invgen/sampling.hpp"

#include <algorithm>

namespace invgen {

std::uint64_t UniformSource::next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double UniformSource::next() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::vector<Point> random_samples(const Chart& chart, std::size_t count, std::uint64_t seed) {
    UniformSource rng(seed);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        Point p(chart.dim());
        for (std::size_t i = 0; i < chart.dim(); ++i) p[i] = rng.uniform(chart.interval(i).lo, chart.interval(i).hi);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Point> default_samples(const Chart& chart, std::size_t random_count, std::uint64_t seed) {
    const std::size_t n = chart.dim();
    const std::size_t g = std::min<std::size_t>(n, 4);
    std::size_t total = 1;
    for (std::size_t i = 0; i < g; ++i) total *= 3;

    std::vector<Point> out;
    out.reserve(total + random_count);
    for (std::size_t code = 0; code < total; ++code) {
        Point p(n);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& iv = chart.interval(i);
            const double mid = 0.5 * (iv.lo + iv.hi);
            if (i < g) {
                const std::size_t digit = c % 3;
                c /= 3;
                p[i] = digit == 0 ? iv.lo : (digit == 1 ? mid : iv.hi);
            } else {
                p[i] = mid;
            }
        }
        out.push_back(std::move(p));
    }
    auto extra = random_samples(chart, random_count, seed);
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

double fd_step(const Chart& chart, std::size_t axis, double rel_step) {
    const double w = chart.interval(axis).width();
    return rel_step * (w > 0.0 ? w : 1.0);
}

Eigen::VectorXd box_derivative(const PointFunction& f, const Chart& chart, const Point& at, std::size_t axis,
                               double step) {
    const auto& iv = chart.interval(axis);
    const double x = at[axis];
    auto value_at = [&](double offset) {
        Point p = at;
        p[axis] = std::clamp(x + offset, iv.lo, iv.hi);
        return f(p);
    };
    if (iv.width() == 0.0) return Eigen::VectorXd::Zero(f(at).size());

    double h = step;
    const double room = std::max(x - iv.lo, iv.hi - x);
    if (4.0 * h > room) h = room / 4.0;

    if (x - 2.0 * h >= iv.lo && x + 2.0 * h <= iv.hi) {
        return (value_at(-2.0 * h) - 8.0 * value_at(-h) + 8.0 * value_at(h) - value_at(2.0 * h)) / (12.0 * h);
    }
    const double dir = (iv.hi - x >= x - iv.lo) ? 1.0 : -1.0;
    const double s = dir * h;
    return (-25.0 * value_at(0.0) + 48.0 * value_at(s) - 36.0 * value_at(2.0 * s) + 16.0 * value_at(3.0 * s) -
            3.0 * value_at(4.0 * s)) /
           (12.0 * s);
}

Eigen::MatrixXd box_jacobian(const PointFunction& f, const Chart& chart, const Point& at, double rel_step) {
    const std::size_t n = chart.dim();
    Eigen::MatrixXd jac;
    for (std::size_t j = 0; j < n; ++j) {
        Eigen::VectorXd col = box_derivative(f, chart, at, j, fd_step(chart, j, rel_step));
        if (j == 0) jac.resize(col.size(), static_cast<Eigen::Index>(n));
        jac.col(static_cast<Eigen::Index>(j)) = col;
    }
    return jac;
}

}  // namespace invgen
