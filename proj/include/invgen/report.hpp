#pragma once

#include <optional>
#include <string>
#include <vector>

namespace invgen {

using Point = std::vector<double>;

/// One verified property: the worst residual seen over the samples and the
/// first point where it exceeded the tolerance.
struct CheckRecord {
    std::string id;
    /// Short tag naming the construction step or hypothesis being certified.
    std::string anchor;
    double worst_residual = 0.0;
    double tolerance = 0.0;
    bool passed = true;
    std::optional<Point> failing_point;
    /// Extra points backing a failure (e.g. two points with different ranks).
    std::vector<Point> witnesses;
    std::string detail;
};

struct Report {
    std::vector<CheckRecord> checks;

    bool passed() const;
    void add(CheckRecord record);
    void append(const Report& other);
    const CheckRecord* find(const std::string& id) const;
};

/// Accumulates residuals in sample order into a CheckRecord.
class ResidualScan {
public:
    ResidualScan(std::string id, std::string anchor, double tolerance);

    void observe(double residual, const Point& point, const std::string& detail = {});
    void fail(const Point& point, const std::string& detail);
    CheckRecord finish() &&;

private:
    CheckRecord record_;
};

}  // namespace invgen
