#include "invgen/report.hpp"

#include <cmath>

namespace invgen {

bool Report::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

void Report::add(CheckRecord record) { checks.push_back(std::move(record)); }

void Report::append(const Report& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }

const CheckRecord* Report::find(const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return &c;
    return nullptr;
}

ResidualScan::ResidualScan(std::string id, std::string anchor, double tolerance) {
    record_.id = std::move(id);
    record_.anchor = std::move(anchor);
    record_.tolerance = tolerance;
}

void ResidualScan::observe(double residual, const Point& point, const std::string& detail) {
    // NaN counts as a failure
    const bool bad = !(residual <= record_.tolerance);
    if (!(residual <= record_.worst_residual)) record_.worst_residual = residual;
    if (bad && record_.passed) {
        record_.passed = false;
        record_.failing_point = point;
        if (!detail.empty()) record_.detail = detail;
    }
}

void ResidualScan::fail(const Point& point, const std::string& detail) {
    if (record_.passed) {
        record_.passed = false;
        record_.failing_point = point;
        record_.detail = detail;
    }
}

CheckRecord ResidualScan::finish() && { return std::move(record_); }

}  // namespace invgen
