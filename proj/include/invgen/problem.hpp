#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "invgen/dirac.hpp"

namespace invgen {

struct ProblemNumerics {
    std::optional<double> tol;
    std::optional<double> ode_step;
    std::optional<double> quad_step;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
};

/// A parsed problem file. Names in `distribution`, `extra`, `dirac` and
/// `intersection` refer to entries of `sections`.
struct Problem {
    int format_version = 1;
    ChartPtr chart;
    std::map<std::string, std::vector<PontryaginSection>> sections;
    std::optional<std::string> distribution;
    std::optional<std::string> extra;
    std::optional<std::string> dirac;
    std::optional<std::string> intersection;
    std::optional<PoissonBivector> poisson;
    std::optional<InfinitesimalAction> action;
    std::optional<QuotientMap> quotient;
    ProblemNumerics numerics;
    /// FNV-1a 64 of the file bytes, 16 hex digits.
    std::string input_hash;

    const std::vector<PontryaginSection>& section_list(const std::string& name) const;
};

inline constexpr int kFormatVersion = 1;

/// Parses problem text. Throws InvalidInput whose message names the JSON path
/// (and the character offset for malformed expressions or JSON).
Problem load_problem(const std::string& text);
Problem load_problem_file(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace invgen
