#include "invgen/problem.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "invgen/errors.hpp"

namespace invgen {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw InvalidInput(path + ": " + msg); }

const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path, "missing field '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Expr expression(const json& j, const Chart& chart, const std::string& path) {
    if (j.is_number()) return Expr(j.get<double>());
    try {
        return parse(text(j, path), chart);
    } catch (const ParseError& e) {
        fail(path, e.what());
    }
}

std::vector<Expr> expressions(const json& j, const Chart& chart, std::size_t count, const std::string& path) {
    if (!j.is_array() || j.size() != count)
        fail(path, "expected an array of " + std::to_string(count) + " expressions");
    std::vector<Expr> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(expression(j[i], chart, path + "[" + std::to_string(i) + "]"));
    return out;
}

ChartPtr chart_from(const json& j, std::size_t leaf_count, const std::string& path) {
    const json& coords = member(j, "coords", path);
    if (!coords.is_array()) fail(path + ".coords", "expected an array of names");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < coords.size(); ++i) names.push_back(text(coords[i], path + ".coords[" + std::to_string(i) + "]"));
    const json& box = member(j, "box", path);
    if (!box.is_array() || box.size() != names.size()) fail(path + ".box", "expected one [lo, hi] pair per coordinate");
    std::vector<Interval> intervals;
    for (std::size_t i = 0; i < box.size(); ++i) {
        const std::string p = path + ".box[" + std::to_string(i) + "]";
        if (!box[i].is_array() || box[i].size() != 2) fail(p, "expected [lo, hi]");
        intervals.push_back({number(box[i][0], p + "[0]"), number(box[i][1], p + "[1]")});
    }
    try {
        return make_chart(std::move(names), leaf_count, std::move(intervals));
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

std::vector<PontryaginSection> section_list(const json& j, const ChartPtr& chart, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of sections");
    std::vector<PontryaginSection> out;
    const std::size_t n = chart->dim();
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const json& s = j[i];
        if (!s.is_object()) fail(p, "expected an object with 'vector' and/or 'form'");
        for (const auto& [key, value] : s.items())
            if (key != "vector" && key != "form") fail(p, "unknown field '" + key + "'");
        VectorField v = s.contains("vector") ? VectorField(chart, expressions(s["vector"], *chart, n, p + ".vector"))
                                             : VectorField(chart);
        OneForm a = s.contains("form") ? OneForm(chart, expressions(s["form"], *chart, n, p + ".form")) : OneForm(chart);
        out.emplace_back(std::move(v), std::move(a));
    }
    return out;
}

std::optional<std::string> reference(const json& root, const char* key, const Problem& p) {
    if (!root.contains(key)) return std::nullopt;
    std::string name = text(root[key], key);
    if (!p.sections.count(name)) fail(key, "no section list named '" + name + "'");
    return name;
}

}  // namespace

const std::vector<PontryaginSection>& Problem::section_list(const std::string& name) const {
    auto it = sections.find(name);
    if (it == sections.end()) throw InvalidInput("no section list named '" + name + "'");
    return it->second;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Problem load_problem(const std::string& content) {
    json root;
    try {
        root = json::parse(content);
    } catch (const json::parse_error& e) {
        throw InvalidInput("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!root.is_object()) fail("(root)", "expected an object");

    static const char* known[] = {"format_version", "chart",   "sections",     "distribution", "extra",
                                  "dirac",          "poisson", "intersection", "action",       "quotient",
                                  "numerics",       "description"};
    for (const auto& [key, value] : root.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) fail(key, "unknown field");

    Problem p;
    p.input_hash = fnv1a_hex(content);
    const json& version = member(root, "format_version", "(root)");
    if (!version.is_number_integer() || version.get<int>() != kFormatVersion)
        fail("format_version", "unsupported version (expected " + std::to_string(kFormatVersion) + ")");
    p.format_version = version.get<int>();

    const json& chart = member(root, "chart", "(root)");
    const json& leaves = member(chart, "leaf_count", "chart");
    if (!leaves.is_number_unsigned()) fail("chart.leaf_count", "expected a nonnegative integer");
    p.chart = chart_from(chart, leaves.get<std::size_t>(), "chart");
    const std::size_t n = p.chart->dim();

    if (root.contains("sections")) {
        if (!root["sections"].is_object()) fail("sections", "expected an object of named section lists");
        for (const auto& [name, list] : root["sections"].items())
            p.sections.emplace(name, section_list(list, p.chart, "sections." + name));
    }
    p.distribution = reference(root, "distribution", p);
    p.extra = reference(root, "extra", p);
    p.dirac = reference(root, "dirac", p);
    p.intersection = reference(root, "intersection", p);
    if (p.extra && p.sections.at(*p.extra).size() != 1) fail("extra", "the extra section list must hold one section");

    if (root.contains("poisson")) {
        const json& pj = root["poisson"];
        if (!pj.is_array() || pj.size() != n) fail("poisson", "expected an n x n matrix of expressions");
        std::vector<std::vector<Expr>> rows;
        for (std::size_t i = 0; i < n; ++i) rows.push_back(expressions(pj[i], *p.chart, n, "poisson[" + std::to_string(i) + "]"));
        p.poisson.emplace(p.chart, std::move(rows));
    }

    if (root.contains("action")) {
        const json& aj = root["action"];
        const json& gens = member(aj, "generators", "action");
        if (!gens.is_array()) fail("action.generators", "expected an array of vector fields");
        std::vector<VectorField> fields;
        for (std::size_t a = 0; a < gens.size(); ++a)
            fields.emplace_back(p.chart, expressions(gens[a], *p.chart, n, "action.generators[" + std::to_string(a) + "]"));
        std::vector<std::vector<std::vector<double>>> constants;
        if (aj.contains("structure_constants")) {
            try {
                constants = aj["structure_constants"].get<std::vector<std::vector<std::vector<double>>>>();
            } catch (const json::exception&) {
                fail("action.structure_constants", "expected a d x d x d array of numbers");
            }
        }
        try {
            p.action.emplace(p.chart, std::move(fields), std::move(constants));
        } catch (const InvalidInput& e) {
            fail("action", e.what());
        }
    }

    if (root.contains("quotient")) {
        const json& qj = root["quotient"];
        ChartPtr target = chart_from(member(qj, "target", "quotient"), 0, "quotient.target");
        auto comps = expressions(member(qj, "components", "quotient"), *p.chart, target->dim(), "quotient.components");
        try {
            p.quotient.emplace(p.chart, target, std::move(comps));
        } catch (const InvalidInput& e) {
            fail("quotient", e.what());
        }
    }

    if (root.contains("numerics")) {
        const json& nj = root["numerics"];
        if (!nj.is_object()) fail("numerics", "expected an object");
        for (const auto& [key, value] : nj.items()) {
            const std::string path = "numerics." + key;
            if (key == "tol") p.numerics.tol = number(value, path);
            else if (key == "ode_step") p.numerics.ode_step = number(value, path);
            else if (key == "quad_step") p.numerics.quad_step = number(value, path);
            else if (key == "samples") {
                if (!value.is_number_unsigned()) fail(path, "expected a nonnegative integer");
                p.numerics.samples = value.get<std::size_t>();
            } else if (key == "seed") {
                if (!value.is_number_unsigned()) fail(path, "expected a nonnegative integer");
                p.numerics.seed = value.get<std::uint64_t>();
            } else fail(path, "unknown field");
        }
    }
    return p;
}

Problem load_problem_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open problem file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_problem(buf.str());
}

}  // namespace invgen
