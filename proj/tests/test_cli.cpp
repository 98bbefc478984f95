#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "invgen/cli.hpp"
#include "invgen/errors.hpp"
#include "invgen/problem.hpp"

using namespace invgen;
using nlohmann::json;

namespace {

std::string problem(const std::string& name) { return std::string(INVGEN_PROBLEMS_DIR) + "/" + name + ".json"; }

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "invgen_test_cli";
    std::filesystem::create_directories(dir);
    return dir;
}

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
    std::vector<json> records;
    std::string raw;
};

CliRun invoke(std::vector<std::string> args, const std::string& tag = "run") {
    const auto path = (scratch_dir() / (tag + ".jsonl")).string();
    std::filesystem::remove(path);
    args.push_back("--output");
    args.push_back(path);
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    r.raw = buf.str();
    std::istringstream lines(r.raw);
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) r.records.push_back(json::parse(line));
    return r;
}

int invoke_plain(const std::vector<std::string>& args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::vector<json> of_type(const CliRun& r, const std::string& type) {
    std::vector<json> v;
    for (const auto& j : r.records)
        if (j.at("type") == type) v.push_back(j);
    return v;
}

const json* check(const CliRun& r, const std::string& id) {
    for (const auto& j : r.records)
        if (j.at("type") == "check" && j.at("id") == id) return &j;
    return nullptr;
}

std::string load_error(const std::string& text) {
    try {
        load_problem(text);
    } catch (const InvalidInput& e) {
        return e.what();
    }
    return "";
}

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("exit codes over the problem corpus") {
    struct Case {
        const char* cmd;
        const char* file;
        int code;
    };
    const Case cases[] = {
        {"check", "e1", 0},
        {"check", "e2", 0},
        {"check", "k2_commuting", 0},
        {"check", "translation", 0},
        {"check", "rotation", 0},
        {"check", "ass1_violation", 1},
        {"check", "leaf_form_violation", 1},
        {"check", "malformed_expression", 2},
        {"check", "rank_jump", 1},
        {"invariant-generators", "e1", 0},
        {"invariant-generators", "k2_commuting", 0},
        {"invariant-generators", "ass1_violation", 1},
        {"invariant-generators", "leaf_form_violation", 1},
        {"invariant-generators", "non_unique", 3},
        {"invariant-generators", "malformed_expression", 2},
        {"dirac-reduce", "translation", 0},
        {"dirac-reduce", "rotation", 0},
        {"dirac-reduce", "rank_jump", 1},
    };
    for (const auto& c : cases) {
        INFO(c.cmd, " ", c.file);
        const auto r = invoke({c.cmd, problem(c.file), "--samples", "4"});
        CHECK(r.code == c.code);
        REQUIRE_FALSE(r.records.empty());
        // provenance needs a loaded problem
        if (c.code == kExitInputError) CHECK(r.records.front().at("type") == "error");
        else CHECK(r.records.front().at("type") == "provenance");
        CHECK(r.records.back().at("type") == "verdict");
        CHECK(r.records.back().at("exit_code") == c.code);
    }
}

TEST_CASE("input errors") {
    std::string err;
    CHECK(invoke_plain({"check", problem("does_not_exist")}, &err) == kExitInputError);
    CHECK(has(err, "does_not_exist"));
    CHECK(invoke_plain({"check", problem("e1"), "--bogus"}) == kExitInputError);
    CHECK(invoke_plain({}) == kExitInputError);
    CHECK(invoke_plain({"check", problem("e1"), "--tol", "abc"}) == kExitInputError);
    CHECK(invoke_plain({"check", problem("e1"), "--tol", "-1"}) == kExitInputError);
    CHECK(invoke_plain({"check", problem("e1"), "--dump-intermediates"}) == kExitInputError);
    CHECK(invoke_plain({"--help"}) == kExitPass);

    const auto r = invoke({"check", problem("malformed_expression")});
    const auto errors = of_type(r, "error");
    REQUIRE(errors.size() == 1);
    CHECK(has(errors[0].at("message").get<std::string>(), "position 6"));
    CHECK(r.records.back().at("passed") == false);
}

TEST_CASE("E1 frame dump") {
    const auto r = invoke({"invariant-generators", problem("e1"), "--samples", "5"});
    REQUIRE(r.code == 0);
    const auto prov = r.records.front();
    const auto frames = of_type(r, "frame");
    CHECK(frames.size() == prov.at("sample_count").get<std::size_t>());
    CHECK(prov.at("sample_count") == 27 + 5);
    for (const auto& f : frames) {
        const auto col = f.at("columns").at(0).get<std::vector<double>>();
        const std::vector<double> want{0, 1, 0, 0, 1, 0};
        REQUIRE(col.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(col[i] - want[i]) <= 1e-9);
    }
    for (const char* id : {"step1.decomposition", "frame.span", "frame.theta_bracket"}) {
        const json* c = check(r, id);
        REQUIRE(c != nullptr);
        CHECK(c->at("passed") == true);
    }
    CHECK(has(r.out, "PASS"));
}

TEST_CASE("E2 correction and intermediates") {
    const auto r = invoke({"invariant-generators", problem("e2"), "--samples", "3", "--dump-intermediates"});
    REQUIRE(r.code == 0);
    const auto inter = of_type(r, "intermediate");
    REQUIRE_FALSE(inter.empty());
    for (const auto& i : inter) {
        const auto p = i.at("point").get<std::vector<double>>();
        const auto pi = i.at("Pi").get<std::vector<double>>();
        REQUIRE(pi.size() == 2);
        CHECK(std::abs(pi[0] + p[0]) <= 1e-9);
        CHECK(std::abs(pi[1] + p[0]) <= 1e-9);
        CHECK(i.contains("H"));
        CHECK(i.contains("B"));
    }
    for (const auto& f : of_type(r, "frame")) {
        for (double v : f.at("combined").get<std::vector<double>>()) CHECK(std::abs(v) <= 1e-9);
    }
    const auto plain = invoke({"invariant-generators", problem("e2"), "--samples", "3"}, "plain");
    CHECK(of_type(plain, "intermediate").empty());
}

TEST_CASE("stage errors carry labels and points") {
    const auto r = invoke({"invariant-generators", problem("ass1_violation")});
    const auto errors = of_type(r, "error");
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].at("stage") == "Step 1");
    CHECK(errors[0].at("point").is_array());
    CHECK(has(r.err, "Step 1"));

    const auto nu = invoke({"invariant-generators", problem("non_unique")});
    REQUIRE(of_type(nu, "error").size() == 1);
    CHECK(of_type(nu, "error")[0].at("exit_code") == 3);

    const auto leaf = invoke({"check", problem("leaf_form_violation")});
    const json* rec = check(leaf, "input.leaf_annihilation");
    REQUIRE(rec != nullptr);
    CHECK(rec->at("passed") == false);
    CHECK(has(rec->at("detail").get<std::string>(), "D[0]"));
}

TEST_CASE("rank jump reports two witnesses") {
    const auto r = invoke({"dirac-reduce", problem("rank_jump")});
    const json* rec = check(r, "intersection.constant_rank");
    REQUIRE(rec != nullptr);
    CHECK(rec->at("passed") == false);
    CHECK(rec->at("witnesses").size() == 2);
    CHECK(check(r, "descending.form_invariance") == nullptr);
}

TEST_CASE("reduction report mirrors the pipeline") {
    const auto r = invoke({"dirac-reduce", problem("translation")});
    REQUIRE(r.code == 0);
    std::vector<std::string> ids;
    for (const auto& c : of_type(r, "check")) ids.push_back(c.at("id"));
    const std::vector<std::string> order{"poisson.antisymmetry", "dirac.rank", "intersection.constant_rank",
                                         "family.spans_intersection", "reduced.rank", "reduced.closed"};
    std::size_t at = 0;
    for (const auto& id : ids)
        if (at < order.size() && id == order[at]) ++at;
    CHECK(at == order.size());
    CHECK(check(r, "reduced.rank")->at("detail") == "rank 1");
}

TEST_CASE("determinism and flag overrides") {
    const auto a = invoke({"dirac-reduce", problem("rotation"), "--seed", "7"}, "a");
    const auto b = invoke({"dirac-reduce", problem("rotation"), "--seed", "7"}, "b");
    REQUIRE(a.code == 0);
    CHECK(a.raw == b.raw);
    CHECK(a.out == b.out);
    const auto c = invoke({"dirac-reduce", problem("rotation"), "--seed", "8"}, "c");
    CHECK(c.raw != a.raw);

    const auto f = invoke({"check", problem("e2"), "--tol", "1e-6", "--samples", "2", "--ode-step", "0.01",
                           "--quad-step", "0.02"});
    const auto& prov = f.records.front();
    CHECK(prov.at("tol") == 1e-6);
    CHECK(prov.at("ode_step") == 0.01);
    CHECK(prov.at("quad_step") == 0.02);
    CHECK(prov.at("random_samples") == 2);
    CHECK(prov.at("seed") == 0);
    CHECK(has(prov.at("input_hash").get<std::string>(), "fnv1a64:"));
    for (const auto& ch : of_type(f, "check")) CHECK(ch.at("tolerance").get<double>() <= 1e-6);
}

TEST_CASE("problem loader errors name the JSON path") {
    const std::string chart = R"("chart": {"coords": ["x1", "x2"], "leaf_count": 1, "box": [[-1, 1], [-1, 1]]})";
    CHECK(has(load_error("{"), "malformed JSON"));
    CHECK(has(load_error(R"({"format_version": 2, )" + chart + "}"), "format_version"));
    CHECK(has(load_error(R"({"format_version": 1, )" + chart + R"(, "colour": 1})"), "colour"));
    CHECK(has(load_error(R"({"format_version": 1, )" + chart + R"(, "distribution": "D"})"), "distribution"));
    CHECK(has(load_error(R"({"format_version": 1, )" + chart +
                         R"(, "sections": {"D": [{"vector": ["1", "exp(x1"]}]}})"),
              "sections.D[0].vector[1]"));
    CHECK(has(load_error(R"({"format_version": 1, )" + chart + R"(, "sections": {"D": [{"vector": ["1"]}]}})"),
              "sections.D[0].vector"));
    CHECK(has(load_error(R"({"format_version": 1, "chart": {"coords": ["x1"], "leaf_count": 1, "box": [[1, 2]]}})"),
              "chart"));

    const auto ok = load_problem(R"({"format_version": 1, )" + chart +
                                 R"(, "sections": {"D": [{"vector": [0, "x1"], "form": ["0", 2.5]}]},
                                      "distribution": "D", "numerics": {"tol": 1e-8, "samples": 4, "seed": 3}})");
    CHECK(ok.chart->dim() == 2);
    CHECK(ok.section_list("D").size() == 1);
    CHECK(ok.numerics.tol == 1e-8);
    CHECK(ok.numerics.samples == 4u);
    CHECK(ok.numerics.seed == 3u);
    CHECK(ok.input_hash.size() == 16);
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
