// Serial reference against the OpenMP kernels on the same sample lists.

#include <benchmark/benchmark.h>

#include "invgen/distribution.hpp"
#include "invgen/invariant_gen.hpp"
#include "invgen/sampling.hpp"

using namespace invgen;

namespace {

Expr x(std::size_t i) { return Expr::variable(i); }

PontryaginSection section(const ChartPtr& c, std::vector<Expr> v, std::vector<Expr> a) {
    return {VectorField(c, std::move(v)), OneForm(c, std::move(a))};
}

// n = 3, leaves x1 x2, non-commuting coefficient matrices and a correction
FoliatedProblem k2_problem() {
    const auto c = make_chart({"x1", "x2", "x3"}, 2, {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}});
    return FoliatedProblem(
        GeneralizedDistribution(c, {section(c, {0.0, 0.0, Expr(1.0) + x(0) * x(0)}, {0.0, 0.0, x(0) * x(1)}),
                                    section(c, {0.0, 0.0, x(1)}, {0.0, 0.0, Expr(2.0) + sin(x(0))})}),
        section(c, {0.0, 0.0, sin(x(0) + x(1))}, {0.0, 0.0, x(0) * x(1)}));
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_bracket_hypothesis(benchmark::State& state) {
    const auto pb = k2_problem();
    const auto theta = leaf_theta(pb.chart());
    const auto samples = random_samples(*pb.chart(), 256, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            check_bracket_hypothesis(pb.distribution(), theta, pb.extra(), samples, kDefaultTol, mode(state)));
}

void BM_run(benchmark::State& state) {
    const auto pb = k2_problem();
    const auto samples = random_samples(*pb.chart(), 8, 1);
    // a fresh solver per iteration, so the memo cache never carries over
    for (auto _ : state) benchmark::DoNotOptimize(run(pb, samples, mode(state)));
}

}  // namespace

BENCHMARK(BM_bracket_hypothesis)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
