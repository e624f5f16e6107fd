// Serial reference vs OpenMP kernels on a completion mask, plus the
// per-iteration operations whose cost should grow linearly in m + n.

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "desing/calculus.hpp"
#include "desing/completion.hpp"
#include "desing/retraction.hpp"

namespace {

using namespace desing;

struct Fixture {
  CompletionProblem problem;
  RowMatrix left;
  RowMatrix right;
  Vector vals;
  ManifoldPoint point;
  TangentVector tangent;
};

const Fixture& fixture(Index mn) {
  static std::map<Index, std::unique_ptr<Fixture>> cache;
  auto& slot = cache[mn];
  if (!slot) {
    GeneratorParams p;
    p.m = mn;
    p.n = mn;
    p.r_star = 10;
    p.r = 10;
    p.oversampling = 5.0;
    p.sv = SvSpec::uniform(0.5, 1.0);
    p.seed = 1;
    CompletionProblem prob = generate_problem(p);
    const ManifoldPoint x = random_point(ManifoldDims(mn, mn, 10), 2, {0.1, 1.0});
    const TangentVector t = random_tangent(x, MetricParam(0.5), 3);
    RowMatrix left = x.U_sigma();
    RowMatrix right = x.V();
    Vector vals = prob.observed;
    slot = std::make_unique<Fixture>(
        Fixture{std::move(prob), std::move(left), std::move(right), std::move(vals), x, t});
  }
  return *slot;
}

template <bool Parallel>
void BM_MaskedEntries(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  for (auto _ : state) {
    Vector v = Parallel ? kernels::parallel::masked_entries(f.problem.mask, f.left, f.right)
                        : kernels::serial::masked_entries(f.problem.mask, f.left, f.right);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * f.problem.mask.nnz());
}

template <bool Parallel>
void BM_SparseTimes(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  for (auto _ : state) {
    Matrix out = Parallel ? kernels::parallel::sparse_times(f.problem.mask, f.vals, f.right)
                          : kernels::serial::sparse_times(f.problem.mask, f.vals, f.right);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * f.problem.mask.nnz());
}

template <bool Parallel>
void BM_SparseTransposeTimes(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  for (auto _ : state) {
    Matrix out = Parallel ? kernels::parallel::sparse_t_times(f.problem.mask, f.vals, f.left)
                          : kernels::serial::sparse_t_times(f.problem.mask, f.vals, f.left);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * f.problem.mask.nnz());
}

template <bool Parallel>
void BM_HalfSumSquares(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::half_sum_squares(f.vals)
                                      : kernels::serial::half_sum_squares(f.vals));
  }
  state.SetItemsProcessed(state.iterations() * f.problem.mask.nnz());
}

void BM_RiemannianGradient(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const CompletionCost cost(f.problem);
  const MetricParam metric(0.5);
  for (auto _ : state) {
    const auto model = cost.at(factored(f.point));
    TangentVector g = riemannian_gradient(f.point, *model, metric);
    benchmark::DoNotOptimize(g.K.data());
  }
}

void BM_HessianVec(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const CompletionCost cost(f.problem);
  const MetricParam metric(0.5);
  const auto model = cost.at(factored(f.point));
  for (auto _ : state) {
    TangentVector h = hessian_vec(f.point, f.tangent, *model, metric);
    benchmark::DoNotOptimize(h.K.data());
  }
}

void BM_Retraction(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const MetricParam metric(0.5);
  const auto kind = static_cast<RetractionKind>(state.range(1));
  state.SetLabel(std::string(to_string(kind)));
  for (auto _ : state) {
    RetractionOutcome out = retract(f.point, f.tangent, metric, kind, true);
    benchmark::DoNotOptimize(out.point.sigma().data());
  }
}

constexpr auto kSerial = false;
constexpr auto kParallel = true;

BENCHMARK_TEMPLATE(BM_MaskedEntries, kSerial)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_MaskedEntries, kParallel)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_SparseTimes, kSerial)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_SparseTimes, kParallel)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_SparseTransposeTimes, kSerial)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_SparseTransposeTimes, kParallel)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_HalfSumSquares, kSerial)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_HalfSumSquares, kParallel)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RiemannianGradient)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_HessianVec)->Arg(2000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Retraction)
    ->ArgsProduct({{2000, 4000},
                   {static_cast<int>(RetractionKind::QFactor),
                    static_cast<int>(RetractionKind::MetricProjection),
                    static_cast<int>(RetractionKind::Polar)}})
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
