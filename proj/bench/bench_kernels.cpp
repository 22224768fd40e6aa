// OpenMP operator kernel against the serial reference.
#include <benchmark/benchmark.h>

#include <cmath>

#include "rbc/gaussian_field.hpp"
#include "rbc/kernels.hpp"
#include "rbc/parallel.hpp"
#include "rbc/solver.hpp"

namespace {

struct Problem {
  rbc::EdgeField a;
  rbc::NodeField u;
};

Problem makeProblem(std::int64_t L) {
  const rbc::LatticeBox box(3, L);
  Problem p;
  p.a = rbc::EdgeField(box);
  p.u = rbc::NodeField(box);
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < box.nodeCount(); ++i) p.a.dir[k][i] = 1.0 + 3.0 * std::abs(rbc::counterNormal(7, 3 * i + k)) / 4.0;
  for (std::size_t i = 0; i < box.nodeCount(); ++i) p.u.values[i] = rbc::counterNormal(11, i);
  return p;
}

void BM_ApplyOperator(benchmark::State& state) {
  const Problem p = makeProblem(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rbc::applyOperator(p.a, p.u, 0.01));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.u.box.nodeCount()));
}

void BM_ApplyOperatorReference(benchmark::State& state) {
  const Problem p = makeProblem(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rbc::applyOperatorReference(p.a, p.u, 0.01));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.u.box.nodeCount()));
}

void BM_DeterministicDot(benchmark::State& state) {
  const Problem p = makeProblem(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rbc::deterministicDot(p.u.values, p.u.values));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.u.box.nodeCount()));
}

void BM_Solve(benchmark::State& state) {
  const Problem p = makeProblem(state.range(0));
  rbc::NodeField rhs(p.u.box, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rbc::solve(rbc::DirichletProblem{p.a, 0.01, rhs, nullptr}));
}

}  // namespace

BENCHMARK(BM_ApplyOperator)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyOperatorReference)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DeterministicDot)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Solve)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
