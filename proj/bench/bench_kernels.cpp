#include "mcf/flow.hpp"
#include "mcf/shapes.hpp"

#include <benchmark/benchmark.h>

using namespace mcf;

namespace {

DiscreteImmersion latlong_ellipsoid(int N) {
  return build_immersion({"ellipsoid", {1.3, 1, 0.9}, 2, 1}, AmbientModel::euclidean(3), Topology::latlong,
                         {N, 2 * N}, DerivativeSource::finite_difference);
}

Exec policy(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void BM_flow_rhs(benchmark::State& st) {
  auto imm = latlong_ellipsoid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(flow_rhs(imm, policy(st)));
  st.SetItemsProcessed(st.iterations() * imm.node_count());
}

void BM_extrinsic_states(benchmark::State& st) {
  auto imm = latlong_ellipsoid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(extrinsic_states(imm, {}, policy(st)));
  st.SetItemsProcessed(st.iterations() * imm.node_count());
}

void BM_laplacian(benchmark::State& st) {
  auto imm = latlong_ellipsoid(static_cast<int>(st.range(0)));
  auto states = extrinsic_states(imm);
  std::vector<double> f;
  for (const auto& s : states) f.push_back(s.H2);
  for (auto _ : st) benchmark::DoNotOptimize(laplacian_scalar(imm, f, states, policy(st)));
  st.SetItemsProcessed(st.iterations() * imm.node_count());
}

void BM_mcf_step(benchmark::State& st) {
  auto imm = latlong_ellipsoid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mcf_step(imm, 1e-5, policy(st)));
  st.SetItemsProcessed(st.iterations() * imm.node_count());
}

}  // namespace

BENCHMARK(BM_flow_rhs)->ArgsProduct({{16, 32, 64}, {0, 1}})->ArgNames({"N", "parallel"});
BENCHMARK(BM_extrinsic_states)->ArgsProduct({{16, 32}, {0, 1}})->ArgNames({"N", "parallel"});
BENCHMARK(BM_laplacian)->ArgsProduct({{16, 32, 64}, {0, 1}})->ArgNames({"N", "parallel"});
BENCHMARK(BM_mcf_step)->ArgsProduct({{16, 32, 64}, {0, 1}})->ArgNames({"N", "parallel"});

BENCHMARK_MAIN();
