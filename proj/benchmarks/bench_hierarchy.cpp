#include "aeg/hierarchy.hpp"
#include "aeg/rng.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace aeg;

namespace {

/// Random geometric graph: nodes within 0.25 of each other in the unit square.
hierarchy::AdjacencyMatrix random_adjacency(int n) {
  auto rng = seeded_rng(2, "bench-adjacency");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd pts(n, 2);
  for (int i = 0; i < n; ++i) pts.row(i) << u(rng), u(rng);
  hierarchy::AdjacencyMatrix adj;
  adj.entries = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    adj.node_ids.push_back("n" + std::to_string(i));
    for (int j = 0; j < i; ++j) {
      if ((pts.row(i) - pts.row(j)).norm() < 0.25) adj.entries(i, j) = adj.entries(j, i) = 1.0;
    }
  }
  return adj;
}

void BM_SpectralCluster(benchmark::State& state) {
  const auto adj = random_adjacency(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hierarchy::spectral_cluster(adj));
}
BENCHMARK(BM_SpectralCluster)->Arg(16)->Arg(64)->Arg(128);

}  // namespace
