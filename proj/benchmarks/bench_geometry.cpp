#include "aeg/geometry.hpp"
#include "aeg/rng.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace aeg::geometry;

namespace {

std::vector<OrientedBox> random_boxes(std::size_t n) {
  auto rng = aeg::seeded_rng(1, "bench-boxes");
  std::uniform_real_distribution<double> pos(-1.0, 1.0), half(0.2, 1.0), angle(0.0, 6.283185307179586);
  std::vector<OrientedBox> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Mat3 r = rotation_z(angle(rng)) * rotation_x(angle(rng));
    out.emplace_back(Vec3{pos(rng), pos(rng), pos(rng)}, Vec3{half(rng), half(rng), half(rng)}, r);
  }
  return out;
}

void BM_XyIou(benchmark::State& state) {
  const auto boxes = random_boxes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(xy_iou(boxes[i % 256], boxes[(i * 7 + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_XyIou);

void BM_SeparatingAxis(benchmark::State& state) {
  const auto boxes = random_boxes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(boxes_intersect_3d(boxes[i % 256], boxes[(i * 7 + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_SeparatingAxis);

void BM_Containment(benchmark::State& state) {
  const auto boxes = random_boxes(64);
  const int resolution = static_cast<int>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(containment_fraction(boxes[i % 64], boxes[(i * 5 + 3) % 64], resolution));
    ++i;
  }
}
BENCHMARK(BM_Containment)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
