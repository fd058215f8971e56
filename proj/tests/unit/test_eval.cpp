#include "aeg/error.hpp"
#include "aeg/eval.hpp"
#include "aeg/hierarchy.hpp"
#include "aeg/io.hpp"
#include "aeg/llm/mock_backend.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <functional>

using namespace aeg;
using namespace aeg::eval;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

SceneGraph toy_graph() {
  const SceneInput in = load_scene_input(test::toy_dir() / "scene.json");
  SceneGraph g = build_scene_graph(in.instances, in.frames, {}, {}, in.image_size);
  g.hierarchy = hierarchy::build_hierarchy(g);
  return g;
}

}  // namespace

TEST_CASE("ndcg by hand") {
  const GroundTruthAnnotation gt{"cup", {"a", "b", "c"}};
  const double idcg2 = 3 + 2 / std::log2(3.0);
  CHECK(ndcg_at_k({"b", "a"}, gt, 2) == doctest::Approx((2 + 3 / std::log2(3.0)) / idcg2));
  CHECK(ndcg_at_k({"a", "b", "c"}, gt, 3) == doctest::Approx(1.0));
  CHECK(ndcg_at_k({"x", "y"}, gt, 2) == 0.0);
  // Short predictions are padded, long ground truth is cut at k.
  CHECK(ndcg_at_k({"a"}, gt, 1) == doctest::Approx(1.0));
  CHECK(ndcg_at_k({"a"}, gt, 3) == doctest::Approx(3 / (3 + 2 / std::log2(3.0) + 0.5)));
  // A repeated id earns nothing the second time.
  CHECK(ndcg_at_k({"a", "a", "b"}, gt, 3) == doctest::Approx((3 + 1.0) / (3 + 2 / std::log2(3.0) + 0.5)));
  CHECK(code_of([&] { ndcg_at_k({"a"}, gt, 0); }) == ErrorCode::InvalidK);
}

TEST_CASE("annotation validation") {
  CHECK(code_of([] { GroundTruthAnnotation{"cup", {}}.validate(); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { GroundTruthAnnotation{"cup", {"a", "b", "c", "d", "e", "f"}}.validate(); }) ==
        ErrorCode::SchemaViolation);
  CHECK(code_of([] { GroundTruthAnnotation{"cup", {"a", "a"}}.validate(); }) == ErrorCode::SchemaViolation);
  GroundTruthAnnotation{"cup", {"a", "b", "c", "d", "e"}}.validate();

  const SceneGraph g = toy_graph();
  GroundTruthAnnotation{"book", {"bookshelf_1"}}.validate(g);
  CHECK(code_of([&] { GroundTruthAnnotation{"book", {"attic_1"}}.validate(g); }) == ErrorCode::SchemaViolation);

  const auto pool = load_annotations(test::toy_dir() / "pool.json");
  CHECK(annotations_from_json(annotations_to_json(pool)).size() == pool.size());
  CHECK(code_of([] { annotations_from_json(nlohmann::json::object()); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { annotations_from_json(nlohmann::json::parse(R"([{"carriable": "x"}])")); }) ==
        ErrorCode::SchemaViolation);
}

TEST_CASE("detection metrics") {
  const std::vector<DetectionOutcome> v = {{true, true}, {true, false}, {false, true}, {false, false}, {true, true}};
  const DetectionMetrics m = detection_metrics(v);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.accuracy == doctest::Approx(0.6));
  CHECK(m.precision == doctest::Approx(2.0 / 3));
  CHECK(m.recall == doctest::Approx(2.0 / 3));
  CHECK(m.f1 == doctest::Approx(2.0 / 3));

  const std::vector<DetectionOutcome> quiet = {{false, false}};
  const DetectionMetrics q = detection_metrics(quiet);
  CHECK(q.precision == 0.0);
  CHECK(q.recall == 0.0);
  CHECK(q.f1 == 0.0);
  CHECK(q.accuracy == 1.0);
  CHECK(code_of([] { detection_metrics({}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("messy scenes are seeded and well formed") {
  const SceneGraph base = toy_graph();
  const auto pool = load_annotations(test::toy_dir() / "pool.json");
  const MessyScene a = generate_messy_scene(base, pool, 5, 11, 2);
  const MessyScene b = generate_messy_scene(base, pool, 5, 11, 2);
  CHECK(a.graph == b.graph);
  CHECK(truth_to_json(a) == truth_to_json(b));
  CHECK_FALSE(generate_messy_scene(base, pool, 5, 11, 3).graph == a.graph);

  CHECK_FALSE(a.graph.enhanced);
  CHECK(a.graph.nodes.size() == base.nodes.size() + 5);
  REQUIRE(a.truth.size() == 5);
  for (std::size_t i = 0; i < a.truth.size(); ++i) {
    const TruthRow& t = a.truth[i];
    CHECK(t.carriable_id.find("_m00" + std::to_string(i)) != std::string::npos);
    CHECK(a.graph.targets(t.carriable_id, Relation::On) == std::vector<NodeId>{t.receptacle_id});
    CHECK(a.graph.at(t.receptacle_id).instance.rtype == RearrangementType::Receptacle);
    const auto& box = a.graph.at(t.carriable_id).instance.box;
    CHECK(box.min_z() == doctest::Approx(a.graph.at(t.receptacle_id).instance.box.max_z()));
    bool acceptable = false;
    for (const auto& p : pool) {
      if (p.carriable == t.category) {
        acceptable = std::find(p.ranked_receptacles.begin(), p.ranked_receptacles.end(), t.receptacle_id) !=
                     p.ranked_receptacles.end();
      }
    }
    CHECK(t.actually_misplaced == !acceptable);
  }
  for (const Edge& e : a.graph.edges) CHECK(e.relation != Relation::Semantic);

  const auto j = truth_to_json(a);
  CHECK(j.at("seed") == 11);
  CHECK(j.at("index") == 2);
  CHECK(j.at("items").size() == 5);

  CHECK(code_of([&] { generate_messy_scene(base, pool, 0, 1); }) == ErrorCode::InvalidInput);
  CHECK(code_of([&] { generate_messy_scene(base, {}, 1, 1); }) == ErrorCode::EmptyInput);
}

TEST_CASE("benchmark report") {
  const SceneGraph base = toy_graph();
  const auto pool = load_annotations(test::toy_dir() / "pool.json");
  const MessyScene messy = generate_messy_scene(base, pool, 3, 4);
  SceneGraph broken = base;
  broken.hierarchy.reset();
  const std::vector<BenchmarkScene> scenes = {{"messy", messy.graph}, {"broken", broken}};

  llm::MockBackend mock(llm::MockRules::load(test::toy_dir() / "mock_rules.json"));
  const affordance::LlmContext ctx{mock};
  const BenchmarkReport report = run_benchmark(scenes, pool, ctx, tidy::TidyConfig{}, {}, 4);
  CHECK(report.failures.size() == 1);
  CHECK(report.failures[0].find("broken") != std::string::npos);
  CHECK(report.rows.size() >= 3);
  CHECK(report.ndcg.size() == kReportMaxK);
  for (const auto& [k, v] : report.ndcg) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (const BenchmarkRow& row : report.rows) {
    CHECK(row.scene == "messy");
    CHECK(row.ndcg.size() == kReportMaxK);
    CHECK_FALSE(row.predicted.empty());
  }

  const auto j = report_to_json(report);
  CHECK(j.at("seed") == 4);
  CHECK(j.at("ndcg").contains("1"));
  CHECK(j.at("ndcg").contains("8"));
  CHECK(j.at("rows").size() == report.rows.size());
  CHECK(j.at("config").at("k") == tidy::kDefaultK);
  CHECK(dump_json(report_to_json(run_benchmark(scenes, pool, ctx, tidy::TidyConfig{}, {}, 4))) == dump_json(j));

  CHECK(code_of([&] { run_benchmark({}, pool, ctx, tidy::TidyConfig{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("misplacement rate converges to the share of unacceptable receptacles") {
  const SceneGraph base = toy_graph();
  const auto pool = load_annotations(test::toy_dir() / "pool.json");
  std::size_t receptacles = 0;
  for (const auto& n : base.nodes) receptacles += n.instance.rtype == RearrangementType::Receptacle;

  const MessyScene scene = generate_messy_scene(base, pool, 10000, 21);
  std::map<std::string, std::pair<double, double>> tally;  // category -> (misplaced, total)
  for (const TruthRow& t : scene.truth) {
    tally[t.category].first += t.actually_misplaced;
    tally[t.category].second += 1;
  }
  REQUIRE(tally.size() == pool.size());
  for (const auto& item : pool) {
    std::size_t acceptable = 0;
    for (const NodeId& id : item.ranked_receptacles) {
      const SceneNode* node = base.find(id);
      acceptable += node && node->instance.rtype == RearrangementType::Receptacle;
    }
    const double p = 1.0 - static_cast<double>(acceptable) / static_cast<double>(receptacles);
    const auto [bad, total] = tally.at(item.carriable);
    const double sigma = std::sqrt(p * (1 - p) / total);
    CAPTURE(item.carriable);
    CHECK(std::abs(bad / total - p) <= 3 * sigma + 1e-12);
  }
}
