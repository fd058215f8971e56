#include "aeg/affordance.hpp"
#include "aeg/error.hpp"
#include "aeg/hierarchy.hpp"
#include "aeg/io.hpp"
#include "aeg/llm/mock_backend.hpp"
#include "aeg/tidy.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <atomic>
#include <functional>
#include <set>

using namespace aeg;
using namespace aeg::tidy;
using test::aabb;
using test::instance;

namespace {

using Override = std::function<std::optional<std::string>(const llm::PromptRequest&)>;

/// Mock backend with a hook that may replace any answer.
class Scripted : public llm::Backend {
 public:
  Scripted(llm::MockRules rules, Override hook) : mock_(std::move(rules)), hook_(std::move(hook)) {}
  std::string complete(const llm::PromptRequest& r) override {
    ++calls;
    if (auto text = hook_(r)) return *text;
    return mock_.complete(r);
  }
  std::atomic<int> calls{0};

 private:
  llm::MockBackend mock_;
  Override hook_;
};

std::string score_body(const std::string& score) {
  return "1. \"name of the carriable\": cup_1\n2. \"name of the receptacle\": table_1\n3. \"Score\": " + score +
         "\n4. \"Analysis\": scripted\n";
}

llm::MockRules kitchen_rules() {
  return llm::MockRules::from_json(nlohmann::json::parse(R"({
    "default_score": 40,
    "score_rules": {"cup": {"table_1": 50, "shelf_1": 80, "sink_1": 80}, "book": {"shelf_1": 51, "table_1": 10}}
  })"));
}

/// table_1 holds cup_1, shelf_1 holds book_1, sink_1 is empty; pan_1 lies on
/// the floor.
SceneGraph kitchen(const llm::MockRules& rules) {
  SceneGraph g = build_scene_graph(
      {instance("table_1", "table", "kitchen", RearrangementType::Receptacle, aabb(0, 0, 0.4, 0.5, 0.5, 0.4)),
       instance("cup_1", "cup", "kitchen", RearrangementType::Carriable, aabb(0, 0, 0.9, 0.46, 0.46, 0.05)),
       instance("shelf_1", "shelf", "kitchen", RearrangementType::Receptacle, aabb(5, 0, 0.4, 0.5, 0.5, 0.4)),
       instance("book_1", "book", "kitchen", RearrangementType::Carriable, aabb(5, 0, 0.9, 0.46, 0.46, 0.05)),
       instance("sink_1", "sink", "kitchen", RearrangementType::Receptacle, aabb(10, 0, 0.4, 0.5, 0.5, 0.4)),
       instance("pan_1", "pan", "kitchen", RearrangementType::Carriable, aabb(15, 0, 0.05, 0.2, 0.2, 0.05))},
      {{"f0", "f0.png"}});
  g.hierarchy = hierarchy::build_hierarchy(g);
  llm::MockBackend backend(rules);
  return affordance::enhance(g, affordance::LlmContext{backend});
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("calibration variants") {
  CHECK(CalibrationVariant::parse("self_generated").kind == CalibrationVariant::Kind::SelfGenerated);
  CHECK(CalibrationVariant::parse("random_example", 9).seed == 9);
  for (auto k : {CalibrationVariant::Kind::FixedStandard, CalibrationVariant::Kind::NoCalibration}) {
    CHECK(CalibrationVariant::parse(to_string(k)).kind == k);
  }
  CHECK(code_of([] { CalibrationVariant::parse("bogus"); }) == ErrorCode::InvalidInput);

  llm::MockBackend mock(llm::MockRules{});
  const affordance::LlmContext ctx{mock};
  auto block = [&](CalibrationVariant v) {
    TidyConfig cfg;
    cfg.calibration = v;
    Scorer s(ctx, cfg);
    return s.calibration_block(ScorerMode::MisplacementCheck, "cup", "table_1");
  };
  using K = CalibrationVariant::Kind;
  CHECK(block({K::NoCalibration}).empty());
  const std::string standard = block({K::FixedStandard});
  CHECK(standard.rfind("Scoring standard:\n", 0) == 0);
  CHECK(standard.find("Scoring examples") == std::string::npos);
  CHECK(block({K::FixedExample}).find("toothbrush") != std::string::npos);
  CHECK(block({K::RandomExample, 3}) == block({K::RandomExample, 3}));
  CHECK(block({K::SelfGenerated}) == block({K::FixedExample}));
  CHECK(calibration_standard(ScorerMode::RetrievalRating) != calibration_standard(ScorerMode::MisplacementCheck));
}

TEST_CASE("self-generated calibration feeds back earlier scores") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  llm::MockBackend mock(rules);
  const affordance::LlmContext ctx{mock, {}, {}, 4};
  TidyConfig cfg;
  cfg.calibration = {CalibrationVariant::Kind::SelfGenerated};
  Scorer scorer(ctx, cfg);
  CHECK(scorer.threads() == 1);
  scorer.score(aeg.at("cup_1"), entry_for_node(aeg.at("table_1"), aeg), ScorerMode::MisplacementCheck);
  const std::string block = scorer.calibration_block(ScorerMode::MisplacementCheck, "x", "y");
  CHECK(block.find("Placing the cup on the") != std::string::npos);
  CHECK(block.find("was scored 50.") != std::string::npos);
}

TEST_CASE("scorer configuration is checked") {
  llm::MockBackend mock(llm::MockRules{});
  const affordance::LlmContext ctx{mock};
  TidyConfig bad_k;
  bad_k.k = 0;
  CHECK(code_of([&] { Scorer(ctx, bad_k); }) == ErrorCode::InvalidK);
  TidyConfig bad_threshold;
  bad_threshold.threshold = 101;
  CHECK(code_of([&] { Scorer(ctx, bad_threshold); }) == ErrorCode::InvalidInput);
}

TEST_CASE("detection threshold is inclusive") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  llm::MockBackend mock(rules);
  const affordance::LlmContext ctx{mock};
  Scorer scorer(ctx, TidyConfig{});
  const auto flagged = detect_misplaced(aeg, scorer);
  // cup 50 on table, pan 40 on the floor (default), book 51 on the shelf.
  REQUIRE(flagged.size() == 2);
  CHECK(flagged[0].carriable_id == "pan_1");
  CHECK(flagged[0].receptacle_id == kFloorId);
  CHECK(flagged[0].score == 40);
  CHECK(flagged[1].carriable_id == "cup_1");
  CHECK(flagged[1].score == 50);

  SceneGraph plain = aeg;
  plain.enhanced = false;
  CHECK(code_of([&] { detect_misplaced(plain, scorer); }) == ErrorCode::GraphNotEnhanced);
}

TEST_CASE("out-of-range scores are clamped with a warning") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  Scripted backend(rules, [](const llm::PromptRequest& r) -> std::optional<std::string> {
    if (r.template_id != llm::TemplateId::P5) return std::nullopt;
    return score_body(r.meta.value("receptacle", "") == "table_1" ? "150" : "-5");
  });
  WarningLog log;
  affordance::LlmContext ctx{backend};
  ctx.warnings = &log;
  Scorer scorer(ctx, TidyConfig{});
  const auto& cup = aeg.at("cup_1");
  CHECK(scorer.score(cup, entry_for_node(aeg.at("table_1"), aeg), ScorerMode::MisplacementCheck).score == 100);
  CHECK(scorer.score(cup, entry_for_node(aeg.at("sink_1"), aeg), ScorerMode::RetrievalRating).score == 0);
  CHECK(log.size() == 2);
  CHECK(log.sorted()[0].subject == "cup_1/sink_1");
}

TEST_CASE("a non-numeric score is retried once") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  int seen = 0;
  Scripted once(rules, [&](const llm::PromptRequest& r) -> std::optional<std::string> {
    if (r.template_id != llm::TemplateId::P5) return std::nullopt;
    return score_body(seen++ == 0 ? "high" : "70 points");
  });
  affordance::LlmContext ctx{once};
  Scorer scorer(ctx, TidyConfig{});
  const auto entry = entry_for_node(aeg.at("table_1"), aeg);
  CHECK(scorer.score(aeg.at("cup_1"), entry, ScorerMode::MisplacementCheck).score == 70);
  CHECK(once.calls == 2);

  Scripted never(rules, [](const llm::PromptRequest& r) -> std::optional<std::string> {
    if (r.template_id != llm::TemplateId::P5) return std::nullopt;
    return score_body("unsure");
  });
  affordance::LlmContext ctx2{never};
  Scorer scorer2(ctx2, TidyConfig{});
  CHECK(code_of([&] { scorer2.score(aeg.at("cup_1"), entry, ScorerMode::MisplacementCheck); }) ==
        ErrorCode::NonNumericScore);
  CHECK(never.calls == 2);
  CHECK(code_of([&] { scorer2.score(aeg.at("table_1"), entry, ScorerMode::MisplacementCheck); }) ==
        ErrorCode::MissingAffordance);
}

TEST_CASE("receptacle database") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  const ReceptacleDatabase db = build_receptacle_db(aeg);
  REQUIRE(db.size() == 3);
  CHECK(db.entries[0].id == "shelf_1");
  CHECK(db.find("sink_1") != nullptr);
  CHECK(db.find("cup_1") == nullptr);
  CHECK(db.find("sink_1")->room == "kitchen");

  SceneGraph local = aeg;
  for (auto& n : local.nodes) {
    if (n.id() == "sink_1") n.affordance->stage = AffordanceStage::Local;
  }
  try {
    build_receptacle_db(local);
    FAIL("expected MissingAffordance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAffordance);
    CHECK(std::string(e.what()).find("sink_1") != std::string::npos);
  }
  CHECK(build_receptacle_db(local, true).size() == 3);
  SceneGraph bare = local;
  for (auto& n : bare.nodes) {
    if (n.id() == "sink_1") n.affordance.reset();
  }
  CHECK(code_of([&] { build_receptacle_db(bare, true); }) == ErrorCode::MissingAffordance);
}

TEST_CASE("current receptacle prefers receptacles") {
  // key_1 rests on the thin box_1 and, within the support gap, on table_1.
  const SceneGraph g = build_scene_graph(
      {instance("table_1", "table", "k", RearrangementType::Receptacle, aabb(0, 0, 0.4, 0.5, 0.5, 0.4)),
       instance("box_1", "box", "k", RearrangementType::Other, aabb(0, 0, 0.85, 0.5, 0.5, 0.05)),
       instance("key_1", "key", "k", RearrangementType::Carriable, aabb(0, 0, 0.95, 0.48, 0.48, 0.05)),
       instance("pen_1", "pen", "k", RearrangementType::Carriable, aabb(3, 0, 0.95, 0.48, 0.48, 0.05))},
      {{"f0", "f0.png"}});
  CHECK(g.targets("key_1", Relation::On) == std::vector<NodeId>{"box_1", "table_1"});
  CHECK(current_receptacle(g, "key_1") == NodeId("table_1"));
  CHECK_FALSE(current_receptacle(g, "pen_1").has_value());
}

TEST_CASE("retrieval orders by score then id") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  const ReceptacleDatabase db = build_receptacle_db(aeg);
  llm::MockBackend mock(rules);
  const affordance::LlmContext ctx{mock};
  Scorer scorer(ctx, TidyConfig{});
  const auto& cup = aeg.at("cup_1");
  using Ranked = std::vector<std::pair<NodeId, int>>;
  CHECK(rate_all(cup, db, scorer) == Ranked{{"shelf_1", 80}, {"sink_1", 80}, {"table_1", 50}});
  CHECK(retrieve_candidates(cup, db, 2, scorer) == Ranked{{"shelf_1", 80}, {"sink_1", 80}});
  CHECK(retrieve_candidates(cup, db, 8, scorer).size() == 3);
  CHECK(code_of([&] { retrieve_candidates(cup, db, 0, scorer); }) == ErrorCode::InvalidK);
}

TEST_CASE("retrieval degrades when most ratings fail") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  const ReceptacleDatabase db = build_receptacle_db(aeg);
  auto failing = [&](std::set<std::string> bad) {
    return [bad](const llm::PromptRequest& r) -> std::optional<std::string> {
      if (r.template_id == llm::TemplateId::P5 && bad.count(r.meta.value("receptacle", ""))) return "no idea";
      return std::nullopt;
    };
  };
  WarningLog log;
  Scripted one(rules, failing({"sink_1"}));
  affordance::LlmContext ctx{one};
  ctx.warnings = &log;
  Scorer scorer(ctx, TidyConfig{});
  CHECK(rate_all(aeg.at("cup_1"), db, scorer).size() == 2);
  CHECK(log.size() == 1);

  Scripted two(rules, failing({"sink_1", "table_1"}));
  affordance::LlmContext ctx2{two};
  Scorer scorer2(ctx2, TidyConfig{});
  CHECK(code_of([&] { rate_all(aeg.at("cup_1"), db, scorer2); }) == ErrorCode::RetrievalDegraded);
}

TEST_CASE("decision matches by id or fine-grained name and falls back") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  const ReceptacleDatabase db = build_receptacle_db(aeg);
  const std::vector<std::pair<NodeId, int>> candidates = {{"sink_1", 80}, {"shelf_1", 70}};
  auto answering = [](std::string answer) {
    return [answer](const llm::PromptRequest& r) -> std::optional<std::string> {
      if (r.template_id != llm::TemplateId::P6) return std::nullopt;
      return "1. \"The best receptacle\": " + answer + "\n2. \"Analysis\": because\n";
    };
  };

  Scripted by_id(rules, answering("**Shelf_1**."));
  affordance::LlmContext ctx{by_id};
  Scorer s1(ctx, TidyConfig{});
  const auto d1 = decide_placement(aeg.at("cup_1"), candidates, db, s1);
  CHECK(d1.chosen_receptacle_id == "shelf_1");
  CHECK(d1.analysis == "because");
  CHECK(d1.candidates == candidates);

  const std::string fine = db.find("shelf_1")->record.fine_grained_category;
  Scripted by_name(rules, answering(fine));
  affordance::LlmContext ctx2{by_name};
  Scorer s2(ctx2, TidyConfig{});
  CHECK(decide_placement(aeg.at("cup_1"), candidates, db, s2).chosen_receptacle_id == "shelf_1");

  Scripted lost(rules, answering("the garden shed"));
  WarningLog log;
  affordance::LlmContext ctx3{lost};
  ctx3.warnings = &log;
  Scorer s3(ctx3, TidyConfig{});
  CHECK(decide_placement(aeg.at("cup_1"), candidates, db, s3).chosen_receptacle_id == "sink_1");
  CHECK(lost.calls == 2);
  REQUIRE(log.size() == 1);
  CHECK(log.sorted()[0].subject == "cup_1");

  CHECK(code_of([&] { decide_placement(aeg.at("cup_1"), {}, db, s1); }) == ErrorCode::Precondition);
  CHECK(code_of([&] { decide_placement(aeg.at("cup_1"), {{"ghost", 1}}, db, s1); }) == ErrorCode::Precondition);
}

TEST_CASE("plan issues the closed-form number of calls") {
  const auto rules = kitchen_rules();
  const SceneGraph aeg = kitchen(rules);
  llm::MockBackend mock(rules);
  llm::CountingBackend counter(mock);
  const affordance::LlmContext ctx{counter};
  Scorer scorer(ctx, TidyConfig{});
  const Plan plan = plan_rearrangement(aeg, scorer);
  REQUIRE(plan.decisions.size() == 2);
  CHECK(counter.total() == expected_plan_calls(3, 2, 3));
  CHECK(expected_plan_calls(3, 2, 3) == 11);
  CHECK(plan.decisions[0].carriable_id == "pan_1");
  CHECK(plan.decisions[1].chosen_receptacle_id == "shelf_1");
  CHECK(plan.decisions[1].ranked.size() == 3);
}

TEST_CASE("activity heatmap covers every node") {
  const SceneInput in = load_scene_input(test::toy_dir() / "scene.json");
  SceneGraph g = build_scene_graph(in.instances, in.frames, {}, {}, in.image_size);
  g.hierarchy = hierarchy::build_hierarchy(g);
  const auto rules = llm::MockRules::load(test::toy_dir() / "mock_rules.json");
  llm::MockBackend mock(rules);
  const affordance::LlmContext ctx{mock};
  const SceneGraph aeg = affordance::enhance(g, ctx);
  Scorer scorer(ctx, TidyConfig{});
  const auto heat = activity_heatmap(aeg, "make coffee", scorer);
  CHECK(heat.size() == aeg.nodes.size());
  for (const auto& [id, score] : heat) {
    CHECK(score >= 0);
    CHECK(score <= 100);
  }
  const Json golden = read_json(test::kTestsDir / "golden" / "heatmap.json");
  CHECK(heat == golden.at("scores").get<std::map<NodeId, int>>());
  CHECK(heat.at("kitchen_counter_1") == 95);
}
