#include "aeg/affordance.hpp"
#include "aeg/error.hpp"
#include "aeg/hierarchy.hpp"
#include "aeg/io.hpp"
#include "aeg/llm/mock_backend.hpp"
#include "doctest.h"
#include "test_support.hpp"


using namespace aeg;
using namespace aeg::affordance;
using test::aabb;
using test::instance;

namespace {

SceneGraph living_room() {
  SceneGraph g = build_scene_graph(
      {instance("sofa_1", "sofa", "living_room", RearrangementType::Receptacle, aabb(0, 0, 0.4, 1, 0.5, 0.4)),
       instance("tv_1", "tv", "living_room", RearrangementType::Other, aabb(0, 2, 0.6, 0.6, 0.1, 0.4)),
       instance("pillow_1", "pillow", "living_room", RearrangementType::Carriable, aabb(0, 0, 0.9, 0.92, 0.46, 0.05)),
       instance("lamp_1", "lamp", "living_room", RearrangementType::Other, aabb(1.6, 0, 0.6, 0.2, 0.2, 0.6))},
      {{"f0", "f0.png"}});
  g.hierarchy = hierarchy::build_hierarchy(g);
  return g;
}

/// Answers P3 with a fixed body and defers everything else to the mock.
class SemanticScript : public llm::Backend {
 public:
  explicit SemanticScript(std::string p3) : p3_(std::move(p3)), mock_(llm::MockRules{}) {}
  std::string complete(const llm::PromptRequest& r) override {
    return r.template_id == llm::TemplateId::P3 ? p3_ : mock_.complete(r);
  }

 private:
  std::string p3_;
  llm::MockBackend mock_;
};

/// Fails every request whose meta id matches.
class FailingFor : public llm::Backend {
 public:
  explicit FailingFor(std::string id) : id_(std::move(id)), mock_(llm::MockRules{}) {}
  std::string complete(const llm::PromptRequest& r) override {
    if (r.meta.value("id", "") == id_) return "I cannot help with that.";
    return mock_.complete(r);
  }

 private:
  std::string id_;
  llm::MockBackend mock_;
};

}  // namespace

TEST_CASE("node context sentence") {
  const SceneGraph g = living_room();
  CHECK(describe_node_context(g.at("sofa_1"), g) ==
        "The name of this receptacle is sofa_1, its category is sofa, it is located in the room living_room, its "
        "relationships with surrounding objects are: it is near these objects: lamp_1, it supports these objects: "
        "pillow_1.");
  SceneGraph alone = build_scene_graph(
      {instance("vase_1", "vase", "hall", RearrangementType::Other, aabb(0, 0, 0, 0.1, 0.1, 0.1))}, {{"f0", "f"}});
  CHECK(describe_node_context(alone.at("vase_1"), alone) ==
        "The name of this object is vase_1, its category is vase, it is located in the room hall.");
}

TEST_CASE("record formatting") {
  const AffordanceRecord r{"g", "r", "u", "f", AffordanceStage::Local};
  CHECK(format_record(r) == "Geometry & Position: g\nRelationship: r\nUnique Usage: u\nFine-Grained Category: f");
}

TEST_CASE("stage preconditions") {
  const SceneGraph g = living_room();
  llm::MockBackend mock(llm::MockRules{});
  const LlmContext ctx{mock};
  CHECK_THROWS_AS(analyze_local(g.at("pillow_1"), g, ctx), Error);
  CHECK_THROWS_AS(analyze_carriable(g.at("sofa_1"), g, ctx), Error);
  SceneGraph flat = g;
  flat.hierarchy.reset();
  try {
    enhance(flat, ctx);
    FAIL("expected Precondition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
  const std::vector<Area>& areas = g.hierarchy->rooms.at("living_room");
  try {
    aggregate_room_context("living_room", areas, g);
    FAIL("expected MissingProfile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingProfile);
  }
  // Images are only attached when a frames directory is configured.
  CHECK_FALSE(ctx.image(g, "f0").has_value());
  const LlmContext with_frames{mock, {}, test::toy_dir() / "frames"};
  CHECK_THROWS_AS(with_frames.image(g, "f9"), Error);
}

TEST_CASE("semantic edges resolve by id, then category, within the room") {
  const SceneGraph g = living_room();
  const std::string p3 =
      "1. \"Given Receptacle\": sofa_1\n"
      "2. \"objects that have functional relationships\":\n"
      "    (1) TV\n"
      "    (2) sofa_1\n"
      "    (3) fireplace\n"
      "    (4) tv_1\n"
      "    (5) lamp_1.\n"
      "3. \"additional functional edge\":\n"
      "    (1) people sit on the sofa to watch the television in the evening together\n"
      "    (2) itself\n"
      "    (3) warmth\n"
      "    (4) duplicate\n";
  SemanticScript backend(p3);
  WarningLog log;
  LlmContext ctx{backend};
  ctx.warnings = &log;
  const RoomContext room{"living_room", {{"living_room/area00", {"lounge", "seats"}, {"sofa_1"}, {"sofa"}}}};
  const AffordanceRecord local{"g", "r", "u", "f", AffordanceStage::Local};
  const auto links = discover_semantic_edges(g.at("sofa_1"), g, room, local, ctx);
  REQUIRE(links.size() == 2);
  CHECK(links[0].dst == "tv_1");
  CHECK(links[0].label == "people sit on the sofa to watch the television in");
  CHECK(links[1].dst == "lamp_1");
  CHECK(links[1].label == "functionally related");
  // The self reference and the unknown name are reported; duplicates are not.
  CHECK(log.size() == 2);
}

TEST_CASE("room context text") {
  const RoomContext room{"kitchen",
                         {{"kitchen/area00", {"cooking area", "Where food is made."}, {"stove_1", "pan_1"},
                           {"stove", "pan"}}}};
  CHECK(room.text() == "Area kitchen/area00 \"cooking area\": Where food is made.\n  Objects: stove_1 (stove), pan_1 (pan)\n");
}

TEST_CASE("enhance issues the closed-form number of calls and is idempotent") {
  const SceneGraph g = living_room();
  llm::MockBackend mock(llm::MockRules::from_json(nlohmann::json::parse(R"({
    "affordance_rules": {"sofa": {"fine_grained_category": "lounge sofa", "updated_fine_grained_category": "tv sofa"}},
    "semantic_rules": {"sofa": [{"target": "tv", "label": "watch tv"}]}
  })")));
  llm::CountingBackend counter(mock);
  const LlmContext ctx{counter};
  const SceneGraph once = enhance(g, ctx);
  CHECK(counter.total() == expected_enhance_calls(g));
  // 3 context nodes * 3 + 1 carriable + areas
  CHECK(expected_enhance_calls(g) == 10 + g.hierarchy->rooms.at("living_room").size());
  CHECK(counter.count(llm::TemplateId::Carriable) == 1);

  CHECK(once.enhanced);
  CHECK(once.at("sofa_1").affordance->stage == AffordanceStage::Updated);
  CHECK(once.at("sofa_1").affordance->fine_grained_category == "tv sofa");
  CHECK(once.at("pillow_1").carriable_affordance.has_value());
  CHECK_FALSE(once.at("pillow_1").affordance.has_value());
  CHECK(once.targets("sofa_1", Relation::Semantic) == std::vector<NodeId>{"tv_1"});
  for (const auto& area : once.hierarchy->rooms.at("living_room")) CHECK(area.profile.has_value());

  CHECK(enhance(once, ctx) == once);

  LlmContext parallel = ctx;
  parallel.threads = 4;
  CHECK(enhance(g, parallel) == once);
}

TEST_CASE("failing nodes are skipped or abort with fail-fast") {
  const SceneGraph g = living_room();
  FailingFor backend("lamp_1");
  WarningLog log;
  LlmContext ctx{backend};
  ctx.warnings = &log;
  const SceneGraph out = enhance(g, ctx);
  CHECK_FALSE(out.at("lamp_1").affordance.has_value());
  CHECK(out.at("sofa_1").affordance.has_value());
  CHECK(log.size() >= 1);
  bool mentions = false;
  for (const Warning& w : log.sorted()) mentions |= w.subject == "lamp_1";
  CHECK(mentions);

  try {
    enhance(g, ctx, {true});
    FAIL("expected ParseFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseFailure);
    CHECK(std::string(e.what()).find("lamp_1") != std::string::npos);
  }
}
