#include "aeg/eval.hpp"

#include "aeg/error.hpp"
#include "aeg/io.hpp"
#include "aeg/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

namespace aeg::eval {

namespace {

using nlohmann::json;

std::string slug(const std::string& text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "item" : out;
}

const GroundTruthAnnotation* find_annotation(const std::vector<GroundTruthAnnotation>& annotations,
                                             const SceneNode& node) {
  for (const auto& a : annotations) {
    if (a.carriable == node.id()) return &a;
  }
  for (const auto& a : annotations) {
    if (a.carriable == node.instance.category) return &a;
  }
  return nullptr;
}

bool contains(const std::vector<NodeId>& list, const NodeId& id) {
  return std::find(list.begin(), list.end(), id) != list.end();
}

}  // namespace

void GroundTruthAnnotation::validate() const {
  if (carriable.empty()) throw Error(ErrorCode::SchemaViolation, "annotation without carriable");
  if (ranked_receptacles.empty() || ranked_receptacles.size() > kMaxGroundTruth) {
    throw Error(ErrorCode::SchemaViolation, carriable + ": ranked_receptacles must hold 1 to " +
                                                std::to_string(kMaxGroundTruth) + " ids");
  }
  std::set<NodeId> seen;
  for (const auto& id : ranked_receptacles) {
    if (!seen.insert(id).second) throw Error(ErrorCode::SchemaViolation, carriable + ": duplicate receptacle " + id);
  }
}

void GroundTruthAnnotation::validate(const SceneGraph& graph) const {
  validate();
  for (const auto& id : ranked_receptacles) {
    if (!graph.find(id)) throw Error(ErrorCode::SchemaViolation, carriable + ": unknown receptacle " + id);
  }
}

std::vector<GroundTruthAnnotation> annotations_from_json(const json& root) {
  if (!root.is_array()) throw Error(ErrorCode::SchemaViolation, "annotations: expected an array");
  std::vector<GroundTruthAnnotation> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string path = "annotations[" + std::to_string(i) + "]";
    try {
      GroundTruthAnnotation a{root[i].at("carriable").get<std::string>(),
                              root[i].at("ranked_receptacles").get<std::vector<NodeId>>()};
      a.validate();
      out.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, path + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaViolation, path + ": " + e.what());
    }
  }
  return out;
}

std::vector<GroundTruthAnnotation> load_annotations(const std::filesystem::path& path) {
  return annotations_from_json(read_json(path));
}

json annotations_to_json(const std::vector<GroundTruthAnnotation>& annotations) {
  json out = json::array();
  for (const auto& a : annotations) out.push_back({{"carriable", a.carriable}, {"ranked_receptacles", a.ranked_receptacles}});
  return out;
}

double ndcg_at_k(const std::vector<NodeId>& predicted, const GroundTruthAnnotation& gt, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1, got " + std::to_string(k));
  gt.validate();
  const auto& list = gt.ranked_receptacles;
  const double L = static_cast<double>(list.size());
  auto relevance = [&](const NodeId& id) {
    auto it = std::find(list.begin(), list.end(), id);
    return it == list.end() ? 0.0 : L - static_cast<double>(it - list.begin());
  };

  double dcg = 0;
  std::set<NodeId> seen;
  for (std::size_t i = 0; i < predicted.size() && i < static_cast<std::size_t>(k); ++i) {
    if (!seen.insert(predicted[i]).second) continue;
    dcg += relevance(predicted[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0;
  for (std::size_t i = 0; i < list.size() && i < static_cast<std::size_t>(k); ++i) {
    idcg += (L - static_cast<double>(i)) / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0 ? 0.0 : dcg / idcg;
}

DetectionMetrics detection_metrics(std::span<const DetectionOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyInput, "no detection outcomes");
  DetectionMetrics m;
  for (const auto& o : outcomes) {
    if (o.predicted_misplaced && o.actually_misplaced) ++m.tp;
    else if (o.predicted_misplaced) ++m.fp;
    else if (o.actually_misplaced) ++m.fn;
    else ++m.tn;
  }
  const double n = static_cast<double>(outcomes.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  m.precision = m.tp + m.fp == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.tp + m.fn == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

MessyScene generate_messy_scene(const SceneGraph& base, const std::vector<GroundTruthAnnotation>& pool, int n_place,
                                std::uint64_t seed, std::size_t index) {
  if (n_place < 1) throw Error(ErrorCode::InvalidInput, "n_place must be >= 1");
  if (pool.empty()) throw Error(ErrorCode::EmptyInput, "carriable pool is empty");
  std::vector<NodeId> receptacles;
  for (const auto& node : base.nodes) {
    if (node.instance.rtype == RearrangementType::Receptacle) receptacles.push_back(node.id());
  }
  if (receptacles.empty()) throw Error(ErrorCode::NoReceptacles, "base scene has no receptacles");

  MessyScene scene{base, {}, seed, index};
  SceneGraph& g = scene.graph;
  for (auto& node : g.nodes) {
    node.affordance.reset();
    node.carriable_affordance.reset();
  }
  std::erase_if(g.edges, [](const Edge& e) { return e.relation == Relation::Semantic; });
  if (g.hierarchy) {
    for (auto& [room, areas] : g.hierarchy->rooms) {
      for (auto& a : areas) a.profile.reset();
    }
  }
  g.enhanced = false;

  auto rng = seeded_rng(seed, "messy:" + std::to_string(index));
  std::set<NodeId> ids;
  for (const auto& node : g.nodes) ids.insert(node.id());

  std::vector<SceneNode> added;
  for (int i = 0; i < n_place; ++i) {
    const GroundTruthAnnotation& item = pool[uniform_index(rng, pool.size())];
    const NodeId& rec_id = receptacles[uniform_index(rng, receptacles.size())];
    const SceneNode& rec = base.at(rec_id);

    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_m%03d", i);
    NodeId id = slug(item.carriable) + suffix;
    for (int extra = 1; ids.contains(id); ++extra) id = slug(item.carriable) + suffix + "_" + std::to_string(extra);
    ids.insert(id);

    const auto& rc = rec.instance.box.center();
    SceneNode node;
    node.instance.id = id;
    node.instance.category = item.carriable;
    node.instance.room = rec.instance.room;
    node.instance.rtype = RearrangementType::Carriable;
    node.instance.box = geometry::OrientedBox::axis_aligned(
        {rc.x(), rc.y(), rec.instance.box.max_z() + kMessyHalfExtent}, geometry::Vec3::Constant(kMessyHalfExtent));
    node.instance.pixel_counts = rec.instance.pixel_counts;
    node.instance.pixel_centroids = rec.instance.pixel_centroids;
    node.keyframe = rec.keyframe;
    added.push_back(std::move(node));

    g.edges.push_back({id, rec_id, Relation::On, {}});
    g.edges.push_back({rec_id, id, Relation::Support, {}});
    if (g.hierarchy) {
      for (auto& a : g.hierarchy->rooms[rec.instance.room]) {
        if (std::binary_search(a.member_ids.begin(), a.member_ids.end(), rec_id)) {
          a.member_ids.insert(std::upper_bound(a.member_ids.begin(), a.member_ids.end(), id), id);
          break;
        }
      }
    }
    scene.truth.push_back({id, item.carriable, rec_id, !contains(item.ranked_receptacles, rec_id)});
  }
  g.nodes.insert(g.nodes.end(), added.begin(), added.end());
  g.canonicalize();
  validate(g);
  return scene;
}

json truth_to_json(const MessyScene& scene) {
  json items = json::array();
  for (const auto& t : scene.truth) {
    items.push_back({{"carriable_id", t.carriable_id},
                     {"category", t.category},
                     {"receptacle_id", t.receptacle_id},
                     {"actually_misplaced", t.actually_misplaced}});
  }
  return {{"seed", scene.seed}, {"index", scene.index}, {"items", std::move(items)}};
}

BenchmarkReport run_benchmark(const std::vector<BenchmarkScene>& scenes,
                              const std::vector<GroundTruthAnnotation>& annotations,
                              const affordance::LlmContext& ctx, const tidy::TidyConfig& tidy_config,
                              const affordance::EnhanceConfig& enhance_config, std::uint64_t seed) {
  if (scenes.empty()) throw Error(ErrorCode::EmptyInput, "no benchmark scenes");
  BenchmarkReport report;
  report.seed = seed;
  report.config = {{"relevance", "reversed_rank"},
                   {"averaging", "per_carriable_pooled"},
                   {"k", tidy_config.k},
                   {"threshold", tidy_config.threshold},
                   {"task", tidy_config.task},
                   {"calibration", tidy::to_string(tidy_config.calibration.kind)}};

  std::vector<DetectionOutcome> outcomes;
  for (const auto& scene : scenes) {
    try {
      const SceneGraph aeg = affordance::enhance(scene.graph, ctx, enhance_config);
      tidy::Scorer scorer(ctx, tidy_config);
      std::set<NodeId> flagged;
      for (const auto& s : tidy::detect_misplaced(aeg, scorer)) flagged.insert(s.carriable_id);
      const auto db = tidy::build_receptacle_db(aeg, tidy_config.allow_local_fallback);

      std::vector<BenchmarkRow> rows;
      for (const auto& node : aeg.nodes) {
        if (node.instance.rtype != RearrangementType::Carriable) continue;
        const GroundTruthAnnotation* gt = find_annotation(annotations, node);
        if (!gt) continue;
        gt->validate(aeg);

        BenchmarkRow row;
        row.scene = scene.name;
        row.carriable_id = node.id();
        row.category = node.instance.category;
        row.current_receptacle = tidy::current_receptacle(aeg, node.id()).value_or(std::string(tidy::kFloorId));
        row.actually_misplaced = !contains(gt->ranked_receptacles, row.current_receptacle);
        row.predicted_misplaced = flagged.contains(node.id());

        const auto ranked = tidy::rate_all(node, db, scorer);
        std::vector<std::pair<NodeId, int>> candidates(
            ranked.begin(), ranked.begin() + std::min<std::ptrdiff_t>(tidy_config.k, ranked.size()));
        const auto decision = tidy::decide_placement(node, candidates, db, scorer);
        row.predicted.push_back(decision.chosen_receptacle_id);
        for (const auto& [id, score] : ranked) {
          if (id != decision.chosen_receptacle_id) row.predicted.push_back(id);
        }
        for (int k = 1; k <= kReportMaxK; ++k) row.ndcg.push_back(ndcg_at_k(row.predicted, *gt, k));
        rows.push_back(std::move(row));
      }
      for (auto& row : rows) {
        outcomes.push_back({row.predicted_misplaced, row.actually_misplaced});
        report.rows.push_back(std::move(row));
      }
    } catch (const Error& e) {
      report.failures.push_back(scene.name + ": " + std::string(to_string(e.code())) + ": " + e.what());
    }
  }

  for (int k = 1; k <= kReportMaxK; ++k) {
    double sum = 0;
    for (const auto& row : report.rows) sum += row.ndcg[static_cast<std::size_t>(k - 1)];
    report.ndcg[k] = report.rows.empty() ? 0.0 : sum / static_cast<double>(report.rows.size());
  }
  if (!outcomes.empty()) report.detection = detection_metrics(outcomes);
  return report;
}

json report_to_json(const BenchmarkReport& report) {
  json ndcg = json::object();
  for (const auto& [k, v] : report.ndcg) ndcg[std::to_string(k)] = v;
  const auto& d = report.detection;
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"scene", r.scene},
                    {"carriable_id", r.carriable_id},
                    {"category", r.category},
                    {"current_receptacle", r.current_receptacle},
                    {"actually_misplaced", r.actually_misplaced},
                    {"predicted_misplaced", r.predicted_misplaced},
                    {"predicted", r.predicted},
                    {"ndcg", r.ndcg}});
  }
  return {{"seed", report.seed},
          {"config", report.config},
          {"ndcg", std::move(ndcg)},
          {"detection",
           {{"accuracy", d.accuracy},
            {"recall", d.recall},
            {"precision", d.precision},
            {"f1", d.f1},
            {"tp", d.tp},
            {"fp", d.fp},
            {"fn", d.fn},
            {"tn", d.tn}}},
          {"rows", std::move(rows)},
          {"failures", report.failures}};
}

}  // namespace aeg::eval
