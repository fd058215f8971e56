#include "cli.hpp"

#include "aeg/affordance.hpp"
#include "aeg/error.hpp"
#include "aeg/eval.hpp"
#include "aeg/hierarchy.hpp"
#include "aeg/io.hpp"
#include "aeg/llm/cache.hpp"
#include "aeg/llm/http_backend.hpp"
#include "aeg/llm/mock_backend.hpp"
#include "aeg/tidy.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>

namespace aeg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidInput, msg); };
  if (backend != "mock" && backend != "http") fail("backend must be 'mock' or 'http', got '" + backend + "'");
  if (!(temperature >= 0.0 && temperature <= 2.0)) fail("temperature must be in [0, 2]");
  if (concurrency < 1 || concurrency > 64) fail("concurrency must be in [1, 64]");
  if (threads < 1) fail("threads must be >= 1");
  if (!(tau > 0)) fail("tau must be > 0");
  if (k < 1 || k > tidy::kMaxK) fail("k must be in [1, " + std::to_string(tidy::kMaxK) + "]");
  if (threshold < 0 || threshold > 100) fail("threshold must be in [0, 100]");
  relations.validate();
  KeyframeStrategy::parse(keyframe, seed);
  tidy::CalibrationVariant::parse(calibration, seed);
}

void RunConfig::merge(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "config: expected an object");
  try {
    auto take = [&j](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    take("backend", backend);
    take("rules", rules);
    take("endpoint", endpoint);
    take("model", model);
    take("temperature", temperature);
    take("cache_dir", cache_dir);
    take("concurrency", concurrency);
    take("threads", threads);
    take("seed", seed);
    take("tau", tau);
    take("k", k);
    take("threshold", threshold);
    take("keyframe", keyframe);
    take("calibration", calibration);
    take("task", task);
    if (auto it = j.find("relations"); it != j.end()) {
      const json& r = *it;
      auto take_rel = [&r](const char* key, auto& field) {
        if (auto f = r.find(key); f != r.end()) f->get_to(field);
      };
      take_rel("xy_iou_threshold", relations.xy_iou_threshold);
      take_rel("support_gap", relations.support_gap);
      take_rel("containment_threshold", relations.containment_threshold);
      take_rel("near_threshold", relations.near_threshold);
      take_rel("containment_resolution", relations.containment_resolution);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("config: ") + e.what());
  }
}

json RunConfig::to_json() const {
  json rules_sha = nullptr;
  if (!rules.empty()) rules_sha = llm::sha256_hex(read_text(rules));
  return {{"backend", backend},
          {"rules_sha256", rules_sha},
          {"endpoint", endpoint},
          {"model", model},
          {"temperature", temperature},
          {"concurrency", concurrency},
          {"seed", seed},
          {"relations",
           {{"xy_iou_threshold", relations.xy_iou_threshold},
            {"support_gap", relations.support_gap},
            {"containment_threshold", relations.containment_threshold},
            {"near_threshold", relations.near_threshold},
            {"containment_resolution", relations.containment_resolution}}},
          {"tau", tau},
          {"k", k},
          {"threshold", threshold},
          {"keyframe", keyframe},
          {"calibration", calibration},
          {"task", task}};
}

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 1;
  switch (err->code()) {
    case ErrorCode::Precondition:
    case ErrorCode::GraphNotEnhanced:
    case ErrorCode::MissingProfile:
    case ErrorCode::MissingAffordance:
    case ErrorCode::NoReceptacles:
    case ErrorCode::NoVisibleFrame:
    case ErrorCode::MissingCentroids:
      return 2;
    case ErrorCode::AuthMissing:
    case ErrorCode::Transport:
    case ErrorCode::RateLimited:
      return 3;
    case ErrorCode::SchemaViolation:
      return 4;
    default:
      return 1;
  }
}

namespace {

/// Options whose values override the config file only when given.
class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <class T, class Set>
  CLI::Option* add(const std::string& name, Set set, const std::string& description) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *value, description);
    setters_.push_back([opt, value, set](RunConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
    return opt;
  }

  void apply(RunConfig& c) const {
    for (const auto& s : setters_) s(c);
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(RunConfig&)>> setters_;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Overrides> overrides;
  std::string config_file;
};

Command make_command(CLI::App& root, const std::string& name, const std::string& description) {
  Command cmd;
  cmd.app = root.add_subcommand(name, description);
  cmd.overrides = std::make_unique<Overrides>(cmd.app);
  auto& o = *cmd.overrides;
  cmd.app->add_option("--config", cmd.config_file, "JSON config file; flags take precedence")->check(CLI::ExistingFile);
  o.add<std::string>("--backend", [](RunConfig& c, const std::string& v) { c.backend = v; }, "mock | http");
  o.add<std::string>("--rules", [](RunConfig& c, const std::string& v) { c.rules = v; }, "mock rules file")
      ->check(CLI::ExistingFile);
  o.add<std::string>("--endpoint", [](RunConfig& c, const std::string& v) { c.endpoint = v; }, "chat-completions URL");
  o.add<std::string>("--model", [](RunConfig& c, const std::string& v) { c.model = v; }, "model id");
  o.add<double>("--temperature", [](RunConfig& c, double v) { c.temperature = v; }, "sampling temperature");
  o.add<std::string>("--cache-dir", [](RunConfig& c, const std::string& v) { c.cache_dir = v; }, "response cache");
  o.add<int>("--concurrency", [](RunConfig& c, int v) { c.concurrency = v; }, "max in-flight HTTP requests");
  o.add<int>("--threads", [](RunConfig& c, int v) { c.threads = v; }, "worker threads");
  o.add<std::uint64_t>("--seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; }, "random seed");
  return cmd;
}

RunConfig resolve(const Command& cmd) {
  RunConfig c;
  if (!cmd.config_file.empty()) c.merge(read_json(cmd.config_file));
  cmd.overrides->apply(c);
  c.validate();
  return c;
}

std::unique_ptr<llm::Backend> make_backend(const RunConfig& c) {
  if (c.backend == "http") {
    llm::HttpConfig h;
    h.endpoint = c.endpoint;
    h.concurrency = c.concurrency;
    if (!c.cache_dir.empty()) h.cache_dir = fs::path(c.cache_dir);
    return std::make_unique<llm::HttpBackend>(h);
  }
  return std::make_unique<llm::MockBackend>(c.rules.empty() ? llm::MockRules{} : llm::MockRules::load(c.rules));
}

llm::RenderOptions render_options(const RunConfig& c) {
  llm::RenderOptions r;
  r.model_id = c.model;
  r.temperature = c.temperature;
  return r;
}

tidy::TidyConfig tidy_config(const RunConfig& c) {
  tidy::TidyConfig t;
  t.task = c.task;
  t.k = c.k;
  t.threshold = c.threshold;
  t.calibration = tidy::CalibrationVariant::parse(c.calibration, c.seed);
  return t;
}

json score_json(const tidy::PlacementScore& s) {
  return {{"carriable_id", s.carriable_id},
          {"receptacle_id", s.receptacle_id},
          {"score", s.score},
          {"analysis", s.analysis}};
}

json ranking_json(const std::vector<std::pair<NodeId, int>>& ranking) {
  json out = json::array();
  for (const auto& [id, score] : ranking) out.push_back({{"receptacle_id", id}, {"score", score}});
  return out;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Affordance-enhanced scene graphs for house tidying", "aeg"};
  app.require_subcommand(1);

  std::string in, out, frames, activity, pool, scenes_dir, gt;
  int n_place = 10, count = 1;
  bool fail_fast = false;

  auto build = make_command(app, "build", "scene instances -> scene graph");
  build.app->add_option("--scene", in, "scene input file")->required()->check(CLI::ExistingFile);
  build.app->add_option("--out", out, "scene graph file")->required();
  build.overrides->add<double>("--near", [](RunConfig& c, double v) { c.relations.near_threshold = v; }, "near distance (m)");
  build.overrides->add<double>("--iou", [](RunConfig& c, double v) { c.relations.xy_iou_threshold = v; }, "footprint IoU");
  build.overrides->add<double>("--gap", [](RunConfig& c, double v) { c.relations.support_gap = v; }, "support gap (m)");
  build.overrides->add<double>("--containment", [](RunConfig& c, double v) { c.relations.containment_threshold = v; },
                               "containment fraction");
  build.overrides->add<std::string>("--keyframe", [](RunConfig& c, const std::string& v) { c.keyframe = v; },
                                    "neighbor_sum | random | centering | max_self");

  auto cluster = make_command(app, "cluster", "add the object-area-room hierarchy");
  cluster.app->add_option("--sg", in, "scene graph file")->required()->check(CLI::ExistingFile);
  cluster.app->add_option("--out", out, "output file")->required();
  cluster.overrides->add<double>("--tau", [](RunConfig& c, double v) { c.tau = v; }, "adjacency distance (m)");

  auto enhance = make_command(app, "enhance", "scene graph -> affordance-enhanced graph");
  enhance.app->add_option("--sg", in, "clustered scene graph")->required()->check(CLI::ExistingFile);
  enhance.app->add_option("--frames", frames, "frame image directory")->check(CLI::ExistingDirectory);
  enhance.app->add_option("--out", out, "AEG file")->required();
  enhance.app->add_flag("--fail-fast", fail_fast, "stop at the first failing node");

  auto add_tidy = [](Command& cmd, bool with_k) {
    cmd.overrides->add<int>("--threshold", [](RunConfig& c, int v) { c.threshold = v; }, "misplacement threshold");
    cmd.overrides->add<std::string>("--calibration", [](RunConfig& c, const std::string& v) { c.calibration = v; },
                                    "fixed_standard | fixed_example | random_example | self_generated | no_calibration");
    cmd.overrides->add<std::string>("--task", [](RunConfig& c, const std::string& v) { c.task = v; }, "task instruction");
    if (with_k) cmd.overrides->add<int>("--k", [](RunConfig& c, int v) { c.k = v; }, "retrieved candidates (1-8)");
  };

  auto detect = make_command(app, "detect", "list misplaced carriables");
  detect.app->add_option("--aeg", in, "AEG file")->required()->check(CLI::ExistingFile);
  detect.app->add_option("--out", out, "output file")->required();
  add_tidy(detect, false);

  auto plan = make_command(app, "plan", "placement decisions for misplaced carriables");
  plan.app->add_option("--aeg", in, "AEG file")->required()->check(CLI::ExistingFile);
  plan.app->add_option("--out", out, "output file")->required();
  add_tidy(plan, true);

  auto heatmap = make_command(app, "heatmap", "relevance of every object to an activity");
  heatmap.app->add_option("--aeg", in, "AEG file")->required()->check(CLI::ExistingFile);
  heatmap.app->add_option("--activity", activity, "human activity")->required();
  heatmap.app->add_option("--out", out, "output file")->required();

  auto messy = make_command(app, "messy", "generate messy scenes with ground truth");
  messy.app->add_option("--scene", in, "clustered scene graph")->required()->check(CLI::ExistingFile);
  messy.app->add_option("--pool", pool, "carriable pool annotations")->required()->check(CLI::ExistingFile);
  messy.app->add_option("--n", n_place, "carriables placed per scene")->required();
  messy.app->add_option("--count", count, "number of scenes")->check(CLI::PositiveNumber);
  messy.app->add_option("--out", out, "output directory")->required();

  auto evaluate = make_command(app, "eval", "benchmark report over generated scenes");
  evaluate.app->add_option("--scenes", scenes_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  evaluate.app->add_option("--gt", gt, "annotations file")->required()->check(CLI::ExistingFile);
  evaluate.app->add_option("--frames", frames, "frame image directory")->check(CLI::ExistingDirectory);
  evaluate.app->add_option("--out", out, "report file")->required();
  add_tidy(evaluate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto llm_context = [&](const RunConfig& c, llm::Backend& backend, WarningLog& log) {
      affordance::LlmContext ctx{backend, render_options(c)};
      if (!frames.empty()) ctx.frames_dir = fs::path(frames);
      ctx.threads = c.threads;
      ctx.warnings = &log;
      return ctx;
    };

    if (*build.app) {
      const RunConfig c = resolve(build);
      SceneInput input = load_scene_input(in);
      SceneGraph g = build_scene_graph(std::move(input.instances), std::move(input.frames), c.relations,
                                       KeyframeStrategy::parse(c.keyframe, c.seed), input.image_size);
      save_graph(g, out, c.to_json());
      std::cout << "build: " << g.nodes.size() << " nodes, " << g.edges.size() << " edges -> " << out << "\n";
    } else if (*cluster.app) {
      const RunConfig c = resolve(cluster);
      SceneGraph g = load_graph(in);
      if (g.enhanced) throw Error(ErrorCode::Precondition, "graph is already enhanced; cluster the scene graph");
      g.hierarchy = hierarchy::build_hierarchy(g, c.tau);
      save_graph(g, out, c.to_json());
      std::size_t areas = 0;
      for (const auto& [room, list] : g.hierarchy->rooms) areas += list.size();
      std::cout << "cluster: " << g.hierarchy->rooms.size() << " rooms, " << areas << " areas -> " << out << "\n";
    } else if (*enhance.app) {
      const RunConfig c = resolve(enhance);
      auto backend = make_backend(c);
      WarningLog log;
      const auto ctx = llm_context(c, *backend, log);
      affordance::EnhanceConfig ec;
      ec.fail_fast = fail_fast;
      const SceneGraph aeg = affordance::enhance(load_graph(in), ctx, ec);
      save_graph(aeg, out, c.to_json());
      write_json_atomic(sibling(out, ".warnings.json"), json{{"warnings", log.to_json()}});
      std::cout << "enhance: " << log.size() << " warnings -> " << out << "\n";
    } else if (*detect.app) {
      const RunConfig c = resolve(detect);
      auto backend = make_backend(c);
      WarningLog log;
      const auto ctx = llm_context(c, *backend, log);
      tidy::Scorer scorer(ctx, tidy_config(c));
      const auto misplaced = tidy::detect_misplaced(load_graph(in), scorer);
      json items = json::array();
      for (const auto& s : misplaced) items.push_back(score_json(s));
      write_json_atomic(out, json{{"config", c.to_json()}, {"misplaced", items}, {"warnings", log.to_json()}});
      std::cout << "detect: " << misplaced.size() << " misplaced -> " << out << "\n";
    } else if (*plan.app) {
      const RunConfig c = resolve(plan);
      auto backend = make_backend(c);
      WarningLog log;
      const auto ctx = llm_context(c, *backend, log);
      tidy::Scorer scorer(ctx, tidy_config(c));
      const auto result = tidy::plan_rearrangement(load_graph(in), scorer);
      json misplaced = json::array();
      for (const auto& s : result.misplaced) misplaced.push_back(score_json(s));
      json decisions = json::array();
      for (const auto& d : result.decisions) {
        decisions.push_back({{"carriable_id", d.carriable_id},
                             {"chosen_receptacle_id", d.chosen_receptacle_id},
                             {"analysis", d.analysis},
                             {"candidates", ranking_json(d.candidates)},
                             {"ranked", ranking_json(d.ranked)}});
      }
      write_json_atomic(out, json{{"config", c.to_json()},
                                  {"misplaced", misplaced},
                                  {"plan", decisions},
                                  {"warnings", log.to_json()}});
      std::cout << "plan: " << result.decisions.size() << " decisions -> " << out << "\n";
    } else if (*heatmap.app) {
      const RunConfig c = resolve(heatmap);
      auto backend = make_backend(c);
      WarningLog log;
      const auto ctx = llm_context(c, *backend, log);
      tidy::Scorer scorer(ctx, tidy_config(c));
      const auto scores = tidy::activity_heatmap(load_graph(in), activity, scorer);
      write_json_atomic(out, json{{"activity", activity},
                                  {"scores", scores},
                                  {"config", c.to_json()},
                                  {"warnings", log.to_json()}});
      std::cout << "heatmap: " << scores.size() << " scores -> " << out << "\n";
    } else if (*messy.app) {
      const RunConfig c = resolve(messy);
      const SceneGraph base = load_graph(in);
      const auto annotations = eval::load_annotations(pool);
      fs::create_directories(out);
      for (int i = 0; i < count; ++i) {
        const auto scene = eval::generate_messy_scene(base, annotations, n_place, c.seed, static_cast<std::size_t>(i));
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%03d", i);
        save_graph(scene.graph, fs::path(out) / (std::string(name) + ".json"), c.to_json());
        write_json_atomic(fs::path(out) / (std::string(name) + ".truth.json"), eval::truth_to_json(scene));
      }
      std::cout << "messy: " << count << " scenes -> " << out << "\n";
    } else if (*evaluate.app) {
      const RunConfig c = resolve(evaluate);
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(scenes_dir)) {
        const std::string name = entry.path().filename().string();
        const auto ends_with = [&name](std::string_view s) { return name.ends_with(s); };
        if (entry.is_regular_file() && ends_with(".json") && !ends_with(".truth.json") && !ends_with(".warnings.json")) {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      std::vector<eval::BenchmarkScene> scenes;
      for (const auto& f : files) scenes.push_back({f.stem().string(), load_graph(f)});
      auto backend = make_backend(c);
      WarningLog log;
      const auto ctx = llm_context(c, *backend, log);
      const auto report = eval::run_benchmark(scenes, eval::load_annotations(gt), ctx, tidy_config(c), {}, c.seed);
      json j = eval::report_to_json(report);
      j["config"].update(c.to_json());
      j["warnings"] = log.to_json();
      write_json_atomic(out, j);
      std::cout << "eval: " << report.rows.size() << " carriables over " << scenes.size() << " scenes -> " << out
                << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace aeg::cli
