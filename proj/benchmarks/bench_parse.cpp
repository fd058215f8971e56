#include "aeg/llm/parse.hpp"
#include "aeg/llm/prompts.hpp"

#include <benchmark/benchmark.h>

using namespace aeg::llm;

namespace {

void BM_ParseScore(benchmark::State& state) {
  const std::string text =
      "Sure, here is my answer.\n\"\"\"\n1. \"name of the carriable\": **cup_1**\n"
      "2. \"name of the receptacle\": [kitchen_counter_1]\n3. \"Score\": 85 points\n"
      "4. \"Analysis\": The cup belongs next to the coffee machine,\nwhere it is used every morning.\n\"\"\"\n";
  const auto& schema = template_spec(TemplateId::P5).output_schema;
  for (auto _ : state) {
    const auto fields = parse_numbered_fields(text, schema);
    benchmark::DoNotOptimize(parse_leading_integer(fields.at("Score")));
  }
}
BENCHMARK(BM_ParseScore);

void BM_RenderPrompt(benchmark::State& state) {
  const Slots slots = {{"task", "tidy the house"},
                       {"calibration", ""},
                       {"carriable", "cup_1"},
                       {"carriable_description", "Category: cup."},
                       {"receptacle", "kitchen_counter_1"},
                       {"receptacle_description", "Category: counter."}};
  for (auto _ : state) benchmark::DoNotOptimize(render_prompt(TemplateId::P5, slots));
}
BENCHMARK(BM_RenderPrompt);

}  // namespace
