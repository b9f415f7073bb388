#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "guided/grading.hpp"
#include "guided/harness.hpp"
#include "guided/learning.hpp"
#include "guided/provider.hpp"
#include "guided/templates.hpp"

namespace {

using namespace guided;

ChatRequest make_request(std::size_t content_size) {
  ChatRequest req;
  req.model = "mock-model";
  req.messages.push_back(ChatMessage{Role::system, "You are a careful solver."});
  std::string content;
  while (content.size() < content_size) {
    content += "Work through the task  step by step,\nthen state the answer. ";
  }
  req.messages.push_back(ChatMessage{Role::user, content});
  return req;
}

void bench_cache_key(benchmark::State& state) {
  ChatRequest req = make_request(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cache_key(req));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bench_cache_key)->Arg(256)->Arg(4096)->Arg(65536);

void bench_grade_numeric(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(grade("1,234,567/2", "617283.5", TaskKind::numeric));
  }
}
BENCHMARK(bench_grade_numeric);

void bench_grade_multiple_choice(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(grade("  (J). ", "J", TaskKind::multiple_choice));
  }
}
BENCHMARK(bench_grade_multiple_choice);

void bench_extract_answer(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 50; ++i) {
    text += "Step " + std::to_string(i) + ": partial reasoning with <answer>" +
            std::to_string(i) + "</answer> inside.\n";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_answer(text));
  }
}
BENCHMARK(bench_extract_answer);

void bench_split(benchmark::State& state) {
  Dataset d;
  d.task_id = "mock_task";
  for (int i = 0; i < state.range(0); ++i) {
    Sample s;
    s.id = "mock_task-" + std::to_string(i);
    s.task_id = d.task_id;
    s.input_text = "question";
    s.gold_answer = "yes";
    d.samples.push_back(std::move(s));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(split(d, 0.25, 42));
  }
}
BENCHMARK(bench_split)->Arg(100)->Arg(1000)->Arg(10000);

void bench_template_render(benchmark::State& state) {
  TemplateLibrary templates = TemplateLibrary::builtin();
  std::map<std::string, std::string> slots = {
      {"input", std::string(2048, 'q')},
      {"prior_steps", std::string(4096, 'p')},
      {"step_index", "3"},
      {"step_title", "Check the result"},
      {"step_execution", "Verify the answer against every constraint."},
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(templates.render("execute_step", slots));
  }
}
BENCHMARK(bench_template_render);

void bench_parse_guideline_steps(benchmark::State& state) {
  std::string text;
  for (int i = 1; i <= 12; ++i) {
    text += "STEP " + std::to_string(i) + " | Title " + std::to_string(i) + "\n";
    text += "EXECUTION: Carry out part " + std::to_string(i) + " of the work.\n";
    text += "MISTAKE: Rushing part " + std::to_string(i) + "\n";
    text += "PREVENTION: Double-check part " + std::to_string(i) + "\n";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_guideline_steps(text));
  }
}
BENCHMARK(bench_parse_guideline_steps);

}  // namespace

BENCHMARK_MAIN();
