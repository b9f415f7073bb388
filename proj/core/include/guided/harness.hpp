#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "guided/execution.hpp"
#include "guided/grading.hpp"
#include "guided/learning.hpp"
#include "guided/provider.hpp"
#include "guided/templates.hpp"
#include "guided/types.hpp"

namespace guided {

struct Dataset {
  std::string task_id;
  std::vector<Sample> samples;
  std::string source_digest;
};

enum class DatasetFormat { bbh_json, jsonl_qa };

struct JsonlFields {
  std::string question = "question";
  std::string answer = "answer";
  TaskKind kind = TaskKind::free_text;
};

// bbh_json: {"examples": [{"input", "target"}, ...]}, kind inferred from the
// task table. jsonl_qa: one object per line with configurable field names.
// task_id defaults to the file stem.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::string& task_id = "", const JsonlFields& fields = {});

// Task kind for known benchmark task names; free_text when unknown.
TaskKind infer_task_kind(const std::string& task_id);

// Deterministic seeded shuffle, |train| = round(fraction * |d|), exact
// disjoint partition. Throws ConfigError when either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed);

enum class Baseline { cot, few_shot_cot };

std::string to_string(Baseline b);

struct ExperimentConfig {
  bool learn = true;
  bool stepwise = true;
  bool refine = true;
  int refine_rounds = 1;
  std::string executor_model;
  std::string refiner_model;  // empty: same as executor
  std::uint64_t split_seed = 0;
  double train_fraction = 0.25;
  std::optional<std::filesystem::path> guideline_path;  // transfer source
  std::optional<Baseline> baseline;
  int few_shot_k = 3;
  int max_steps = 12;
  std::optional<int> target_steps;
  int max_step_chars = 4000;
  bool strict = false;  // abort on the first errored sample
  int concurrency = 1;
  bool dump_trajectories = false;
  std::filesystem::path trajectory_dir;
  std::function<std::string()> clock;  // provenance timestamp source
};

struct SampleOutcome {
  std::string sample_id;
  std::string predicted;
  std::string gold;
  bool correct = false;
  std::int64_t provider_calls = 0;
  bool errored = false;
  std::string error;
};

inline constexpr const char* kReportSchemaVersion = "1";

struct EvalReport {
  std::string schema_version = kReportSchemaVersion;
  std::string task_id;      // evaluation target
  std::string source_task;  // guideline origin; equals task_id unless transfer
  std::string method;       // "guided", "self_plan", "cot", "few_shot_cot"
  json config;              // flag triple, models, seeds, digests
  std::vector<SampleOutcome> per_sample;
  double accuracy = 0.0;    // correct / gradable, errored samples excluded
};

json report_to_json(const EvalReport& report);
EvalReport report_from_json(const json& j);

// Full evaluation of one configuration: baseline, guided (learned or
// transferred guideline), or self-plan when learn is off.
EvalReport run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                          std::shared_ptr<ChatProvider> provider,
                          const TemplateLibrary& templates);

// Evaluation against an already-obtained guideline (used by sweeps and
// transfer runs).
EvalReport evaluate_with_guideline(const ExperimentConfig& config, const Dataset& dataset,
                                   const Guideline& guideline,
                                   std::shared_ptr<ChatProvider> provider,
                                   const TemplateLibrary& templates);

enum class SweepAxis { step_count, refine_rounds };

// One report per value. step_count re-aggregates the learned buffer
// constrained to each step count; refine_rounds varies the per-step
// refinement depth.
std::vector<EvalReport> sweep(SweepAxis axis, const std::vector<int>& values,
                              const ExperimentConfig& config, const Dataset& dataset,
                              std::shared_ptr<ChatProvider> provider,
                              const TemplateLibrary& templates);

// Deterministic run id: digest over config, dataset digest and template
// versions.
std::string report_run_id(const EvalReport& report);

// Writes runs/<run-id>/report.json per report plus summary.md (method rows,
// task columns, Avg). Returns the written paths. Throws when schema
// versions are mixed.
std::vector<std::filesystem::path> emit_report(const std::vector<EvalReport>& reports,
                                               const std::filesystem::path& out_dir);

}  // namespace guided
