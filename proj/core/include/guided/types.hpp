#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace guided {

using json = nlohmann::ordered_json;

enum class TaskKind { multiple_choice, numeric, free_text, code };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

// One task instance: input plus gold answer.
struct Sample {
  std::string id;
  std::string task_id;
  std::string input_text;
  std::string gold_answer;
  TaskKind kind = TaskKind::free_text;
  std::map<std::string, std::string> metadata;

  bool operator==(const Sample&) const = default;
};

// One reasoning step with its raw and refined content.
struct StepRecord {
  int index = 1;  // 1-based, contiguous within a trajectory
  std::string raw_content;
  std::string refined_content;
  int rounds_applied = 0;  // 0 implies refined_content == raw_content

  bool operator==(const StepRecord&) const = default;
};

// Full reasoning record for one sample.
struct Trajectory {
  std::string sample_id;
  std::vector<StepRecord> steps;
  std::string final_answer;
  std::string executor_model;
  std::string refiner_model;

  bool operator==(const Trajectory&) const = default;
};

// One step of a learned guideline: how to execute it, what tends to go
// wrong, and how to avoid it.
struct GuidelineStep {
  int index = 1;
  std::string title;
  std::string execution;
  std::vector<std::string> mistakes;
  std::vector<std::string> preventions;

  bool operator==(const GuidelineStep&) const = default;
};

struct Provenance {
  std::string source_model;
  std::string dataset_digest;    // excluded from equality
  std::string template_version;
  std::string created_at;        // excluded from equality
};

// Timestamps and digests are provenance-only and must not affect equality,
// so replayed runs compare equal.
inline bool operator==(const Provenance& a, const Provenance& b) {
  return a.source_model == b.source_model &&
         a.template_version == b.template_version;
}

// Ordered step-wise strategy for one task.
struct Guideline {
  std::string task_id;
  std::vector<GuidelineStep> steps;
  Provenance provenance;

  bool operator==(const Guideline&) const = default;
};

enum class ExtractionKind { pattern, reflection };

std::string to_string(ExtractionKind kind);
ExtractionKind extraction_kind_from_string(const std::string& s);

struct PatternStep {
  std::string title;
  std::string execution;

  bool operator==(const PatternStep&) const = default;
};

struct Reflection {
  std::string mistake;
  std::string prevention;

  bool operator==(const Reflection&) const = default;
};

// What one training sample contributed: pattern steps when the initial
// trajectory was graded correct, mistake/prevention reflections otherwise.
struct ExtractionRecord {
  std::string sample_id;
  ExtractionKind kind = ExtractionKind::pattern;
  std::vector<PatternStep> pattern_steps;
  std::vector<Reflection> reflections;

  bool operator==(const ExtractionRecord&) const = default;
};

// JSON serialization. Field names are the wire contract.
json to_json(const Sample& s);
json to_json(const StepRecord& s);
json to_json(const Trajectory& t);
json to_json(const GuidelineStep& s);
json to_json(const Guideline& g);
json to_json(const ExtractionRecord& r);

Sample sample_from_json(const json& j);
StepRecord step_record_from_json(const json& j);
Trajectory trajectory_from_json(const json& j);
GuidelineStep guideline_step_from_json(const json& j);
Guideline guideline_from_json(const json& j);
ExtractionRecord extraction_record_from_json(const json& j);

// SHA-256 hex digest of arbitrary bytes.
std::string sha256_hex(const std::string& bytes);

}  // namespace guided
