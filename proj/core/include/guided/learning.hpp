#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "guided/errors.hpp"
#include "guided/provider.hpp"
#include "guided/templates.hpp"
#include "guided/types.hpp"

namespace guided {

// Aggregation failed after the retry; carries the raw model text for
// inspection.
class AggregationError : public Error {
 public:
  AggregationError(const std::string& message, std::string raw_text)
      : Error(message), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

// Per-sample extraction results accumulated during guideline learning.
struct GuidelineBuffer {
  std::string task_id;
  std::vector<ExtractionRecord> records;

  std::size_t pattern_count() const;
  std::size_t reflection_count() const;
};

json buffer_to_json(const GuidelineBuffer& buffer);
GuidelineBuffer buffer_from_json(const json& j);

struct LearnConfig {
  std::string model;
  int max_steps = 12;                    // cap against runaway aggregation
  std::optional<int> target_steps;       // step-count sweep constraint
  std::filesystem::path resume_path;     // partial-buffer file, empty = off
  std::string dataset_digest;
  int concurrency = 1;
  // Injectable so replayed runs produce identical provenance.
  std::function<std::string()> clock;
};

std::string now_iso8601();

// Response-format parsers. Lenient: malformed lines are skipped.
std::vector<std::string> split_into_steps(const std::string& text);
std::vector<PatternStep> parse_pattern_steps(const std::string& text);
std::vector<Reflection> parse_reflections(const std::string& text);
std::vector<GuidelineStep> parse_guideline_steps(const std::string& text);

// One provider call; the response is split on "Step N:" markers (single
// step when none) and the answer taken from the <answer> tag.
Trajectory generate_initial_trajectory(const Sample& sample, const std::string& model,
                                       ChatProvider& provider,
                                       const TemplateLibrary& templates);

// Requires the trajectory graded correct against the sample's gold answer.
ExtractionRecord extract_patterns(const Sample& sample, const Trajectory& trajectory,
                                  const std::string& model, ChatProvider& provider,
                                  const TemplateLibrary& templates);

// Requires the trajectory graded incorrect.
ExtractionRecord reflect_on_failure(const Sample& sample, const Trajectory& trajectory,
                                    const std::string& model, ChatProvider& provider,
                                    const TemplateLibrary& templates);

// One provider call over the whole buffer; reflections whose prevention the
// model did not place in any step are folded into the final step.
Guideline aggregate(const GuidelineBuffer& buffer, ChatProvider& provider,
                    const TemplateLibrary& templates, const LearnConfig& config);

// Full learning pass: trajectory -> grade -> extract/reflect per sample,
// then a single aggregation. Buffer ordering is by sample id regardless of
// completion order; the partial buffer is persisted after every sample when
// a resume path is configured.
Guideline learn_guidelines(const std::vector<Sample>& train, ChatProvider& provider,
                           const TemplateLibrary& templates, const LearnConfig& config);

// Learning pass that stops after filling the buffer (used by sweeps that
// re-aggregate the same buffer under different step constraints).
GuidelineBuffer build_guideline_buffer(const std::vector<Sample>& train,
                                       ChatProvider& provider,
                                       const TemplateLibrary& templates,
                                       const LearnConfig& config);

}  // namespace guided
