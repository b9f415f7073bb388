#pragma once

#include <string>
#include <utility>
#include <vector>

#include "guided/errors.hpp"
#include "guided/provider.hpp"
#include "guided/templates.hpp"
#include "guided/types.hpp"

namespace guided {

struct ExecutionConfig {
  std::string executor_model;
  std::string refiner_model;  // may equal executor_model
  int refine_rounds = 1;
  int refine_rounds_cap = 3;
  bool stepwise = true;  // false: whole guideline rendered into one prompt
  int max_step_chars = 4000;
};

// Sentinel a refiner answers when the step needs no correction; stops the
// refinement loop early (over-refinement degrades results).
inline constexpr const char* kNoChangeSentinel = "NO_CHANGE";

// Provider failure mid-trajectory; carries whatever was completed.
class ExecutionAbort : public Error {
 public:
  ExecutionAbort(const std::string& message, Trajectory partial)
      : Error(message), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

// One executor call for step g_t; the prompt carries the refined contents
// of every earlier step and nothing from later ones.
std::string execute_step(const Sample& sample, const std::vector<StepRecord>& prefix,
                         const GuidelineStep& step, const ExecutionConfig& config,
                         ChatProvider& provider, const TemplateLibrary& templates);

// Up to refine_rounds refiner calls; returns the final text and the number
// of rounds actually applied. A NO_CHANGE reply stops early; an empty reply
// keeps the previous round's text.
std::pair<std::string, int> refine_step(const Sample& sample, const std::string& step_text,
                                        const GuidelineStep& step,
                                        const ExecutionConfig& config,
                                        ChatProvider& provider,
                                        const TemplateLibrary& templates);

// Final answer from the trajectory. When the last step already carries an
// <answer> tag it is used without a provider call; otherwise one finalize
// call is made and its tag wins over any tag in earlier steps.
std::string finalize(const Sample& sample, const Trajectory& trajectory,
                     const ExecutionConfig& config, ChatProvider& provider,
                     const TemplateLibrary& templates);

// Full guided run: execute then refine per guideline step (or one shot when
// stepwise is off), then finalize.
Trajectory guided_solve(const Sample& sample, const Guideline& guideline,
                        const ExecutionConfig& config, ChatProvider& provider,
                        const TemplateLibrary& templates);

}  // namespace guided
