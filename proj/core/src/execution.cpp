#include "guided/execution.hpp"

#include <sstream>

#include "guided/grading.hpp"
#include "guided/store.hpp"

namespace guided {

namespace {

ChatRequest make_request(const std::string& model, const std::string& prompt) {
  ChatRequest req;
  req.model = model;
  req.messages.push_back(ChatMessage{Role::user, prompt});
  return req;
}

std::string truncate(std::string text, int max_chars) {
  if (max_chars > 0 && static_cast<int>(text.size()) > max_chars) {
    text.resize(static_cast<std::size_t>(max_chars));
  }
  return text;
}

std::string render_prefix(const std::vector<StepRecord>& prefix) {
  if (prefix.empty()) return "(none)";
  std::ostringstream out;
  for (const auto& step : prefix) {
    out << "Step " << step.index << ": " << step.refined_content << "\n";
  }
  return out.str();
}

std::string render_lines(const std::vector<std::string>& items) {
  if (items.empty()) return "(none)";
  std::ostringstream out;
  for (const auto& item : items) out << "- " << item << "\n";
  return out.str();
}

std::string render_refined_steps(const Trajectory& t) {
  std::ostringstream out;
  for (const auto& step : t.steps) {
    out << "Step " << step.index << ": " << step.refined_content << "\n";
  }
  return out.str();
}

// Whole guideline flattened into one instruction block for the
// single-prompt (stepwise off) mode.
std::string render_whole_guideline(const Guideline& g) {
  std::ostringstream out;
  for (const auto& step : g.steps) {
    out << step.index << ". " << step.title << ": " << step.execution << "\n";
    for (std::size_t i = 0; i < step.mistakes.size(); ++i) {
      out << "   Common mistake: " << step.mistakes[i];
      if (i < step.preventions.size()) {
        out << " Prevention: " << step.preventions[i];
      }
      out << "\n";
    }
  }
  return out.str();
}

void check_config(const ExecutionConfig& config) {
  if (config.refine_rounds < 0 || config.refine_rounds > config.refine_rounds_cap) {
    throw ConfigError("refine_rounds must be in [0, " +
                      std::to_string(config.refine_rounds_cap) + "]");
  }
  if (config.executor_model.empty()) {
    throw ConfigError("executor model is not set");
  }
}

}  // namespace

std::string execute_step(const Sample& sample, const std::vector<StepRecord>& prefix,
                         const GuidelineStep& step, const ExecutionConfig& config,
                         ChatProvider& provider, const TemplateLibrary& templates) {
  const std::string prompt =
      templates.render("execute_step", {{"input", sample.input_text},
                                        {"prior_steps", render_prefix(prefix)},
                                        {"step_index", std::to_string(step.index)},
                                        {"step_title", step.title},
                                        {"step_execution", step.execution}});
  ChatResponse resp = provider.complete(make_request(config.executor_model, prompt));
  return truncate(resp.content, config.max_step_chars);
}

std::pair<std::string, int> refine_step(const Sample& sample, const std::string& step_text,
                                        const GuidelineStep& step,
                                        const ExecutionConfig& config,
                                        ChatProvider& provider,
                                        const TemplateLibrary& templates) {
  const std::string refiner =
      config.refiner_model.empty() ? config.executor_model : config.refiner_model;
  std::string current = step_text;
  int rounds_applied = 0;
  for (int round = 1; round <= config.refine_rounds; ++round) {
    const std::string prompt =
        templates.render("refine_step", {{"input", sample.input_text},
                                         {"step_text", current},
                                         {"mistakes", render_lines(step.mistakes)},
                                         {"preventions", render_lines(step.preventions)}});
    ChatResponse resp = provider.complete(make_request(refiner, prompt));
    rounds_applied = round;
    const std::string reply = trim(resp.content);
    if (reply == kNoChangeSentinel) break;
    if (reply.empty()) continue;  // keep previous round's text
    current = truncate(resp.content, config.max_step_chars);
  }
  return {current, rounds_applied};
}

std::string finalize(const Sample& sample, const Trajectory& trajectory,
                     const ExecutionConfig& config, ChatProvider& provider,
                     const TemplateLibrary& templates) {
  if (!trajectory.steps.empty()) {
    std::string tagged = extract_answer(trajectory.steps.back().refined_content);
    if (!tagged.empty()) return tagged;
  }
  const std::string prompt =
      templates.render("finalize", {{"input", sample.input_text},
                                    {"steps", render_refined_steps(trajectory)}});
  ChatResponse resp = provider.complete(make_request(config.executor_model, prompt));
  return extract_answer(resp.content);
}

Trajectory guided_solve(const Sample& sample, const Guideline& guideline,
                        const ExecutionConfig& config, ChatProvider& provider,
                        const TemplateLibrary& templates) {
  check_config(config);
  if (trim(sample.input_text).empty()) {
    throw PreconditionError("sample " + sample.id + " has empty input text");
  }
  ValidationResult check = validate_guideline(guideline);
  if (!check.ok) {
    throw PreconditionError("guided_solve requires a valid guideline: " +
                            (check.violations.empty() ? "" : check.violations.front()));
  }

  Trajectory trajectory;
  trajectory.sample_id = sample.id;
  trajectory.executor_model = config.executor_model;
  trajectory.refiner_model =
      config.refiner_model.empty() ? config.executor_model : config.refiner_model;

  try {
    if (config.stepwise) {
      for (const auto& step : guideline.steps) {
        std::string raw = execute_step(sample, trajectory.steps, step, config, provider, templates);
        std::string refined = raw;
        int rounds = 0;
        if (config.refine_rounds > 0) {
          std::tie(refined, rounds) =
              refine_step(sample, raw, step, config, provider, templates);
        }
        trajectory.steps.push_back(StepRecord{step.index, std::move(raw), std::move(refined), rounds});
      }
    } else {
      GuidelineStep whole;
      whole.index = 1;
      whole.title = "Apply the full guideline";
      whole.execution = render_whole_guideline(guideline);
      for (const auto& step : guideline.steps) {
        whole.mistakes.insert(whole.mistakes.end(), step.mistakes.begin(), step.mistakes.end());
        whole.preventions.insert(whole.preventions.end(), step.preventions.begin(),
                                 step.preventions.end());
      }
      std::string raw = execute_step(sample, {}, whole, config, provider, templates);
      std::string refined = raw;
      int rounds = 0;
      if (config.refine_rounds > 0) {
        std::tie(refined, rounds) = refine_step(sample, raw, whole, config, provider, templates);
      }
      trajectory.steps.push_back(StepRecord{1, std::move(raw), std::move(refined), rounds});
    }
    trajectory.final_answer = finalize(sample, trajectory, config, provider, templates);
  } catch (const Error& ex) {
    throw ExecutionAbort(std::string("guided run aborted: ") + ex.what(), trajectory);
  }
  return trajectory;
}

}  // namespace guided
