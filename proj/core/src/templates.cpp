#include "guided/templates.hpp"

#include <set>

#include "guided/errors.hpp"
#include "guided/store.hpp"

namespace guided {

namespace {

struct StageSpec {
  const char* name;
  std::vector<std::string> slots;
  const char* body;
};

const std::vector<StageSpec>& stage_specs() {
  static const std::vector<StageSpec> specs = {
      {"initial_solve",
       {"input"},
       R"(Solve the following task step by step. Number each step as "Step 1:", "Step 2:", and so on.
End with the final answer wrapped in <answer></answer> tags.

Task:
{input}
)"},
      {"extract",
       {"input", "trajectory", "gold"},
       R"(The following task was solved correctly. Extract the reusable reasoning steps that led to the correct answer.
Reply with one line per step, formatted exactly as:
STEP <n> | <short title> | <execution instruction>

Task:
{input}

Reasoning:
{trajectory}

Correct answer:
{gold}
)"},
      {"reflect",
       {"input", "trajectory", "gold"},
       R"(The following task was solved incorrectly. Identify what went wrong and how to prevent it.
Reply with pairs of lines, formatted exactly as:
MISTAKE: <what went wrong>
PREVENTION: <how to avoid it>

Task:
{input}

Reasoning:
{trajectory}

Correct answer:
{gold}
)"},
      {"aggregate",
       {"task_id", "records", "max_steps"},
       R"(Below are reasoning patterns extracted from correct solutions and mistake reflections from failed ones for the task "{task_id}".
Synthesize one step-by-step guideline with at most {max_steps} steps. Attach each mistake and its prevention to the step where it applies. Reply exactly in this format:

STEP <n> | <title>
EXECUTION: <instruction>
MISTAKE: <mistake>
PREVENTION: <prevention>

A step may carry zero or more MISTAKE/PREVENTION pairs.

Records:
{records}
)"},
      {"execute_step",
       {"input", "prior_steps", "step_index", "step_title", "step_execution"},
       R"(You are solving the task below by following a guideline one step at a time.

Task:
{input}

Completed steps:
{prior_steps}

Current step {step_index}: {step_title}
Instruction: {step_execution}

Carry out the current step only. If this is the final step, end with the answer wrapped in <answer></answer> tags.
)"},
      {"refine_step",
       {"input", "step_text", "mistakes", "preventions"},
       R"(Review the reasoning step below against the known mistakes for this step.
If the step is already correct, reply exactly NO_CHANGE. Otherwise reply with the corrected step text only.

Task:
{input}

Step result:
{step_text}

Known mistakes:
{mistakes}

Preventions:
{preventions}
)"},
      {"finalize",
       {"input", "steps"},
       R"(Integrate the reasoning steps below and give the final answer wrapped in <answer></answer> tags.

Task:
{input}

Steps:
{steps}
)"},
      {"cot",
       {"input"},
       R"(Solve the following task. Think step by step, then give the final answer wrapped in <answer></answer> tags.

{input}
)"},
      {"few_shot_cot",
       {"exemplars", "input"},
       R"(Solve the task. Think step by step, then give the final answer wrapped in <answer></answer> tags.
Here are solved examples:

{exemplars}

Task:
{input}
)"},
      {"self_plan",
       {"input", "max_steps"},
       R"(Produce a step-by-step plan for solving tasks like the example below, using at most {max_steps} steps.
Reply exactly in this format:

STEP <n> | <title>
EXECUTION: <instruction>

Example task:
{input}
)"},
  };
  return specs;
}

const StageSpec& stage_spec(const std::string& name) {
  for (const auto& spec : stage_specs()) {
    if (spec.name == name) return spec;
  }
  throw ConfigError("unknown template stage: " + name);
}

void validate_body(const std::string& name, const std::string& body) {
  for (const auto& slot : required_slots(name)) {
    if (body.find("{" + slot + "}") == std::string::npos) {
      throw ConfigError("template '" + name + "' is missing required slot {" + slot + "}");
    }
  }
}

}  // namespace

const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& spec : stage_specs()) out.push_back(spec.name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& required_slots(const std::string& name) {
  return stage_spec(name).slots;
}

TemplateLibrary TemplateLibrary::builtin() {
  TemplateLibrary lib;
  for (const auto& spec : stage_specs()) {
    lib.templates_[spec.name] = PromptTemplate{spec.name, "v1", spec.body};
  }
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& directory) {
  TemplateLibrary lib = builtin();
  if (!std::filesystem::exists(directory)) return lib;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    auto at = stem.find('@');
    if (at == std::string::npos) continue;
    const std::string name = stem.substr(0, at);
    const std::string version = stem.substr(at + 1);
    auto it = lib.templates_.find(name);
    if (it == lib.templates_.end()) {
      throw ConfigError("template file for unknown stage: " + entry.path().string());
    }
    std::string body = read_file(entry.path());
    validate_body(name, body);
    it->second = PromptTemplate{name, version, std::move(body)};
  }
  return lib;
}

const PromptTemplate& TemplateLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw ConfigError("no template loaded for stage: " + name);
  }
  return it->second;
}

std::string TemplateLibrary::render(const std::string& name,
                                    const std::map<std::string, std::string>& slots) const {
  const std::string& body = get(name).body;
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t close = body.find('}', i + 1);
    if (close == std::string::npos) {
      out.append(body, i, std::string::npos);
      break;
    }
    std::string token = body.substr(i + 1, close - i - 1);
    auto it = slots.find(token);
    if (it == slots.end()) {
      throw ParseError("template '" + name + "': unbound slot {" + token + "}");
    }
    out += it->second;
    i = close + 1;
  }
  return out;
}

std::string TemplateLibrary::version() const {
  std::set<std::string> versions;
  for (const auto& [name, tmpl] : templates_) versions.insert(tmpl.version);
  std::string combined;
  for (const auto& v : versions) {
    if (!combined.empty()) combined += "+";
    combined += v;
  }
  return combined;
}

}  // namespace guided
