#include "guided/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "guided/concurrency.hpp"
#include "guided/grading.hpp"
#include "guided/store.hpp"

namespace guided {

namespace {

constexpr const char* kBufferFormatVersion = "1";

ChatRequest make_request(const std::string& model, const std::string& prompt) {
  ChatRequest req;
  req.model = model;
  req.messages.push_back(ChatMessage{Role::user, prompt});
  return req;
}

std::string render_trajectory(const Trajectory& t) {
  std::ostringstream out;
  for (const auto& step : t.steps) {
    out << "Step " << step.index << ": " << step.refined_content << "\n";
  }
  out << "Final answer: " << t.final_answer << "\n";
  return out.str();
}

std::string render_buffer_records(const GuidelineBuffer& buffer) {
  std::ostringstream out;
  for (const auto& record : buffer.records) {
    if (record.kind == ExtractionKind::pattern) {
      if (record.pattern_steps.empty()) continue;  // empty parse, skipped
      out << "From sample " << record.sample_id << " (correct solution):\n";
      int n = 1;
      for (const auto& step : record.pattern_steps) {
        out << "  STEP " << n++ << " | " << step.title << " | " << step.execution << "\n";
      }
    } else {
      if (record.reflections.empty()) continue;
      out << "From sample " << record.sample_id << " (failed solution):\n";
      for (const auto& r : record.reflections) {
        out << "  MISTAKE: " << r.mistake << "\n";
        out << "  PREVENTION: " << r.prevention << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace

std::size_t GuidelineBuffer::pattern_count() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const ExtractionRecord& r) {
        return r.kind == ExtractionKind::pattern;
      }));
}

std::size_t GuidelineBuffer::reflection_count() const {
  return records.size() - pattern_count();
}

json buffer_to_json(const GuidelineBuffer& buffer) {
  json j;
  j["format_version"] = kBufferFormatVersion;
  j["task_id"] = buffer.task_id;
  json records = json::array();
  for (const auto& r : buffer.records) records.push_back(to_json(r));
  j["records"] = std::move(records);
  return j;
}

GuidelineBuffer buffer_from_json(const json& j) {
  if (j.value("format_version", "") != kBufferFormatVersion) {
    throw VersionError("unsupported buffer format version");
  }
  GuidelineBuffer buffer;
  buffer.task_id = j.at("task_id").get<std::string>();
  for (const auto& r : j.at("records")) {
    buffer.records.push_back(extraction_record_from_json(r));
  }
  return buffer;
}

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::vector<std::string> split_into_steps(const std::string& text) {
  static const std::regex marker(R"(Step\s+\d+\s*:)");
  std::vector<std::size_t> starts;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), marker);
       it != std::sregex_iterator(); ++it) {
    starts.push_back(static_cast<std::size_t>(it->position()));
  }
  std::vector<std::string> steps;
  if (starts.empty()) {
    std::string whole = trim(text);
    if (!whole.empty()) steps.push_back(whole);
    return steps;
  }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::size_t begin = starts[i];
    std::size_t end = i + 1 < starts.size() ? starts[i + 1] : text.size();
    std::string chunk = trim(text.substr(begin, end - begin));
    // Drop the "Step N:" marker itself.
    auto colon = chunk.find(':');
    if (colon != std::string::npos) chunk = trim(chunk.substr(colon + 1));
    steps.push_back(chunk);
  }
  return steps;
}

std::vector<PatternStep> parse_pattern_steps(const std::string& text) {
  std::vector<PatternStep> steps;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.starts_with("STEP")) continue;
    // STEP <n> | <title> | <execution>
    auto first = line.find('|');
    if (first == std::string::npos) continue;
    auto second = line.find('|', first + 1);
    if (second == std::string::npos) continue;
    PatternStep step;
    step.title = trim(line.substr(first + 1, second - first - 1));
    step.execution = trim(line.substr(second + 1));
    if (step.execution.empty()) continue;
    steps.push_back(std::move(step));
  }
  return steps;
}

std::vector<Reflection> parse_reflections(const std::string& text) {
  std::vector<Reflection> reflections;
  std::istringstream in(text);
  std::string line;
  std::optional<std::string> pending_mistake;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.starts_with("MISTAKE:")) {
      pending_mistake = trim(line.substr(8));
    } else if (line.starts_with("PREVENTION:") && pending_mistake) {
      std::string prevention = trim(line.substr(11));
      if (!pending_mistake->empty() && !prevention.empty()) {
        reflections.push_back(Reflection{*pending_mistake, prevention});
      }
      pending_mistake.reset();
    }
  }
  return reflections;
}

std::vector<GuidelineStep> parse_guideline_steps(const std::string& text) {
  std::vector<GuidelineStep> steps;
  std::istringstream in(text);
  std::string line;
  GuidelineStep current;
  bool open = false;
  std::optional<std::string> pending_mistake;
  auto close_step = [&] {
    if (open && !current.execution.empty()) {
      current.index = static_cast<int>(steps.size()) + 1;
      steps.push_back(current);
    }
    current = GuidelineStep{};
    pending_mistake.reset();
    open = false;
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.starts_with("STEP")) {
      close_step();
      auto bar = line.find('|');
      if (bar != std::string::npos) {
        current.title = trim(line.substr(bar + 1));
        // Tolerate the three-field pattern form: title | execution.
        auto second = current.title.find('|');
        if (second != std::string::npos) {
          current.execution = trim(current.title.substr(second + 1));
          current.title = trim(current.title.substr(0, second));
        }
      }
      open = true;
    } else if (line.starts_with("EXECUTION:")) {
      if (open) current.execution = trim(line.substr(10));
    } else if (line.starts_with("MISTAKE:")) {
      pending_mistake = trim(line.substr(8));
    } else if (line.starts_with("PREVENTION:")) {
      if (open && pending_mistake && !pending_mistake->empty()) {
        std::string prevention = trim(line.substr(11));
        if (!prevention.empty()) {
          current.mistakes.push_back(*pending_mistake);
          current.preventions.push_back(prevention);
        }
      }
      pending_mistake.reset();
    }
  }
  close_step();
  return steps;
}

Trajectory generate_initial_trajectory(const Sample& sample, const std::string& model,
                                       ChatProvider& provider,
                                       const TemplateLibrary& templates) {
  const std::string prompt = templates.render("initial_solve", {{"input", sample.input_text}});
  ChatResponse resp = provider.complete(make_request(model, prompt));

  Trajectory trajectory;
  trajectory.sample_id = sample.id;
  trajectory.executor_model = model;
  trajectory.refiner_model = model;
  std::vector<std::string> step_texts = split_into_steps(resp.content);
  if (step_texts.empty()) step_texts.push_back(resp.content);
  int index = 1;
  for (auto& text : step_texts) {
    trajectory.steps.push_back(StepRecord{index++, text, text, 0});
  }
  trajectory.final_answer = extract_answer(resp.content);
  return trajectory;
}

ExtractionRecord extract_patterns(const Sample& sample, const Trajectory& trajectory,
                                  const std::string& model, ChatProvider& provider,
                                  const TemplateLibrary& templates) {
  if (!grade(trajectory.final_answer, sample.gold_answer, sample.kind)) {
    throw PreconditionError("extract_patterns requires a correct trajectory (sample " +
                            sample.id + ")");
  }
  const std::string prompt = templates.render("extract", {{"input", sample.input_text},
                                                          {"trajectory", render_trajectory(trajectory)},
                                                          {"gold", sample.gold_answer}});
  ChatResponse resp = provider.complete(make_request(model, prompt));
  ExtractionRecord record;
  record.sample_id = sample.id;
  record.kind = ExtractionKind::pattern;
  record.pattern_steps = parse_pattern_steps(resp.content);
  if (record.pattern_steps.empty()) {
    std::fprintf(stderr, "warning: empty pattern extraction for sample %s\n",
                 sample.id.c_str());
  }
  return record;
}

ExtractionRecord reflect_on_failure(const Sample& sample, const Trajectory& trajectory,
                                    const std::string& model, ChatProvider& provider,
                                    const TemplateLibrary& templates) {
  if (grade(trajectory.final_answer, sample.gold_answer, sample.kind)) {
    throw PreconditionError("reflect_on_failure requires an incorrect trajectory (sample " +
                            sample.id + ")");
  }
  const std::string prompt = templates.render("reflect", {{"input", sample.input_text},
                                                          {"trajectory", render_trajectory(trajectory)},
                                                          {"gold", sample.gold_answer}});
  ChatResponse resp = provider.complete(make_request(model, prompt));
  ExtractionRecord record;
  record.sample_id = sample.id;
  record.kind = ExtractionKind::reflection;
  record.reflections = parse_reflections(resp.content);
  if (record.reflections.empty()) {
    std::fprintf(stderr, "warning: empty reflection for sample %s\n", sample.id.c_str());
  }
  return record;
}

Guideline aggregate(const GuidelineBuffer& buffer, ChatProvider& provider,
                    const TemplateLibrary& templates, const LearnConfig& config) {
  if (buffer.records.empty()) {
    throw PreconditionError("aggregate requires a nonempty buffer");
  }
  if (buffer.pattern_count() == 0) {
    throw AggregationError("cannot aggregate: no pattern records in buffer", "");
  }
  const int step_cap = config.target_steps.value_or(config.max_steps);
  const std::string records_text = render_buffer_records(buffer);
  const std::string prompt = templates.render("aggregate", {{"task_id", buffer.task_id},
                                                            {"records", records_text},
                                                            {"max_steps", std::to_string(step_cap)}});
  ChatRequest req = make_request(config.model, prompt);
  ChatResponse resp = provider.complete(req);
  std::vector<GuidelineStep> steps = parse_guideline_steps(resp.content);
  if (steps.empty()) {
    // One retry with an explicit format nudge (distinct cache key).
    ChatRequest retry = req;
    retry.messages.insert(retry.messages.begin(),
                          ChatMessage{Role::system,
                                      "Reply strictly in the STEP/EXECUTION format."});
    resp = provider.complete(retry);
    steps = parse_guideline_steps(resp.content);
    if (steps.empty()) {
      throw AggregationError("aggregation response could not be parsed", resp.content);
    }
  }
  if (static_cast<int>(steps.size()) > step_cap) {
    steps.resize(static_cast<std::size_t>(step_cap));
  }

  Guideline guideline;
  guideline.task_id = buffer.task_id;
  guideline.steps = std::move(steps);

  // Fold in any reflection the model did not place: its prevention must
  // appear in exactly one step, defaulting to the final step.
  std::set<std::string> placed;
  for (const auto& step : guideline.steps) {
    for (const auto& p : step.preventions) placed.insert(p);
  }
  for (const auto& record : buffer.records) {
    if (record.kind != ExtractionKind::reflection) continue;
    for (const auto& r : record.reflections) {
      if (placed.count(r.prevention)) continue;
      guideline.steps.back().mistakes.push_back(r.mistake);
      guideline.steps.back().preventions.push_back(r.prevention);
      placed.insert(r.prevention);
    }
  }

  guideline.provenance.source_model = config.model;
  guideline.provenance.dataset_digest = config.dataset_digest;
  guideline.provenance.template_version = templates.version();
  guideline.provenance.created_at = config.clock ? config.clock() : now_iso8601();

  ValidationResult check = validate_guideline(guideline);
  if (!check.ok) {
    std::string message = "aggregated guideline failed validation:";
    for (const auto& v : check.violations) message += " " + v + ";";
    throw AggregationError(message, resp.content);
  }
  return guideline;
}

GuidelineBuffer build_guideline_buffer(const std::vector<Sample>& train,
                                       ChatProvider& provider,
                                       const TemplateLibrary& templates,
                                       const LearnConfig& config) {
  if (train.empty()) {
    throw PreconditionError("learn_guidelines requires a nonempty train set");
  }
  std::vector<Sample> samples = train;
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });

  GuidelineBuffer buffer;
  buffer.task_id = samples.front().task_id;

  std::set<std::string> done;
  if (!config.resume_path.empty() && std::filesystem::exists(config.resume_path)) {
    buffer = buffer_from_json(json::parse(read_file(config.resume_path)));
    for (const auto& r : buffer.records) done.insert(r.sample_id);
  }

  std::vector<std::optional<ExtractionRecord>> results(samples.size());
  std::mutex persist_mutex;
  auto persist = [&] {
    if (config.resume_path.empty()) return;
    GuidelineBuffer snapshot;
    snapshot.task_id = buffer.task_id;
    snapshot.records = buffer.records;
    for (const auto& r : results) {
      if (r) snapshot.records.push_back(*r);
    }
    std::sort(snapshot.records.begin(), snapshot.records.end(),
              [](const ExtractionRecord& a, const ExtractionRecord& b) {
                return a.sample_id < b.sample_id;
              });
    atomic_write_file(config.resume_path, buffer_to_json(snapshot).dump(2) + "\n");
  };

  auto process = [&](std::size_t i) {
    const Sample& sample = samples[i];
    if (done.count(sample.id)) return;
    Trajectory trajectory = generate_initial_trajectory(sample, config.model, provider, templates);
    const bool correct = grade(trajectory.final_answer, sample.gold_answer, sample.kind);
    ExtractionRecord record =
        correct ? extract_patterns(sample, trajectory, config.model, provider, templates)
                : reflect_on_failure(sample, trajectory, config.model, provider, templates);
    std::lock_guard lock(persist_mutex);
    results[i] = std::move(record);
    persist();
  };

  try {
    parallel_for(samples.size(), config.concurrency, process);
  } catch (...) {
    persist();  // partial buffer stays on disk for resume
    throw;
  }

  for (auto& r : results) {
    if (r) buffer.records.push_back(std::move(*r));
  }
  std::sort(buffer.records.begin(), buffer.records.end(),
            [](const ExtractionRecord& a, const ExtractionRecord& b) {
              return a.sample_id < b.sample_id;
            });
  return buffer;
}

Guideline learn_guidelines(const std::vector<Sample>& train, ChatProvider& provider,
                           const TemplateLibrary& templates, const LearnConfig& config) {
  GuidelineBuffer buffer = build_guideline_buffer(train, provider, templates, config);
  return aggregate(buffer, provider, templates, config);
}

}  // namespace guided
