#include "guided/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "guided/concurrency.hpp"
#include "guided/store.hpp"

namespace guided {

namespace {

ChatRequest make_request(const std::string& model, const std::string& prompt) {
  ChatRequest req;
  req.model = model;
  req.messages.push_back(ChatMessage{Role::user, prompt});
  return req;
}

std::string sample_id_for(const std::string& task_id, std::size_t index) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%04zu", index);
  return task_id + "-" + buffer;
}

}  // namespace

TaskKind infer_task_kind(const std::string& task_id) {
  static const std::vector<std::pair<std::string, TaskKind>> table = {
      {"geometric_shapes", TaskKind::multiple_choice},
      {"gs", TaskKind::multiple_choice},
      {"hyperbaton", TaskKind::multiple_choice},
      {"hy", TaskKind::multiple_choice},
      {"logical_deduction", TaskKind::multiple_choice},
      {"ld", TaskKind::multiple_choice},
      {"salient_translation", TaskKind::multiple_choice},
      {"st", TaskKind::multiple_choice},
      {"multistep_arithmetic", TaskKind::numeric},
      {"ma", TaskKind::numeric},
      {"gsm8k", TaskKind::numeric},
      {"navigate", TaskKind::free_text},
      {"na", TaskKind::free_text},
      {"causal_judgement", TaskKind::free_text},
      {"cj", TaskKind::free_text},
      {"formal_fallacies", TaskKind::free_text},
      {"ff", TaskKind::free_text},
      {"math", TaskKind::free_text},
      {"mbpp", TaskKind::code},
      {"humaneval", TaskKind::code},
  };
  std::string lowered;
  for (unsigned char c : task_id) lowered.push_back(static_cast<char>(std::tolower(c)));
  for (const auto& [name, kind] : table) {
    if (lowered == name) return kind;
  }
  // Substring match for the long names only; the two-letter aliases would
  // otherwise fire on unrelated task ids.
  for (const auto& [name, kind] : table) {
    if (name.size() > 2 && lowered.find(name) != std::string::npos) return kind;
  }
  return TaskKind::free_text;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::string& task_id, const JsonlFields& fields) {
  const std::string raw = read_file(path);
  Dataset dataset;
  dataset.task_id = task_id.empty() ? path.stem().string() : task_id;
  dataset.source_digest = sha256_hex(raw);

  if (format == DatasetFormat::bbh_json) {
    json doc;
    try {
      doc = json::parse(raw);
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ": not valid JSON: " + ex.what());
    }
    auto examples = doc.find("examples");
    if (examples == doc.end() || !examples->is_array()) {
      throw ParseError(path.string() + ": missing 'examples' array");
    }
    const TaskKind kind = infer_task_kind(dataset.task_id);
    std::size_t index = 0;
    for (const auto& record : *examples) {
      if (!record.contains("input")) {
        throw ParseError("record " + std::to_string(index) + ": missing input");
      }
      if (!record.contains("target")) {
        throw ParseError("record " + std::to_string(index) + ": missing target");
      }
      Sample s;
      s.id = sample_id_for(dataset.task_id, index);
      s.task_id = dataset.task_id;
      s.input_text = record.at("input").get<std::string>();
      s.gold_answer = record.at("target").get<std::string>();
      s.kind = kind;
      dataset.samples.push_back(std::move(s));
      ++index;
    }
  } else {
    std::istringstream in(raw);
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json record;
      try {
        record = json::parse(line);
      } catch (const json::exception& ex) {
        throw ParseError("record " + std::to_string(index) + ": not valid JSON: " + ex.what());
      }
      if (!record.contains(fields.question)) {
        throw ParseError("record " + std::to_string(index) + ": missing " + fields.question);
      }
      if (!record.contains(fields.answer)) {
        throw ParseError("record " + std::to_string(index) + ": missing " + fields.answer);
      }
      Sample s;
      s.id = record.contains("id") && record.at("id").is_string()
                 ? record.at("id").get<std::string>()
                 : sample_id_for(dataset.task_id, index);
      s.task_id = dataset.task_id;
      s.input_text = record.at(fields.question).get<std::string>();
      s.gold_answer = record.at(fields.answer).is_string()
                          ? record.at(fields.answer).get<std::string>()
                          : record.at(fields.answer).dump();
      s.kind = fields.kind;
      dataset.samples.push_back(std::move(s));
      ++index;
    }
  }

  std::set<std::string> seen;
  for (const auto& s : dataset.samples) {
    if (s.gold_answer.empty()) {
      throw ParseError("sample " + s.id + ": empty gold answer");
    }
    if (!seen.insert(s.id).second) {
      throw ParseError("duplicate sample id: " + s.id);
    }
  }
  return dataset;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }
  const std::size_t n = d.samples.size();
  const auto train_count =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (train_count == 0 || train_count == n) {
    throw ConfigError("split would leave an empty partition (n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset train{d.task_id, {}, d.source_digest};
  Dataset test{d.task_id, {}, d.source_digest};
  for (std::size_t i = 0; i < n; ++i) {
    (i < train_count ? train : test).samples.push_back(d.samples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

std::string to_string(Baseline b) {
  return b == Baseline::cot ? "cot" : "few_shot_cot";
}

namespace {

int effective_rounds(const ExperimentConfig& cfg) {
  return cfg.refine ? cfg.refine_rounds : 0;
}

json config_to_json(const ExperimentConfig& cfg, const Dataset& dataset,
                    const TemplateLibrary& templates, const std::string& source_task) {
  json j;
  j["learn"] = cfg.learn;
  j["step"] = cfg.stepwise;
  // refine off and rounds=0 are the same configuration and must emit the
  // same report bytes.
  j["refine"] = effective_rounds(cfg) > 0;
  j["refine_rounds"] = effective_rounds(cfg);
  j["executor_model"] = cfg.executor_model;
  j["refiner_model"] = cfg.refiner_model.empty() ? cfg.executor_model : cfg.refiner_model;
  j["split_seed"] = cfg.split_seed;
  j["train_fraction"] = cfg.train_fraction;
  j["baseline"] = cfg.baseline ? json(to_string(*cfg.baseline)) : json(nullptr);
  j["few_shot_k"] = cfg.few_shot_k;
  if (cfg.target_steps) j["target_steps"] = *cfg.target_steps;
  j["task_id"] = dataset.task_id;
  j["source_task"] = source_task;
  j["dataset_digest"] = dataset.source_digest;
  j["template_version"] = templates.version();
  return j;
}

std::string method_name(const ExperimentConfig& cfg) {
  if (cfg.baseline) return to_string(*cfg.baseline);
  if (!cfg.learn) return "self_plan";
  return "guided";
}

ExecutionConfig execution_config(const ExperimentConfig& cfg) {
  ExecutionConfig ec;
  ec.executor_model = cfg.executor_model;
  ec.refiner_model = cfg.refiner_model.empty() ? cfg.executor_model : cfg.refiner_model;
  ec.refine_rounds = effective_rounds(cfg);
  ec.stepwise = cfg.stepwise;
  ec.max_step_chars = cfg.max_step_chars;
  return ec;
}

std::string render_exemplars(const std::vector<Sample>& train, int k, std::uint64_t seed) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::ostringstream out;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(k), train.size());
  for (std::size_t i = 0; i < count; ++i) {
    const Sample& s = train[order[i]];
    out << "Task:\n" << s.input_text << "\nAnswer: <answer>" << s.gold_answer << "</answer>\n\n";
  }
  return out.str();
}

// Self-plan mode: one pre-inference call producing a guideline-shaped plan
// with no learned mistakes, so the guided executor runs unchanged.
Guideline self_plan(const ExperimentConfig& cfg, const Dataset& dataset,
                    const Sample& exemplar, ChatProvider& provider,
                    const TemplateLibrary& templates) {
  const std::string prompt =
      templates.render("self_plan", {{"input", exemplar.input_text},
                                     {"max_steps", std::to_string(cfg.target_steps.value_or(cfg.max_steps))}});
  ChatResponse resp = provider.complete(make_request(cfg.executor_model, prompt));
  Guideline plan;
  plan.task_id = dataset.task_id;
  plan.steps = parse_guideline_steps(resp.content);
  if (plan.steps.empty()) {
    // Whole reply as a single planning step; grading decides downstream.
    plan.steps.push_back(GuidelineStep{1, "Plan", trim(resp.content).empty()
                                                      ? "Solve the task step by step."
                                                      : trim(resp.content)});
  }
  plan.provenance.source_model = cfg.executor_model;
  plan.provenance.dataset_digest = dataset.source_digest;
  plan.provenance.template_version = templates.version();
  plan.provenance.created_at = cfg.clock ? cfg.clock() : now_iso8601();
  return plan;
}

EvalReport evaluate(const ExperimentConfig& cfg, const Dataset& dataset,
                    const std::vector<Sample>& train, const std::vector<Sample>& test,
                    const std::optional<Guideline>& guideline,
                    std::shared_ptr<ChatProvider> provider,
                    const TemplateLibrary& templates) {
  EvalReport report;
  report.task_id = dataset.task_id;
  report.source_task = guideline ? guideline->task_id : dataset.task_id;
  report.method = method_name(cfg);
  report.config = config_to_json(cfg, dataset, templates, report.source_task);

  const ExecutionConfig ec = execution_config(cfg);
  const std::string exemplars =
      cfg.baseline && *cfg.baseline == Baseline::few_shot_cot
          ? render_exemplars(train, cfg.few_shot_k, cfg.split_seed)
          : std::string{};

  report.per_sample.resize(test.size());
  std::mutex abort_mutex;
  std::optional<std::string> abort_message;

  auto run_one = [&](std::size_t i) {
    {
      std::lock_guard lock(abort_mutex);
      if (abort_message) return;
    }
    const Sample& sample = test[i];
    SampleOutcome outcome;
    outcome.sample_id = sample.id;
    outcome.gold = sample.gold_answer;
    std::atomic<std::int64_t> calls{0};
    auto counting = std::make_shared<CountingProvider>(provider, calls);
    try {
      if (cfg.baseline) {
        const std::string prompt =
            *cfg.baseline == Baseline::cot
                ? templates.render("cot", {{"input", sample.input_text}})
                : templates.render("few_shot_cot",
                                   {{"exemplars", exemplars}, {"input", sample.input_text}});
        ChatResponse resp = counting->complete(make_request(cfg.executor_model, prompt));
        outcome.predicted = extract_answer(resp.content);
      } else {
        Trajectory t = guided_solve(sample, *guideline, ec, *counting, templates);
        outcome.predicted = t.final_answer;
        if (cfg.dump_trajectories && !cfg.trajectory_dir.empty()) {
          write_trajectory(t, cfg.trajectory_dir / (sample.id + ".trajectory.json"));
        }
      }
      outcome.correct = grade(outcome.predicted, sample.gold_answer, sample.kind);
    } catch (const Error& ex) {
      outcome.errored = true;
      outcome.error = ex.what();
      if (cfg.strict) {
        std::lock_guard lock(abort_mutex);
        if (!abort_message) abort_message = ex.what();
      } else {
        std::fprintf(stderr, "warning: sample %s errored, excluded from accuracy: %s\n",
                     sample.id.c_str(), ex.what());
      }
    }
    outcome.provider_calls = calls.load();
    report.per_sample[i] = std::move(outcome);
  };

  parallel_for(test.size(), cfg.concurrency, run_one);
  if (abort_message) {
    throw Error("strict mode: aborted on errored sample: " + *abort_message);
  }

  std::size_t gradable = 0;
  std::size_t correct = 0;
  for (const auto& o : report.per_sample) {
    if (o.errored) continue;
    ++gradable;
    if (o.correct) ++correct;
  }
  report.accuracy = gradable == 0
                        ? 0.0
                        : static_cast<double>(correct) / static_cast<double>(gradable);
  return report;
}

}  // namespace

EvalReport evaluate_with_guideline(const ExperimentConfig& config, const Dataset& dataset,
                                   const Guideline& guideline,
                                   std::shared_ptr<ChatProvider> provider,
                                   const TemplateLibrary& templates) {
  auto [train, test] = split(dataset, config.train_fraction, config.split_seed);
  return evaluate(config, dataset, train.samples, test.samples, guideline, provider,
                  templates);
}

EvalReport run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                          std::shared_ptr<ChatProvider> provider,
                          const TemplateLibrary& templates) {
  if (config.baseline && config.guideline_path) {
    throw ConfigError("a baseline run cannot take a guideline");
  }
  auto [train, test] = split(dataset, config.train_fraction, config.split_seed);

  std::optional<Guideline> guideline;
  if (!config.baseline) {
    if (config.guideline_path) {
      guideline = read_guideline(*config.guideline_path);
    } else if (config.learn) {
      LearnConfig lc;
      lc.model = config.executor_model;
      lc.max_steps = config.max_steps;
      lc.target_steps = config.target_steps;
      lc.dataset_digest = dataset.source_digest;
      lc.concurrency = config.concurrency;
      lc.clock = config.clock;
      guideline = learn_guidelines(train.samples, *provider, templates, lc);
    } else {
      guideline = self_plan(config, dataset, test.samples.front(), *provider, templates);
    }
  }
  return evaluate(config, dataset, train.samples, test.samples, guideline, provider,
                  templates);
}

std::vector<EvalReport> sweep(SweepAxis axis, const std::vector<int>& values,
                              const ExperimentConfig& config, const Dataset& dataset,
                              std::shared_ptr<ChatProvider> provider,
                              const TemplateLibrary& templates) {
  if (values.empty()) {
    throw PreconditionError("sweep requires a nonempty value list");
  }
  std::vector<EvalReport> reports;
  if (axis == SweepAxis::refine_rounds) {
    for (int rounds : values) {
      ExperimentConfig cfg = config;
      cfg.refine = rounds > 0;
      cfg.refine_rounds = rounds;
      reports.push_back(run_experiment(cfg, dataset, provider, templates));
    }
    return reports;
  }

  // step_count: learn the buffer once, re-aggregate per target step count.
  auto [train, test] = split(dataset, config.train_fraction, config.split_seed);
  LearnConfig lc;
  lc.model = config.executor_model;
  lc.max_steps = config.max_steps;
  lc.dataset_digest = dataset.source_digest;
  lc.concurrency = config.concurrency;
  lc.clock = config.clock;
  GuidelineBuffer buffer = build_guideline_buffer(train.samples, *provider, templates, lc);
  for (int steps : values) {
    LearnConfig constrained = lc;
    constrained.target_steps = steps;
    Guideline guideline = aggregate(buffer, *provider, templates, constrained);
    ExperimentConfig cfg = config;
    cfg.target_steps = steps;
    reports.push_back(
        evaluate(cfg, dataset, train.samples, test.samples, guideline, provider, templates));
  }
  return reports;
}

}  // namespace guided
