// Command-line driver: learn guidelines, run evaluations and sweeps,
// transfer guidelines across tasks, and regenerate summary tables.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guided/config.hpp"
#include "guided/harness.hpp"
#include "guided/store.hpp"

namespace {

using namespace guided;

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::string replay_tape;
  std::string record_tape;
  bool no_cache = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path,
                  "Config file (default: $GUIDED_CONFIG or built-in mock table)");
  cmd->add_option("--replay", opt.replay_tape, "Replay provider exchanges from a tape file");
  cmd->add_option("--record", opt.record_tape, "Record provider exchanges to a tape file");
  cmd->add_flag("--no-cache", opt.no_cache, "Disable the response cache");
}

CliConfig resolve_config(const CommonOptions& opt) {
  std::string path = opt.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("GUIDED_CONFIG")) path = env;
  }
  return load_cli_config(path);
}

std::shared_ptr<ChatProvider> build_provider(const CliConfig& config,
                                             const CommonOptions& opt) {
  std::shared_ptr<ChatProvider> provider;
  if (!opt.replay_tape.empty()) {
    provider = std::make_shared<ReplayProvider>(opt.replay_tape);
  } else {
    provider = make_base_provider(config);
  }
  if (!opt.record_tape.empty()) {
    provider = std::make_shared<RecordingProvider>(provider, opt.record_tape);
  }
  if (config.cache_enabled && !opt.no_cache) {
    provider = std::make_shared<CachingProvider>(
        provider, std::make_shared<ResponseCache>(config.cache_dir));
  }
  return provider;
}

DatasetFormat parse_format(const std::string& name) {
  if (name == "bbh_json") return DatasetFormat::bbh_json;
  if (name == "jsonl_qa") return DatasetFormat::jsonl_qa;
  throw ConfigError("unknown dataset format: " + name);
}

struct EvalOptions {
  std::string data_path;
  std::string format = "bbh_json";
  std::string task_id;
  std::string executor;
  std::string refiner;
  bool no_learn = false;
  bool no_step = false;
  bool no_refine = false;
  int rounds = 1;
  std::string guideline_path;
  std::string baseline;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  double fraction = 0.25;
  bool strict = false;
  bool dump_trajectories = false;
  std::string trajectory_dir = "trajectories";
};

void add_eval_options(CLI::App* cmd, EvalOptions& opt, bool guideline_required) {
  cmd->add_option("--data", opt.data_path, "Dataset file")->required();
  cmd->add_option("--format", opt.format, "Dataset format: bbh_json | jsonl_qa");
  cmd->add_option("--task", opt.task_id, "Task id (default: dataset file stem)");
  cmd->add_option("--executor", opt.executor, "Executor model name")->required();
  cmd->add_option("--refiner", opt.refiner, "Refiner model name (default: executor)");
  cmd->add_flag("--no-learn", opt.no_learn, "Self-plan instead of learned guideline");
  cmd->add_flag("--no-step", opt.no_step, "Render the guideline into one prompt");
  cmd->add_flag("--no-refine", opt.no_refine, "Disable per-step refinement");
  cmd->add_option("--rounds", opt.rounds, "Refinement rounds per step");
  auto* guideline =
      cmd->add_option("--guideline", opt.guideline_path, "Use an existing guideline file");
  if (guideline_required) guideline->required();
  cmd->add_option("--baseline", opt.baseline, "Baseline: cot | few_shot_cot");
  cmd->add_option("--out-dir", opt.out_dir, "Report output directory");
  cmd->add_option("--seed", opt.seed, "Split seed");
  cmd->add_option("--fraction", opt.fraction, "Train fraction");
  cmd->add_flag("--strict", opt.strict, "Abort on the first errored sample");
  cmd->add_flag("--dump-trajectories", opt.dump_trajectories, "Write per-sample trajectory dumps");
  cmd->add_option("--trajectory-dir", opt.trajectory_dir, "Trajectory dump directory");
}

ExperimentConfig to_experiment_config(const EvalOptions& opt, const CliConfig& cli) {
  if (!opt.baseline.empty() && !opt.guideline_path.empty()) {
    throw ConfigError("--baseline cannot be combined with --guideline");
  }
  ExperimentConfig cfg;
  cfg.learn = !opt.no_learn;
  cfg.stepwise = !opt.no_step;
  cfg.refine = !opt.no_refine && opt.rounds > 0;
  cfg.refine_rounds = cfg.refine ? opt.rounds : 0;
  cfg.executor_model = opt.executor;
  cfg.refiner_model = opt.refiner;
  cfg.split_seed = opt.seed;
  cfg.train_fraction = opt.fraction;
  if (!opt.guideline_path.empty()) cfg.guideline_path = opt.guideline_path;
  if (!opt.baseline.empty()) {
    if (opt.baseline == "cot") {
      cfg.baseline = Baseline::cot;
    } else if (opt.baseline == "few_shot_cot") {
      cfg.baseline = Baseline::few_shot_cot;
    } else {
      throw ConfigError("unknown baseline: " + opt.baseline);
    }
  }
  cfg.strict = opt.strict || cli.strict;
  cfg.concurrency = cli.concurrency;
  cfg.dump_trajectories = opt.dump_trajectories;
  cfg.trajectory_dir = opt.trajectory_dir;
  return cfg;
}

int run_eval_like(const EvalOptions& opt, const CommonOptions& common) {
  CliConfig cli = resolve_config(common);
  TemplateLibrary templates = TemplateLibrary::load(cli.template_dir);
  ExperimentConfig cfg = to_experiment_config(opt, cli);
  Dataset dataset = load_dataset(opt.data_path, parse_format(opt.format), opt.task_id);
  auto provider = build_provider(cli, common);

  EvalReport report = run_experiment(cfg, dataset, provider, templates);
  auto written = emit_report({report}, opt.out_dir);
  std::printf("task=%s method=%s", report.task_id.c_str(), report.method.c_str());
  if (report.source_task != report.task_id) {
    std::printf(" transfer=%s->%s", report.source_task.c_str(), report.task_id.c_str());
  }
  std::printf(" accuracy=%.3f\n", report.accuracy);
  std::printf("report: %s\n", written.front().string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guideline-based structured reasoning pipeline"};
  app.require_subcommand(1);

  // learn
  auto* learn_cmd = app.add_subcommand("learn", "Learn a guideline from the train split");
  CommonOptions learn_common;
  std::string learn_data, learn_format = "bbh_json", learn_task, learn_model, learn_out;
  std::string learn_resume;
  std::uint64_t learn_seed = 0;
  double learn_fraction = 0.25;
  int learn_max_steps = 12;
  add_common(learn_cmd, learn_common);
  learn_cmd->add_option("--data", learn_data, "Dataset file")->required();
  learn_cmd->add_option("--format", learn_format, "Dataset format: bbh_json | jsonl_qa");
  learn_cmd->add_option("--task", learn_task, "Task id (default: dataset file stem)");
  learn_cmd->add_option("--model", learn_model, "Model name")->required();
  learn_cmd->add_option("--out", learn_out, "Guideline output path")->required();
  learn_cmd->add_option("--seed", learn_seed, "Split seed");
  learn_cmd->add_option("--fraction", learn_fraction, "Train fraction");
  learn_cmd->add_option("--max-steps", learn_max_steps, "Aggregation step cap");
  learn_cmd->add_option("--resume", learn_resume, "Partial-buffer resume file");

  // eval / transfer
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one configuration");
  CommonOptions eval_common;
  EvalOptions eval_opt;
  add_common(eval_cmd, eval_common);
  add_eval_options(eval_cmd, eval_opt, /*guideline_required=*/false);

  auto* transfer_cmd =
      app.add_subcommand("transfer", "Evaluate with a guideline learned on another task");
  CommonOptions transfer_common;
  EvalOptions transfer_opt;
  add_common(transfer_cmd, transfer_common);
  add_eval_options(transfer_cmd, transfer_opt, /*guideline_required=*/true);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep step count or refinement rounds");
  CommonOptions sweep_common;
  EvalOptions sweep_opt;
  std::string sweep_axis;
  std::vector<int> sweep_values;
  add_common(sweep_cmd, sweep_common);
  add_eval_options(sweep_cmd, sweep_opt, /*guideline_required=*/false);
  sweep_cmd->add_option("--axis", sweep_axis, "step_count | refine_rounds")->required();
  sweep_cmd->add_option("--values", sweep_values, "Values to sweep")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Regenerate a summary from report files");
  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  report_cmd->add_option("--inputs", report_inputs, "report.json files")->required();
  report_cmd->add_option("--out-dir", report_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*learn_cmd) {
      CliConfig cli = resolve_config(learn_common);
      TemplateLibrary templates = TemplateLibrary::load(cli.template_dir);
      Dataset dataset = load_dataset(learn_data, parse_format(learn_format), learn_task);
      auto [train, test] = split(dataset, learn_fraction, learn_seed);
      auto provider = build_provider(cli, learn_common);

      LearnConfig lc;
      lc.model = learn_model;
      lc.max_steps = learn_max_steps;
      lc.dataset_digest = dataset.source_digest;
      lc.concurrency = cli.concurrency;
      if (!learn_resume.empty()) lc.resume_path = learn_resume;
      Guideline guideline = learn_guidelines(train.samples, *provider, templates, lc);
      write_guideline(guideline, learn_out);
      std::printf("learned %zu-step guideline for %s -> %s\n", guideline.steps.size(),
                  guideline.task_id.c_str(), learn_out.c_str());
      return kExitOk;
    }
    if (*eval_cmd) return run_eval_like(eval_opt, eval_common);
    if (*transfer_cmd) return run_eval_like(transfer_opt, transfer_common);
    if (*sweep_cmd) {
      CliConfig cli = resolve_config(sweep_common);
      TemplateLibrary templates = TemplateLibrary::load(cli.template_dir);
      ExperimentConfig cfg = to_experiment_config(sweep_opt, cli);
      Dataset dataset =
          load_dataset(sweep_opt.data_path, parse_format(sweep_opt.format), sweep_opt.task_id);
      auto provider = build_provider(cli, sweep_common);
      SweepAxis axis;
      if (sweep_axis == "step_count") {
        axis = SweepAxis::step_count;
      } else if (sweep_axis == "refine_rounds") {
        axis = SweepAxis::refine_rounds;
      } else {
        throw ConfigError("unknown sweep axis: " + sweep_axis);
      }
      auto reports = sweep(axis, sweep_values, cfg, dataset, provider, templates);
      auto written = emit_report(reports, sweep_opt.out_dir);
      for (const auto& r : reports) {
        const int value = axis == SweepAxis::step_count
                              ? r.config.value("target_steps", 0)
                              : r.config.value("refine_rounds", 0);
        std::printf("%s=%d accuracy=%.3f\n", sweep_axis.c_str(), value, r.accuracy);
      }
      std::printf("summary: %s\n", written.back().string().c_str());
      return kExitOk;
    }
    if (*report_cmd) {
      std::vector<EvalReport> reports;
      for (const auto& path : report_inputs) {
        reports.push_back(report_from_json(json::parse(read_file(path))));
      }
      auto written = emit_report(reports, report_out);
      std::printf("summary: %s\n", written.back().string().c_str());
      return kExitOk;
    }
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitUsage;
  } catch (const VersionError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitUsage;
  } catch (const ParseError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitUsage;
  } catch (const Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitPipeline;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitPipeline;
  }
  return kExitOk;
}
