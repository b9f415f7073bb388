#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "guided/harness.hpp"
#include "guided/store.hpp"

namespace guided {

json report_to_json(const EvalReport& report) {
  json j;
  j["schema_version"] = report.schema_version;
  j["task_id"] = report.task_id;
  j["source_task"] = report.source_task;
  j["method"] = report.method;
  j["config"] = report.config;
  json per_sample = json::array();
  for (const auto& o : report.per_sample) {
    json s;
    s["sample_id"] = o.sample_id;
    s["predicted"] = o.predicted;
    s["gold"] = o.gold;
    s["correct"] = o.correct;
    s["provider_calls"] = o.provider_calls;
    s["errored"] = o.errored;
    if (o.errored) s["error"] = o.error;
    per_sample.push_back(std::move(s));
  }
  j["per_sample"] = std::move(per_sample);
  j["accuracy"] = report.accuracy;
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport report;
  report.schema_version = j.at("schema_version").get<std::string>();
  report.task_id = j.at("task_id").get<std::string>();
  report.source_task = j.at("source_task").get<std::string>();
  report.method = j.at("method").get<std::string>();
  report.config = j.at("config");
  for (const auto& s : j.at("per_sample")) {
    SampleOutcome o;
    o.sample_id = s.at("sample_id").get<std::string>();
    o.predicted = s.at("predicted").get<std::string>();
    o.gold = s.at("gold").get<std::string>();
    o.correct = s.at("correct").get<bool>();
    o.provider_calls = s.at("provider_calls").get<std::int64_t>();
    o.errored = s.value("errored", false);
    o.error = s.value("error", "");
    report.per_sample.push_back(std::move(o));
  }
  report.accuracy = j.at("accuracy").get<double>();
  return report;
}

std::string report_run_id(const EvalReport& report) {
  json material;
  material["schema_version"] = report.schema_version;
  material["config"] = report.config;
  return sha256_hex(material.dump()).substr(0, 16);
}

namespace {

std::string format_accuracy(double accuracy) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << accuracy;
  return out.str();
}

std::string render_summary(const std::vector<EvalReport>& reports) {
  // one row per method, one column per task, plus Avg
  std::vector<std::string> tasks;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const auto& r : reports) {
    std::string method = r.method;
    if (r.source_task != r.task_id) {
      method += " (" + r.source_task + "->" + r.task_id + ")";
    }
    if (std::find(tasks.begin(), tasks.end(), r.task_id) == tasks.end()) {
      tasks.push_back(r.task_id);
    }
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) {
      methods.push_back(method);
    }
    cells[{method, r.task_id}] = r.accuracy;
  }

  std::ostringstream out;
  out << "# Summary\n\n";
  out << "| Method |";
  for (const auto& t : tasks) out << " " << t << " |";
  out << " Avg |\n";
  out << "|---|";
  for (std::size_t i = 0; i < tasks.size(); ++i) out << "---|";
  out << "---|\n";
  for (const auto& m : methods) {
    out << "| " << m << " |";
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : tasks) {
      auto it = cells.find({m, t});
      if (it == cells.end()) {
        out << " - |";
      } else {
        out << " " << format_accuracy(it->second) << " |";
        sum += it->second;
        ++count;
      }
    }
    out << " " << format_accuracy(count == 0 ? 0.0 : sum / static_cast<double>(count))
        << " |\n";
  }
  return out.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const std::vector<EvalReport>& reports,
                                               const std::filesystem::path& out_dir) {
  for (const auto& r : reports) {
    if (r.schema_version != reports.front().schema_version) {
      throw Error("cannot emit reports with mismatched schema versions");
    }
  }
  std::vector<std::filesystem::path> written;
  for (const auto& r : reports) {
    std::filesystem::path file = out_dir / "runs" / report_run_id(r) / "report.json";
    atomic_write_file(file, report_to_json(r).dump(2) + "\n");
    written.push_back(file);
  }
  std::filesystem::path summary = out_dir / "summary.md";
  atomic_write_file(summary, render_summary(reports));
  written.push_back(summary);
  return written;
}

}  // namespace guided
