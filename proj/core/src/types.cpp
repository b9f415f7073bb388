#include "guided/types.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "guided/errors.hpp"

namespace guided {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::multiple_choice: return "multiple_choice";
    case TaskKind::numeric: return "numeric";
    case TaskKind::free_text: return "free_text";
    case TaskKind::code: return "code";
  }
  return "free_text";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "multiple_choice") return TaskKind::multiple_choice;
  if (s == "numeric") return TaskKind::numeric;
  if (s == "free_text") return TaskKind::free_text;
  if (s == "code") return TaskKind::code;
  throw ParseError("unknown task kind: " + s);
}

std::string to_string(ExtractionKind kind) {
  return kind == ExtractionKind::pattern ? "pattern" : "reflection";
}

ExtractionKind extraction_kind_from_string(const std::string& s) {
  if (s == "pattern") return ExtractionKind::pattern;
  if (s == "reflection") return ExtractionKind::reflection;
  throw ParseError("unknown extraction kind: " + s);
}

namespace {

const json& require_field(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw ParseError(where + ": missing field '" + field + "'");
  }
  return *it;
}

std::string require_string(const json& j, const char* field, const std::string& where) {
  const json& v = require_field(j, field, where);
  if (!v.is_string()) {
    throw ParseError(where + ": field '" + field + "' must be a string");
  }
  return v.get<std::string>();
}

int require_int(const json& j, const char* field, const std::string& where) {
  const json& v = require_field(j, field, where);
  if (!v.is_number_integer()) {
    throw ParseError(where + ": field '" + field + "' must be an integer");
  }
  return v.get<int>();
}

std::vector<std::string> string_list(const json& j, const char* field, const std::string& where) {
  const json& v = require_field(j, field, where);
  if (!v.is_array()) {
    throw ParseError(where + ": field '" + field + "' must be an array");
  }
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw ParseError(where + ": field '" + field + "' must contain strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

json to_json(const Sample& s) {
  json j;
  j["id"] = s.id;
  j["task_id"] = s.task_id;
  j["input_text"] = s.input_text;
  j["gold_answer"] = s.gold_answer;
  j["kind"] = to_string(s.kind);
  j["metadata"] = s.metadata;
  return j;
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.id = require_string(j, "id", "sample");
  s.task_id = require_string(j, "task_id", "sample");
  s.input_text = require_string(j, "input_text", "sample");
  s.gold_answer = require_string(j, "gold_answer", "sample");
  s.kind = task_kind_from_string(require_string(j, "kind", "sample"));
  if (auto it = j.find("metadata"); it != j.end()) {
    s.metadata = it->get<std::map<std::string, std::string>>();
  }
  return s;
}

json to_json(const StepRecord& s) {
  json j;
  j["index"] = s.index;
  j["raw_content"] = s.raw_content;
  j["refined_content"] = s.refined_content;
  j["rounds_applied"] = s.rounds_applied;
  return j;
}

StepRecord step_record_from_json(const json& j) {
  StepRecord s;
  s.index = require_int(j, "index", "step");
  s.raw_content = require_string(j, "raw_content", "step");
  s.refined_content = require_string(j, "refined_content", "step");
  s.rounds_applied = require_int(j, "rounds_applied", "step");
  return s;
}

json to_json(const Trajectory& t) {
  json j;
  j["sample_id"] = t.sample_id;
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  j["steps"] = std::move(steps);
  j["final_answer"] = t.final_answer;
  j["executor_model"] = t.executor_model;
  j["refiner_model"] = t.refiner_model;
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.sample_id = require_string(j, "sample_id", "trajectory");
  const json& steps = require_field(j, "steps", "trajectory");
  for (const auto& s : steps) t.steps.push_back(step_record_from_json(s));
  t.final_answer = require_string(j, "final_answer", "trajectory");
  t.executor_model = require_string(j, "executor_model", "trajectory");
  t.refiner_model = require_string(j, "refiner_model", "trajectory");
  return t;
}

json to_json(const GuidelineStep& s) {
  json j;
  j["index"] = s.index;
  j["title"] = s.title;
  j["execution"] = s.execution;
  j["mistakes"] = s.mistakes;
  j["preventions"] = s.preventions;
  return j;
}

GuidelineStep guideline_step_from_json(const json& j) {
  GuidelineStep s;
  s.index = require_int(j, "index", "guideline step");
  const std::string where = "guideline step " + std::to_string(s.index);
  s.title = require_string(j, "title", where);
  s.execution = require_string(j, "execution", where);
  s.mistakes = string_list(j, "mistakes", where);
  s.preventions = string_list(j, "preventions", where);
  return s;
}

json to_json(const Guideline& g) {
  json j;
  j["task_id"] = g.task_id;
  json prov;
  prov["source_model"] = g.provenance.source_model;
  prov["dataset_digest"] = g.provenance.dataset_digest;
  prov["template_version"] = g.provenance.template_version;
  prov["created_at"] = g.provenance.created_at;
  j["provenance"] = std::move(prov);
  json steps = json::array();
  for (const auto& s : g.steps) steps.push_back(to_json(s));
  j["steps"] = std::move(steps);
  return j;
}

Guideline guideline_from_json(const json& j) {
  Guideline g;
  g.task_id = require_string(j, "task_id", "guideline");
  const json& prov = require_field(j, "provenance", "guideline");
  g.provenance.source_model = require_string(prov, "source_model", "provenance");
  g.provenance.dataset_digest = require_string(prov, "dataset_digest", "provenance");
  g.provenance.template_version = require_string(prov, "template_version", "provenance");
  g.provenance.created_at = require_string(prov, "created_at", "provenance");
  const json& steps = require_field(j, "steps", "guideline");
  for (const auto& s : steps) g.steps.push_back(guideline_step_from_json(s));
  return g;
}

json to_json(const ExtractionRecord& r) {
  json j;
  j["sample_id"] = r.sample_id;
  j["kind"] = to_string(r.kind);
  json content = json::array();
  if (r.kind == ExtractionKind::pattern) {
    for (const auto& p : r.pattern_steps) {
      content.push_back(json{{"title", p.title}, {"execution", p.execution}});
    }
  } else {
    for (const auto& m : r.reflections) {
      content.push_back(json{{"mistake", m.mistake}, {"prevention", m.prevention}});
    }
  }
  j["content"] = std::move(content);
  return j;
}

ExtractionRecord extraction_record_from_json(const json& j) {
  ExtractionRecord r;
  r.sample_id = require_string(j, "sample_id", "extraction record");
  r.kind = extraction_kind_from_string(require_string(j, "kind", "extraction record"));
  const json& content = require_field(j, "content", "extraction record");
  for (const auto& item : content) {
    if (r.kind == ExtractionKind::pattern) {
      PatternStep p;
      p.title = require_string(item, "title", "pattern step");
      p.execution = require_string(item, "execution", "pattern step");
      r.pattern_steps.push_back(std::move(p));
    } else {
      Reflection m;
      m.mistake = require_string(item, "mistake", "reflection");
      m.prevention = require_string(item, "prevention", "reflection");
      r.reflections.push_back(std::move(m));
    }
  }
  return r;
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length,
                 EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace guided
