#include "guided/store.hpp"

#include <fstream>
#include <sstream>

#include "guided/errors.hpp"

namespace guided {

ValidationResult validate_guideline(const Guideline& g) {
  ValidationResult result;
  auto violation = [&](std::string message) {
    result.ok = false;
    result.violations.push_back(std::move(message));
  };

  if (g.task_id.empty()) {
    violation("task_id is empty");
  }
  if (g.steps.empty()) {
    violation("empty guideline");
    return result;
  }
  for (std::size_t i = 0; i < g.steps.size(); ++i) {
    const GuidelineStep& step = g.steps[i];
    const int expected = static_cast<int>(i) + 1;
    if (step.index != expected) {
      violation("index gap at " + std::to_string(expected) +
                " (found " + std::to_string(step.index) + ")");
    }
    if (step.execution.empty()) {
      violation("step " + std::to_string(step.index) + ": empty execution");
    }
    for (const auto& prevention : step.preventions) {
      if (prevention.empty()) {
        violation("step " + std::to_string(step.index) + ": empty prevention");
      }
    }
  }
  return result;
}

std::string guideline_to_document(const Guideline& g) {
  json doc;
  doc["format_version"] = kGuidelineFormatVersion;
  json body = to_json(g);
  doc["task_id"] = body["task_id"];
  doc["provenance"] = body["provenance"];
  doc["steps"] = body["steps"];
  return doc.dump(2) + "\n";
}

Guideline guideline_from_document(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& ex) {
    throw ParseError(std::string("guideline document is not valid JSON: ") + ex.what());
  }
  auto version = doc.find("format_version");
  if (version == doc.end() || !version->is_string()) {
    throw ParseError("guideline document: missing field 'format_version'");
  }
  if (version->get<std::string>() != kGuidelineFormatVersion) {
    throw VersionError("unsupported guideline format version: " +
                       version->get<std::string>());
  }
  return guideline_from_json(doc);
}

void write_guideline(const Guideline& g, const std::filesystem::path& destination) {
  ValidationResult check = validate_guideline(g);
  if (!check.ok) {
    std::ostringstream message;
    message << "refusing to write invalid guideline:";
    for (const auto& v : check.violations) message << " " << v << ";";
    throw PreconditionError(message.str());
  }
  atomic_write_file(destination, guideline_to_document(g));
}

Guideline read_guideline(const std::filesystem::path& source) {
  return guideline_from_document(read_file(source));
}

void write_trajectory(const Trajectory& t, const std::filesystem::path& destination) {
  json doc;
  doc["format_version"] = kGuidelineFormatVersion;
  json body = to_json(t);
  for (auto& [key, value] : body.items()) doc[key] = value;
  atomic_write_file(destination, doc.dump(2) + "\n");
}

Trajectory read_trajectory(const std::filesystem::path& source) {
  json doc;
  try {
    doc = json::parse(read_file(source));
  } catch (const json::exception& ex) {
    throw ParseError(std::string("trajectory document is not valid JSON: ") + ex.what());
  }
  auto version = doc.find("format_version");
  if (version == doc.end() || version->get<std::string>() != kGuidelineFormatVersion) {
    throw VersionError("unsupported trajectory format version");
  }
  return trajectory_from_json(doc);
}

void atomic_write_file(const std::filesystem::path& destination, const std::string& contents) {
  std::filesystem::path parent = destination.parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::filesystem::path temp = destination;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot open for writing: " + temp.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw Error("write failed: " + temp.string());
    }
  }
  std::filesystem::rename(temp, destination);
}

std::string read_file(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) {
    throw Error("cannot open: " + source.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace guided
