#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "guided/types.hpp"

namespace guided {

// Supported on-disk container version for guidelines and trajectory dumps.
inline constexpr const char* kGuidelineFormatVersion = "1";

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks every Guideline invariant: nonempty steps, indices exactly 1..T,
// nonempty execution text, nonempty preventions. Violations are data, not
// exceptions.
ValidationResult validate_guideline(const Guideline& g);

// Serialize/deserialize the guideline file container:
// {format_version, task_id, provenance{...}, steps:[...]}.
std::string guideline_to_document(const Guideline& g);
Guideline guideline_from_document(const std::string& document);

// Atomic whole-file write (temp + rename). Throws PreconditionError when
// the guideline fails validation.
void write_guideline(const Guideline& g, const std::filesystem::path& destination);
Guideline read_guideline(const std::filesystem::path& source);

// Trajectory dump, same container style.
void write_trajectory(const Trajectory& t, const std::filesystem::path& destination);
Trajectory read_trajectory(const std::filesystem::path& source);

// Atomic text-file write used across the project.
void atomic_write_file(const std::filesystem::path& destination, const std::string& contents);
std::string read_file(const std::filesystem::path& source);

}  // namespace guided
