#pragma once

#include <functional>
#include <string>

#include "guided/types.hpp"

namespace guided {

// Content of the last well-formed <answer>...</answer> span, trimmed.
// Empty string when no tag is present.
std::string extract_answer(const std::string& text);

// Pluggable grader for kind=code; the default build ships no execution
// sandbox and grades code as ungradable (false).
using CodeGrader = std::function<bool(const std::string& predicted, const std::string& gold)>;

void set_code_grader(CodeGrader grader);

// Normalizing comparison per task kind:
//   multiple_choice  option letters, parentheses/case stripped
//   numeric          rationals within 1e-9, commas/spaces stripped
//   free_text        case-insensitive trimmed equality
//   code             delegated to the pluggable grader
// Ungradable values are false, never an error.
bool grade(const std::string& predicted, const std::string& gold, TaskKind kind);

std::string trim(const std::string& s);

}  // namespace guided
