#include "guided/grading.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

namespace guided {

namespace {

CodeGrader g_code_grader;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Strips parentheses, brackets, periods and whitespace around an option
// letter, so "(J)", "J.", " j " all normalize to "j".
std::string normalize_choice(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isspace(c) || c == '(' || c == ')' || c == '[' || c == ']' || c == '.') {
      continue;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::optional<double> parse_rational(const std::string& raw) {
  std::string cleaned;
  for (unsigned char c : raw) {
    if (c == ',' || std::isspace(c)) continue;
    cleaned.push_back(static_cast<char>(c));
  }
  if (cleaned.empty()) return std::nullopt;
  auto slash = cleaned.find('/');
  if (slash != std::string::npos) {
    std::string num = cleaned.substr(0, slash);
    std::string den = cleaned.substr(slash + 1);
    double n = 0.0, d = 0.0;
    auto [np, nec] = std::from_chars(num.data(), num.data() + num.size(), n);
    auto [dp, dec] = std::from_chars(den.data(), den.data() + den.size(), d);
    if (nec != std::errc{} || dec != std::errc{} || np != num.data() + num.size() ||
        dp != den.data() + den.size() || d == 0.0) {
      return std::nullopt;
    }
    return n / d;
  }
  double value = 0.0;
  auto [p, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
  if (ec != std::errc{} || p != cleaned.data() + cleaned.size()) return std::nullopt;
  return value;
}

}  // namespace

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string extract_answer(const std::string& text) {
  static const std::string open = "<answer>";
  static const std::string close = "</answer>";
  std::size_t best_start = std::string::npos;
  std::size_t best_len = 0;
  std::size_t pos = 0;
  while (true) {
    std::size_t start = text.find(open, pos);
    if (start == std::string::npos) break;
    std::size_t end = text.find(close, start + open.size());
    if (end == std::string::npos) break;
    best_start = start + open.size();
    best_len = end - best_start;
    pos = end + close.size();
  }
  if (best_start == std::string::npos) return "";
  return trim(text.substr(best_start, best_len));
}

void set_code_grader(CodeGrader grader) { g_code_grader = std::move(grader); }

bool grade(const std::string& predicted, const std::string& gold, TaskKind kind) {
  switch (kind) {
    case TaskKind::multiple_choice:
      return !normalize_choice(predicted).empty() &&
             normalize_choice(predicted) == normalize_choice(gold);
    case TaskKind::numeric: {
      auto p = parse_rational(predicted);
      auto g = parse_rational(gold);
      if (!p || !g) return false;
      return std::fabs(*p - *g) <= 1e-9;
    }
    case TaskKind::free_text:
      return !trim(predicted).empty() && lower(trim(predicted)) == lower(trim(gold));
    case TaskKind::code:
      if (g_code_grader) return g_code_grader(predicted, gold);
      std::fprintf(stderr, "warning: no code grader configured, grading as incorrect\n");
      return false;
  }
  return false;
}

}  // namespace guided
