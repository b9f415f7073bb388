#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace guided {

// One versioned prompt template. Slots are written {slot_name} in the body.
struct PromptTemplate {
  std::string name;
  std::string version;
  std::string body;
};

// The pipeline stages that require a template, and the slots each stage
// guarantees to bind at render time.
const std::vector<std::string>& template_names();
const std::vector<std::string>& required_slots(const std::string& name);

// Versioned template set. Built-in defaults ship with version "v1";
// load() overrides them from files named <name>@<version>.txt.
class TemplateLibrary {
 public:
  static TemplateLibrary builtin();
  static TemplateLibrary load(const std::filesystem::path& directory);

  const PromptTemplate& get(const std::string& name) const;

  // Substitutes every bound slot in one pass; slot values are never
  // rescanned, so they may contain braces. Throws ParseError when a slot
  // in the body has no binding.
  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& slots) const;

  // Combined version string recorded into guideline provenance.
  std::string version() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace guided
