#include "guided/config.hpp"

#include <cstdlib>

#include "guided/errors.hpp"
#include "guided/store.hpp"

namespace guided {

CliConfig cli_config_from_json(const json& j) {
  CliConfig config;
  if (auto it = j.find("providers"); it != j.end()) {
    for (const auto& [name, entry] : it->items()) {
      ProviderEntry p;
      p.type = entry.value("type", "http");
      p.base_url = entry.value("base_url", "");
      p.model = entry.value("model", name);
      if (p.type != "http" && p.type != "mock") {
        throw ConfigError("provider '" + name + "': unknown type '" + p.type + "'");
      }
      if (p.type == "http" && p.base_url.empty()) {
        throw ConfigError("provider '" + name + "': http provider requires base_url");
      }
      config.providers[name] = std::move(p);
    }
  }
  if (j.contains("cache_dir")) config.cache_dir = j.at("cache_dir").get<std::string>();
  if (j.contains("template_dir")) config.template_dir = j.at("template_dir").get<std::string>();
  config.concurrency = j.value("concurrency", 1);
  config.split_seed = j.value("split_seed", std::uint64_t{0});
  config.strict = j.value("strict", false);
  config.cache_enabled = j.value("cache", true);
  return config;
}

CliConfig load_cli_config(const std::filesystem::path& path) {
  if (path.empty()) {
    CliConfig config;
    config.providers["mock"] = ProviderEntry{"mock", "", "mock"};
    return config;
  }
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw ConfigError("config file " + path.string() + ": " + ex.what());
  }
  CliConfig config = cli_config_from_json(doc);
  if (config.providers.empty()) {
    config.providers["mock"] = ProviderEntry{"mock", "", "mock"};
  }
  return config;
}

void RoutingProvider::add(const std::string& name, std::string target_model,
                          std::shared_ptr<ChatProvider> provider) {
  routes_[name] = Route{std::move(target_model), std::move(provider)};
}

ChatResponse RoutingProvider::complete(const ChatRequest& req) {
  auto it = routes_.find(req.model);
  if (it == routes_.end()) {
    throw ConfigError("model '" + req.model + "' is not configured in the provider table");
  }
  ChatRequest routed = req;
  routed.model = it->second.target_model;
  return it->second.provider->complete(routed);
}

namespace {

bool contains(const std::string& haystack, const char* needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

ChatResponse DemoMockProvider::complete(const ChatRequest& req) {
  std::string text;
  for (const auto& m : req.messages) {
    text += m.content;
    text += '\n';
  }

  ChatResponse resp;
  resp.model = req.model;
  if (contains(text, "Solve the following task step by step")) {
    resp.content =
        "Step 1: Read the task and restate what is asked.\n"
        "Step 2: Work through it directly.\n"
        "<answer>unknown</answer>";
  } else if (contains(text, "Extract the reusable reasoning steps")) {
    resp.content =
        "STEP 1 | Understand the task | Restate what is being asked.\n"
        "STEP 2 | Solve directly | Apply the relevant rule and compute the result.";
  } else if (contains(text, "solved incorrectly")) {
    resp.content =
        "MISTAKE: Jumped to an answer without checking the task constraints.\n"
        "PREVENTION: Re-read the task and verify the answer against every constraint.";
  } else if (contains(text, "Synthesize one step-by-step guideline")) {
    resp.content =
        "STEP 1 | Understand the task\n"
        "EXECUTION: Restate what is being asked.\n"
        "STEP 2 | Solve and verify\n"
        "EXECUTION: Apply the relevant rule, then verify the result.\n"
        "MISTAKE: Jumped to an answer without checking the task constraints.\n"
        "PREVENTION: Re-read the task and verify the answer against every constraint.";
  } else if (contains(text, "one step at a time")) {
    resp.content = "Worked the current step as instructed.";
  } else if (contains(text, "Review the reasoning step")) {
    resp.content = "NO_CHANGE";
  } else if (contains(text, "Integrate the reasoning steps")) {
    resp.content = "<answer>unknown</answer>";
  } else if (contains(text, "Produce a step-by-step plan")) {
    resp.content =
        "STEP 1 | Plan\n"
        "EXECUTION: Sketch the approach.\n"
        "STEP 2 | Execute\n"
        "EXECUTION: Carry out the plan and state the answer.";
  } else {
    resp.content = "<answer>unknown</answer>";
  }
  resp.usage.prompt_tokens = static_cast<std::int64_t>(text.size() / 4);
  resp.usage.completion_tokens = static_cast<std::int64_t>(resp.content.size() / 4);
  return resp;
}

std::shared_ptr<ChatProvider> make_base_provider(const CliConfig& config) {
  auto routing = std::make_shared<RoutingProvider>();
  std::map<std::string, std::shared_ptr<ChatProvider>> http_by_url;
  for (const auto& [name, entry] : config.providers) {
    if (entry.type == "mock") {
      routing->add(name, entry.model, std::make_shared<DemoMockProvider>());
      continue;
    }
    auto it = http_by_url.find(entry.base_url);
    if (it == http_by_url.end()) {
      HttpProviderOptions options;
      options.base_url = entry.base_url;
      options.max_in_flight = config.concurrency;
      if (const char* key = std::getenv("GUIDED_API_KEY")) {
        options.api_key = key;
      }
      it = http_by_url.emplace(entry.base_url,
                               std::make_shared<HttpProvider>(std::move(options))).first;
    }
    routing->add(name, entry.model, it->second);
  }
  return routing;
}

}  // namespace guided
