#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "guided/provider.hpp"

namespace guided {

// One entry of the provider table: either a live chat-completions endpoint
// or the built-in deterministic mock.
struct ProviderEntry {
  std::string type;      // "http" | "mock"
  std::string base_url;  // http only
  std::string model;     // provider-side model id; defaults to the entry name
};

struct CliConfig {
  std::map<std::string, ProviderEntry> providers;
  std::filesystem::path cache_dir = ".guided-cache";
  std::filesystem::path template_dir = "templates";
  int concurrency = 1;
  std::uint64_t split_seed = 0;
  bool strict = false;
  bool cache_enabled = true;
};

CliConfig cli_config_from_json(const json& j);

// Loads the config file; an empty path yields the built-in default table
// (just the "mock" provider).
CliConfig load_cli_config(const std::filesystem::path& path);

// Routes requests by model name through the provider table, rewriting the
// model alias to the provider-side id. An unknown model is a ConfigError.
class RoutingProvider : public ChatProvider {
 public:
  void add(const std::string& name, std::string target_model,
           std::shared_ptr<ChatProvider> provider);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  struct Route {
    std::string target_model;
    std::shared_ptr<ChatProvider> provider;
  };
  std::map<std::string, Route> routes_;
};

// Deterministic offline mock: answers each pipeline stage with minimal
// well-formed content, so full learn/eval runs complete without a network.
class DemoMockProvider : public ChatProvider {
 public:
  ChatResponse complete(const ChatRequest& req) override;
};

// Builds the routed base provider from the config table. The credential
// for http entries comes from the GUIDED_API_KEY environment variable.
std::shared_ptr<ChatProvider> make_base_provider(const CliConfig& config);

}  // namespace guided
