#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "guided/types.hpp"

namespace guided {

enum class Role { system, user, assistant };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::vector<std::string>> stop;

  bool operator==(const ChatRequest&) const = default;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  bool operator==(const Usage&) const = default;
};

struct ChatResponse {
  std::string content;
  std::string model;
  Usage usage;
  bool cached = false;
};

struct CacheKey {
  std::string digest;

  bool operator==(const CacheKey&) const = default;
  auto operator<=>(const CacheKey&) const = default;
};

// Canonical serialization of a request: fields in fixed order, message
// content whitespace-normalized, so semantically equal requests collide.
std::string canonical_request(const ChatRequest& req);
CacheKey cache_key(const ChatRequest& req);

json chat_request_to_json(const ChatRequest& req);
ChatRequest chat_request_from_json(const json& j);
json chat_response_to_json(const ChatResponse& resp);
ChatResponse chat_response_from_json(const json& j);

// Uniform chat-completion access point.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

// Deterministic mock. Rules are matched in insertion order against the
// concatenated message contents; an empty needle matches any request.
// Throws ScriptExhaustedError when nothing matches.
class ScriptedProvider : public ChatProvider {
 public:
  // Sticky rule: answers every request containing `needle`.
  void reply(std::string needle, std::string text);
  // One-shot rule, consumed on first match.
  void reply_once(std::string needle, std::string text);
  // Sticky fallback for requests no other rule matches.
  void default_reply(std::string text);
  // One-shot fallback, consumed in FIFO order.
  void push_default(std::string text);

  ChatResponse complete(const ChatRequest& req) override;

  std::vector<ChatRequest> call_log() const;
  std::size_t call_count() const;
  void clear_log();

 private:
  struct Rule {
    std::string needle;
    std::string text;
    bool once = false;
    bool used = false;
  };
  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  std::vector<Rule> fallbacks_;
  std::vector<ChatRequest> log_;
};

// Content-addressed response cache, one file per CacheKey digest holding
// the canonical request and the response.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<ChatResponse> lookup(const CacheKey& key) const;
  void store(const CacheKey& key, const ChatRequest& req, const ChatResponse& resp);

  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path directory_;
  mutable std::mutex write_mutex_;
};

// Wraps a provider with the response cache. Hits come back with
// cached=true and never touch the inner provider.
class CachingProvider : public ChatProvider {
 public:
  CachingProvider(std::shared_ptr<ChatProvider> inner, std::shared_ptr<ResponseCache> cache);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

// Records every exchange that flows through it to a tape file.
class RecordingProvider : public ChatProvider {
 public:
  RecordingProvider(std::shared_ptr<ChatProvider> inner, std::filesystem::path tape_path);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  void flush_locked();

  std::shared_ptr<ChatProvider> inner_;
  std::filesystem::path tape_path_;
  std::mutex mutex_;
  std::vector<std::pair<ChatRequest, ChatResponse>> exchanges_;
};

// Serves recorded responses keyed by CacheKey; a request with no recorded
// answer raises ScriptExhaustedError naming the unmatched request.
class ReplayProvider : public ChatProvider {
 public:
  explicit ReplayProvider(const std::filesystem::path& tape_path);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  std::map<CacheKey, ChatResponse> responses_;
};

// Per-sample call accounting: forwards to the shared provider and bumps a
// caller-owned counter.
class CountingProvider : public ChatProvider {
 public:
  CountingProvider(std::shared_ptr<ChatProvider> inner, std::atomic<std::int64_t>& counter)
      : inner_(std::move(inner)), counter_(counter) {}
  ChatResponse complete(const ChatRequest& req) override {
    ++counter_;
    return inner_->complete(req);
  }

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::atomic<std::int64_t>& counter_;
};

struct HttpProviderOptions {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  int max_retries = 3;
  int timeout_seconds = 120;
  int max_in_flight = 8;
};

// Live chat-completions client (POST {base_url}/chat/completions).
// Transport failures and 429/5xx are retried with exponential backoff up
// to max_retries; provider error payloads surface as ProviderError.
class HttpProvider : public ChatProvider {
 public:
  explicit HttpProvider(HttpProviderOptions options);
  ~HttpProvider() override;
  ChatResponse complete(const ChatRequest& req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guided
