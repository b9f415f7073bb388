#include "guided/provider.hpp"

#include <cctype>
#include <chrono>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "guided/errors.hpp"
#include "guided/store.hpp"

namespace guided {

std::string to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(const std::string& s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw ParseError("unknown role: " + s);
}

namespace {

std::string normalize_whitespace(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::string request_text(const ChatRequest& req) {
  std::string text;
  for (const auto& m : req.messages) {
    text += m.content;
    text += '\n';
  }
  return text;
}

std::string summarize(const ChatRequest& req) {
  std::string text = normalize_whitespace(request_text(req));
  if (text.size() > 160) text = text.substr(0, 160) + "...";
  return "model=" + req.model + " \"" + text + "\"";
}

constexpr const char* kTapeFormatVersion = "1";

}  // namespace

std::string canonical_request(const ChatRequest& req) {
  json j;
  j["model"] = req.model;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens;
  if (req.stop) {
    j["stop"] = *req.stop;
  } else {
    j["stop"] = nullptr;
  }
  json messages = json::array();
  for (const auto& m : req.messages) {
    json msg;
    msg["role"] = to_string(m.role);
    msg["content"] = normalize_whitespace(m.content);
    messages.push_back(std::move(msg));
  }
  j["messages"] = std::move(messages);
  return j.dump();
}

CacheKey cache_key(const ChatRequest& req) {
  return CacheKey{sha256_hex(canonical_request(req))};
}

json chat_request_to_json(const ChatRequest& req) {
  json j;
  j["model"] = req.model;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens;
  if (req.stop) j["stop"] = *req.stop;
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back(json{{"role", to_string(m.role)}, {"content", m.content}});
  }
  j["messages"] = std::move(messages);
  return j;
}

ChatRequest chat_request_from_json(const json& j) {
  ChatRequest req;
  req.model = j.at("model").get<std::string>();
  req.temperature = j.value("temperature", 0.0);
  req.max_tokens = j.value("max_tokens", 2048);
  if (j.contains("stop") && !j.at("stop").is_null()) {
    req.stop = j.at("stop").get<std::vector<std::string>>();
  }
  for (const auto& m : j.at("messages")) {
    req.messages.push_back(ChatMessage{role_from_string(m.at("role").get<std::string>()),
                                       m.at("content").get<std::string>()});
  }
  return req;
}

json chat_response_to_json(const ChatResponse& resp) {
  json j;
  j["content"] = resp.content;
  j["model"] = resp.model;
  j["usage"] = json{{"prompt_tokens", resp.usage.prompt_tokens},
                    {"completion_tokens", resp.usage.completion_tokens}};
  j["cached"] = resp.cached;
  return j;
}

ChatResponse chat_response_from_json(const json& j) {
  ChatResponse resp;
  resp.content = j.at("content").get<std::string>();
  resp.model = j.value("model", "");
  if (j.contains("usage")) {
    resp.usage.prompt_tokens = j.at("usage").value("prompt_tokens", std::int64_t{0});
    resp.usage.completion_tokens = j.at("usage").value("completion_tokens", std::int64_t{0});
  }
  resp.cached = j.value("cached", false);
  return resp;
}

// ---- ScriptedProvider -----------------------------------------------------

void ScriptedProvider::reply(std::string needle, std::string text) {
  std::lock_guard lock(mutex_);
  rules_.push_back(Rule{std::move(needle), std::move(text), false, false});
}

void ScriptedProvider::reply_once(std::string needle, std::string text) {
  std::lock_guard lock(mutex_);
  rules_.push_back(Rule{std::move(needle), std::move(text), true, false});
}

void ScriptedProvider::default_reply(std::string text) {
  std::lock_guard lock(mutex_);
  fallbacks_.push_back(Rule{"", std::move(text), false, false});
}

void ScriptedProvider::push_default(std::string text) {
  std::lock_guard lock(mutex_);
  fallbacks_.push_back(Rule{"", std::move(text), true, false});
}

ChatResponse ScriptedProvider::complete(const ChatRequest& req) {
  std::lock_guard lock(mutex_);
  log_.push_back(req);
  const std::string text = request_text(req);
  auto answer = [&](Rule& rule) {
    if (rule.once) rule.used = true;
    ChatResponse resp;
    resp.content = rule.text;
    resp.model = req.model;
    resp.usage.prompt_tokens = static_cast<std::int64_t>(text.size() / 4);
    resp.usage.completion_tokens = static_cast<std::int64_t>(rule.text.size() / 4);
    return resp;
  };
  for (auto& rule : rules_) {
    if (rule.used) continue;
    if (text.find(rule.needle) != std::string::npos) return answer(rule);
  }
  for (auto& rule : fallbacks_) {
    if (rule.used) continue;
    return answer(rule);
  }
  throw ScriptExhaustedError("no scripted reply for request: " + summarize(req));
}

std::vector<ChatRequest> ScriptedProvider::call_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t ScriptedProvider::call_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

void ScriptedProvider::clear_log() {
  std::lock_guard lock(mutex_);
  log_.clear();
}

// ---- ResponseCache --------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::optional<ChatResponse> ResponseCache::lookup(const CacheKey& key) const {
  std::filesystem::path file = directory_ / (key.digest + ".json");
  if (!std::filesystem::exists(file)) return std::nullopt;
  json doc = json::parse(read_file(file));
  return chat_response_from_json(doc.at("response"));
}

void ResponseCache::store(const CacheKey& key, const ChatRequest& req,
                          const ChatResponse& resp) {
  std::lock_guard lock(write_mutex_);
  std::filesystem::path file = directory_ / (key.digest + ".json");
  if (std::filesystem::exists(file)) return;  // at most one insert per key
  json doc;
  doc["canonical_request"] = json::parse(canonical_request(req));
  doc["response"] = chat_response_to_json(resp);
  atomic_write_file(file, doc.dump(2) + "\n");
}

// ---- CachingProvider ------------------------------------------------------

CachingProvider::CachingProvider(std::shared_ptr<ChatProvider> inner,
                                 std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

ChatResponse CachingProvider::complete(const ChatRequest& req) {
  const CacheKey key = cache_key(req);
  if (auto hit = cache_->lookup(key)) {
    hit->cached = true;
    return *hit;
  }
  ChatResponse resp = inner_->complete(req);
  resp.cached = false;
  cache_->store(key, req, resp);
  return resp;
}

// ---- RecordingProvider ----------------------------------------------------

RecordingProvider::RecordingProvider(std::shared_ptr<ChatProvider> inner,
                                     std::filesystem::path tape_path)
    : inner_(std::move(inner)), tape_path_(std::move(tape_path)) {}

ChatResponse RecordingProvider::complete(const ChatRequest& req) {
  ChatResponse resp = inner_->complete(req);
  std::lock_guard lock(mutex_);
  exchanges_.emplace_back(req, resp);
  flush_locked();
  return resp;
}

void RecordingProvider::flush_locked() {
  json doc;
  doc["format_version"] = kTapeFormatVersion;
  json exchanges = json::array();
  for (const auto& [req, resp] : exchanges_) {
    json e;
    e["key"] = cache_key(req).digest;
    e["request"] = chat_request_to_json(req);
    e["response"] = chat_response_to_json(resp);
    exchanges.push_back(std::move(e));
  }
  doc["exchanges"] = std::move(exchanges);
  atomic_write_file(tape_path_, doc.dump(2) + "\n");
}

// ---- ReplayProvider -------------------------------------------------------

ReplayProvider::ReplayProvider(const std::filesystem::path& tape_path) {
  json doc;
  try {
    doc = json::parse(read_file(tape_path));
  } catch (const json::exception& ex) {
    throw ParseError(std::string("tape is not valid JSON: ") + ex.what());
  }
  if (doc.value("format_version", "") != kTapeFormatVersion) {
    throw VersionError("unsupported tape format version");
  }
  for (const auto& e : doc.at("exchanges")) {
    ChatRequest req = chat_request_from_json(e.at("request"));
    ChatResponse resp = chat_response_from_json(e.at("response"));
    responses_[cache_key(req)] = resp;
  }
}

ChatResponse ReplayProvider::complete(const ChatRequest& req) {
  auto it = responses_.find(cache_key(req));
  if (it == responses_.end()) {
    throw ScriptExhaustedError("tape has no response for request: " + summarize(req));
  }
  return it->second;
}

// ---- HttpProvider ---------------------------------------------------------

struct HttpProvider::Impl {
  explicit Impl(HttpProviderOptions opts)
      : options(std::move(opts)),
        in_flight(options.max_in_flight > 0 ? options.max_in_flight : 1) {
    auto pos = options.base_url.find("://");
    std::string rest = pos == std::string::npos ? options.base_url
                                                : options.base_url.substr(pos + 3);
    auto slash = rest.find('/');
    host = options.base_url.substr(0, pos == std::string::npos ? 0 : pos + 3) +
           (slash == std::string::npos ? rest : rest.substr(0, slash));
    path_prefix = slash == std::string::npos ? "" : rest.substr(slash);
    while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
  }

  HttpProviderOptions options;
  std::string host;
  std::string path_prefix;
  std::counting_semaphore<> in_flight;
};

HttpProvider::HttpProvider(HttpProviderOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  if (impl_->options.base_url.empty()) {
    throw ConfigError("HttpProvider requires a base URL");
  }
}

HttpProvider::~HttpProvider() = default;

ChatResponse HttpProvider::complete(const ChatRequest& req) {
  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{impl_->in_flight};

  json body = chat_request_to_json(req);
  const std::string payload = body.dump();
  const std::string path = impl_->path_prefix + "/chat/completions";

  std::string last_error;
  for (int attempt = 0; attempt <= impl_->options.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(250 << (attempt - 1)));
    }
    httplib::Client client(impl_->host);
    client.set_read_timeout(impl_->options.timeout_seconds, 0);
    client.set_connection_timeout(10, 0);
    httplib::Headers headers;
    if (!impl_->options.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + impl_->options.api_key);
    }
    auto result = client.Post(path, headers, payload, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    json doc;
    try {
      doc = json::parse(result->body);
    } catch (const json::exception& ex) {
      throw ProviderError(std::string("unparseable provider response: ") + ex.what());
    }
    if (result->status >= 400) {
      std::string message = "HTTP " + std::to_string(result->status);
      if (doc.contains("error") && doc["error"].is_object()) {
        message += ": " + doc["error"].value("message", "");
      }
      throw ProviderError(message);
    }
    ChatResponse resp;
    resp.model = doc.value("model", req.model);
    if (doc.contains("choices") && !doc["choices"].empty()) {
      const auto& choice = doc["choices"].front();
      if (choice.contains("message")) {
        resp.content = choice["message"].value("content", "");
      }
    }
    if (doc.contains("usage")) {
      resp.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
      resp.usage.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
    }
    return resp;
  }
  throw TransportError("provider unreachable after " +
                       std::to_string(impl_->options.max_retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace guided
