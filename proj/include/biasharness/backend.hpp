#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasharness/error.hpp"
#include "biasharness/prompting.hpp"

namespace biasharness {

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;

  // Throws ValidationError: empty message list or unknown role.
  void validate() const;
  // Wire body: {"model", "messages":[{"role","content"}], "temperature"}.
  std::string to_json() const;
};

// sha256 over the canonical wire body; equal requests give equal keys.
std::string cache_key(const ChatRequest& req);

// sha256 of the last user message content; the key a keyed mock matches on.
std::string user_message_digest(const ChatRequest& req);

struct Completion {
  std::string text;
  std::string model;
  std::chrono::milliseconds latency{0};
  bool from_cache = false;
  int retries = 0;
};

enum class BackendErrorKind {
  Authentication,     // 401/403, never retried
  RateLimited,        // 429 still returned after the last attempt
  Server,             // 5xx after the last attempt
  Timeout,
  Transport,          // connection refused, reset, ...
  MalformedResponse,  // 200 without choices[0].message.content
  BadRequest,         // other 4xx
  ScriptExhausted,    // mock backend ran out of responses
};

std::string_view backend_error_name(BackendErrorKind k);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  BackendErrorKind kind() const { return kind_; }

 private:
  BackendErrorKind kind_;
};

using LogSink = std::function<void(std::string_view)>;

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const ChatRequest& req) = 0;
  // Number of requests that reached the backend (cache hits excluded).
  virtual std::size_t call_count() const = 0;
  virtual std::string describe() const = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  double jitter = 0.25;  // fraction of the delay added at random
};

struct EndpointConfig {
  std::string base_url;  // requests go to <base_url>/chat/completions
  std::string api_key_env = "BIASHARNESS_API_KEY";
  std::string model;
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
};

// Chat-completions client. Safe to call from several threads; each call
// opens its own connection.
class HttpBackend : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(EndpointConfig config, LogSink log = {}, Sleeper sleeper = {});

  Completion complete(const ChatRequest& req) override;
  std::size_t call_count() const override { return calls_.load(); }
  std::string describe() const override { return "http:" + config_.base_url; }

 private:
  EndpointConfig config_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_;
  LogSink log_;
  Sleeper sleeper_;
  std::atomic<std::size_t> calls_{0};
};

// Deterministic scripted backend. Ordered mode replays responses in call
// order; keyed mode looks up user_message_digest(req), then falls back to
// entries whose text is a suffix of the user message.
class MockBackend : public ChatBackend {
 public:
  // Throws ConfigError on an empty script.
  static MockBackend ordered(std::vector<std::string> responses);
  static MockBackend keyed(std::map<std::string, std::string> by_digest);

  // {"ordered": ["...", ...]} or
  // {"keyed": [{"digest"|"text": "...", "response": "..."}], "default": "..."}
  static MockBackend from_json(std::string_view script);

  MockBackend(const MockBackend& other);

  void add_text_entry(std::string text, std::string response);
  void set_default(std::string response) { default_ = std::move(response); }

  Completion complete(const ChatRequest& req) override;
  std::size_t call_count() const override;
  std::string describe() const override { return keyed_mode_ ? "mock:keyed" : "mock:ordered"; }

 private:
  MockBackend() = default;

  bool keyed_mode_ = false;
  std::vector<std::string> ordered_;
  std::size_t next_ = 0;
  std::map<std::string, std::string> by_digest_;
  std::vector<std::pair<std::string, std::string>> by_suffix_;
  std::optional<std::string> default_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// Content-addressed completion store: <dir>/<cache_key>.json holding the key,
// the full request, the response text and a timestamp. Inserts write a temp
// file and rename it into place.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path entry_path(const ChatRequest& req) const;

  // Throws IoError on unreadable or corrupt entries; nullopt on a miss.
  std::optional<Completion> lookup(const ChatRequest& req) const;
  void store(const ChatRequest& req, const Completion& c) const;

 private:
  std::filesystem::path dir_;
};

// Cache I/O failures are logged and degrade to an uncached call.
Completion cached_complete(const ChatRequest& req, ChatBackend& backend, const ResponseCache* cache,
                           const LogSink& log = {});

}  // namespace biasharness
