#include "biasharness/backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "text_util.hpp"

namespace biasharness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view backend_error_name(BackendErrorKind k) {
  switch (k) {
    case BackendErrorKind::Authentication: return "authentication";
    case BackendErrorKind::RateLimited: return "rate_limited";
    case BackendErrorKind::Server: return "server";
    case BackendErrorKind::Timeout: return "timeout";
    case BackendErrorKind::Transport: return "transport";
    case BackendErrorKind::MalformedResponse: return "malformed_response";
    case BackendErrorKind::BadRequest: return "bad_request";
    case BackendErrorKind::ScriptExhausted: return "script_exhausted";
  }
  return "?";
}

void ChatRequest::validate() const {
  if (messages.empty()) throw ValidationError("chat request has no messages");
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw ValidationError("invalid message role '" + m.role + "'");
    }
  }
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
}

std::string ChatRequest::to_json() const {
  ordered_json body;
  body["model"] = model;
  body["messages"] = ordered_json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  body["temperature"] = temperature;
  return body.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::string cache_key(const ChatRequest& req) { return text::sha256_hex(req.to_json()); }

std::string user_message_digest(const ChatRequest& req) {
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    if (it->role == "user") return text::sha256_hex(it->content);
  }
  return text::sha256_hex("");
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(EndpointConfig config, LogSink log, Sleeper sleeper)
    : config_(std::move(config)), log_(std::move(log)), sleeper_(std::move(sleeper)) {
  if (config_.base_url.empty()) throw ConfigError("endpoint base URL is empty");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;

  auto url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = (path_start == std::string::npos ? std::string() : url.substr(path_start)) + "/chat/completions";
}

Completion HttpBackend::complete(const ChatRequest& req) {
  req.validate();
  const auto body = req.to_json();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::mt19937_64 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int attempts = std::max(1, config_.retry.max_attempts);
  const auto started = std::chrono::steady_clock::now();

  BackendErrorKind last_kind = BackendErrorKind::Transport;
  std::string last_msg;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      double delay = static_cast<double>(config_.retry.base_delay.count()) *
                     std::pow(config_.retry.factor, attempt - 1);
      delay *= 1.0 + config_.retry.jitter * unit(jitter_rng);
      if (log_) {
        log_("retry " + std::to_string(attempt) + "/" + std::to_string(attempts - 1) + " after " +
             std::string(backend_error_name(last_kind)) + ": " + last_msg);
      }
      sleeper_(std::chrono::milliseconds(static_cast<long long>(delay)));
    }

    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    ++calls_;
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      last_kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                      ? BackendErrorKind::Timeout
                      : BackendErrorKind::Transport;
      last_msg = httplib::to_string(err);
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw BackendError(BackendErrorKind::Authentication,
                         "authentication failed (HTTP " + std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500 || status == 408) {
      last_kind = status == 429   ? BackendErrorKind::RateLimited
                  : status == 408 ? BackendErrorKind::Timeout
                                  : BackendErrorKind::Server;
      last_msg = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw BackendError(BackendErrorKind::BadRequest,
                         "endpoint rejected request (HTTP " + std::to_string(status) + "): " + res->body);
    }

    Completion c;
    try {
      auto doc = nlohmann::json::parse(res->body);
      const auto& content = doc.at("choices").at(0).at("message").at("content");
      c.text = content.is_null() ? std::string() : content.get<std::string>();
      c.model = doc.value("model", req.model);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(BackendErrorKind::MalformedResponse,
                         std::string("malformed endpoint response: ") + e.what());
    }
    c.retries = attempt;
    c.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    if (attempt > 0 && log_) log_("succeeded after " + std::to_string(attempt) + " retries");
    return c;
  }
  throw BackendError(last_kind, std::string(backend_error_name(last_kind)) + " after " +
                                    std::to_string(attempts) + " attempts: " + last_msg);
}

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(const MockBackend& other) {
  std::lock_guard lock(other.mu_);
  keyed_mode_ = other.keyed_mode_;
  ordered_ = other.ordered_;
  next_ = other.next_;
  by_digest_ = other.by_digest_;
  by_suffix_ = other.by_suffix_;
  default_ = other.default_;
  calls_ = other.calls_;
}

MockBackend MockBackend::ordered(std::vector<std::string> responses) {
  if (responses.empty()) throw ConfigError("ordered mock script is empty");
  MockBackend m;
  m.ordered_ = std::move(responses);
  return m;
}

MockBackend MockBackend::keyed(std::map<std::string, std::string> by_digest) {
  MockBackend m;
  m.keyed_mode_ = true;
  m.by_digest_ = std::move(by_digest);
  return m;
}

MockBackend MockBackend::from_json(std::string_view script) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(script);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mock script is not valid JSON: ") + e.what());
  }
  try {
    if (doc.contains("ordered")) return ordered(doc.at("ordered").get<std::vector<std::string>>());
    if (!doc.contains("keyed")) throw ConfigError("mock script needs an 'ordered' or 'keyed' member");
    auto m = keyed({});
    for (const auto& e : doc.at("keyed")) {
      auto response = e.at("response").get<std::string>();
      if (e.contains("digest")) {
        m.by_digest_[e.at("digest").get<std::string>()] = std::move(response);
      } else {
        m.add_text_entry(e.at("text").get<std::string>(), std::move(response));
      }
    }
    if (doc.contains("default")) m.set_default(doc.at("default").get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  }
}

void MockBackend::add_text_entry(std::string text, std::string response) {
  keyed_mode_ = true;
  by_digest_[text::sha256_hex(text)] = response;
  by_suffix_.emplace_back(std::move(text), std::move(response));
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mu_);
  return calls_;
}

Completion MockBackend::complete(const ChatRequest& req) {
  req.validate();
  std::lock_guard lock(mu_);
  ++calls_;
  Completion c;
  c.model = req.model;
  if (!keyed_mode_) {
    if (next_ >= ordered_.size()) {
      throw BackendError(BackendErrorKind::ScriptExhausted,
                         "mock script exhausted after " + std::to_string(ordered_.size()) + " responses");
    }
    c.text = ordered_[next_++];
    return c;
  }
  if (auto it = by_digest_.find(user_message_digest(req)); it != by_digest_.end()) {
    c.text = it->second;
    return c;
  }
  std::string user;
  for (const auto& m : req.messages) {
    if (m.role == "user") user = m.content;
  }
  for (const auto& [suffix, response] : by_suffix_) {
    if (text::ends_with(user, suffix)) {
      c.text = response;
      return c;
    }
  }
  if (default_) {
    c.text = *default_;
    return c;
  }
  throw BackendError(BackendErrorKind::ScriptExhausted, "mock script has no response for this request");
}

// ---------------------------------------------------------------------------
// ResponseCache

fs::path ResponseCache::entry_path(const ChatRequest& req) const {
  return dir_ / (cache_key(req) + ".json");
}

std::optional<Completion> ResponseCache::lookup(const ChatRequest& req) const {
  const auto path = entry_path(req);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read cache entry " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    auto doc = nlohmann::json::parse(buf.str());
    if (doc.at("key").get<std::string>() != cache_key(req)) {
      throw IoError("cache entry key mismatch: " + path.string());
    }
    Completion c;
    c.text = doc.at("response").get<std::string>();
    c.model = doc.value("model", req.model);
    c.from_cache = true;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt cache entry " + path.string() + ": " + e.what());
  }
}

void ResponseCache::store(const ChatRequest& req, const Completion& c) const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());

  ordered_json doc;
  doc["key"] = cache_key(req);
  doc["request"] = ordered_json::parse(req.to_json());
  doc["response"] = c.text;
  doc["model"] = c.model;
  const auto now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  doc["timestamp"] = stamp;

  const auto final_path = entry_path(req);
  std::mt19937_64 rng{std::random_device{}()};
  auto tmp = final_path;
  tmp += ".tmp." + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << doc.dump(2, ' ', false, ordered_json::error_handler_t::replace) << '\n';
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot install cache entry " + final_path.string());
  }
}

Completion cached_complete(const ChatRequest& req, ChatBackend& backend, const ResponseCache* cache,
                           const LogSink& log) {
  if (cache) {
    try {
      if (auto hit = cache->lookup(req)) return *hit;
    } catch (const IoError& e) {
      if (log) log(std::string("cache lookup failed, calling backend: ") + e.what());
    }
  }
  auto c = backend.complete(req);
  if (cache) {
    try {
      cache->store(req, c);
    } catch (const std::exception& e) {
      if (log) log(std::string("cache store failed: ") + e.what());
    }
  }
  return c;
}

}  // namespace biasharness
