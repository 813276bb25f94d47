#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "httplib.h"
#include "json.hpp"

namespace trustgate {

class BackendError : public std::runtime_error {
 public:
  BackendError(int status, const std::string& msg)
      : std::runtime_error(msg), status_(status) {}
  // Upstream HTTP status, or 0 for transport failures and timeouts.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct BackendConfig {
  enum class Kind { Mock, Remote };
  Kind kind = Kind::Mock;
  std::string fixture_path;    // mock
  std::string base_url;        // remote, e.g. http://127.0.0.1:9000/llm
  std::string credential_env;  // remote: name of the env var holding a bearer token
  int timeout_ms = 10000;
  int max_tokens = 512;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string generate(const std::string& prompt) = 0;
  virtual std::string id() const = 0;
};

// Looks the prompt up in a JSON object of prompt -> completion; unknown
// prompts (or a missing fixture file) echo the prompt back.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::map<std::string, std::string> fixtures)
      : fixtures_(std::move(fixtures)) {}

  explicit MockBackend(const std::string& fixture_path) {
    if (fixture_path.empty()) {
      fixture_missing_ = true;
      return;
    }
    std::ifstream in(fixture_path);
    if (!in) {
      fixture_missing_ = true;
      return;
    }
    auto j = nlohmann::json::parse(in);
    fixtures_ = j.get<std::map<std::string, std::string>>();
  }

  std::string generate(const std::string& prompt) override {
    auto it = fixtures_.find(prompt);
    return it == fixtures_.end() ? prompt : it->second;
  }

  std::string id() const override { return "mock"; }
  bool fixture_missing() const noexcept { return fixture_missing_; }
  const std::map<std::string, std::string>& fixtures() const noexcept { return fixtures_; }

 private:
  std::map<std::string, std::string> fixtures_;
  bool fixture_missing_ = false;
};

// POSTs {"prompt", "max_tokens"} to {base}/generate and returns the "text"
// field of the JSON reply.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    auto scheme_end = cfg_.base_url.find("://");
    auto path_start = cfg_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
      origin_ = cfg_.base_url;
    } else {
      origin_ = cfg_.base_url.substr(0, path_start);
      prefix_ = cfg_.base_url.substr(path_start);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  std::string generate(const std::string& prompt) override {
    httplib::Client cli(origin_);
    auto ms = std::chrono::milliseconds(cfg_.timeout_ms);
    cli.set_connection_timeout(ms);
    cli.set_read_timeout(ms);
    cli.set_write_timeout(ms);
    httplib::Headers headers;
    if (!cfg_.credential_env.empty())
      if (const char* tok = std::getenv(cfg_.credential_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + tok);
    nlohmann::json body{{"prompt", prompt}, {"max_tokens", cfg_.max_tokens}};
    auto res = cli.Post(prefix_ + "/generate", headers, body.dump(), "application/json");
    if (!res) throw BackendError(0, "backend unreachable: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw BackendError(res->status, "backend returned status " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(res->status, std::string("malformed backend reply: ") + e.what());
    }
  }

  std::string id() const override { return "remote:" + cfg_.base_url; }

 private:
  BackendConfig cfg_;
  std::string origin_;
  std::string prefix_;
};

// Wraps a callable; used for in-process harnesses.
class FunctionBackend : public Backend {
 public:
  FunctionBackend(std::string id, std::function<std::string(const std::string&)> fn)
      : id_(std::move(id)), fn_(std::move(fn)) {}
  std::string generate(const std::string& prompt) override { return fn_(prompt); }
  std::string id() const override { return id_; }

 private:
  std::string id_;
  std::function<std::string(const std::string&)> fn_;
};

inline std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  if (cfg.kind == BackendConfig::Kind::Remote) return std::make_unique<RemoteBackend>(cfg);
  return std::make_unique<MockBackend>(cfg.fixture_path);
}

inline std::string backend_generate(const BackendConfig& cfg, const std::string& prompt) {
  return make_backend(cfg)->generate(prompt);
}

}  // namespace trustgate
