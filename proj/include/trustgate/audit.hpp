#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "trustgate/common.hpp"

namespace trustgate {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// One gateway decision. Never carries matched text: only types, counts and a
// digest of the raw model output.
struct AuditRecord {
  std::string request_id;
  Instant timestamp{};
  std::string principal_id;
  std::optional<int> tier;
  std::optional<double> raw_score;
  std::optional<SensitivityLevel> level;
  std::vector<std::string> action_set;
  std::map<std::string, int> entity_type_counts;
  std::optional<std::string> output_hash;
  bool anomaly_flag = false;
  std::optional<std::string> backend_id;
  double latency_ms = 0.0;
};

namespace detail {

template <typename T>
nlohmann::json or_null(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

// Long digit runs in serialized scores could read as card numbers, so
// numeric fields are rounded before they reach the log.
inline double round_to(double v, double scale) { return std::round(v * scale) / scale; }

}  // namespace detail

inline nlohmann::json to_json(const AuditRecord& r) {
  nlohmann::json j;
  j["request_id"] = r.request_id;
  j["timestamp"] = format_iso8601(r.timestamp);
  j["principal_id"] = r.principal_id;
  j["tier"] = detail::or_null(r.tier);
  j["raw_score"] = r.raw_score ? nlohmann::json(detail::round_to(*r.raw_score, 1e6))
                              : nlohmann::json(nullptr);
  j["level"] = r.level ? nlohmann::json(std::string(to_string(*r.level))) : nlohmann::json(nullptr);
  j["action_set"] = r.action_set;
  j["entity_type_counts"] = r.entity_type_counts;
  j["output_hash"] = detail::or_null(r.output_hash);
  j["anomaly_flag"] = r.anomaly_flag;
  j["backend_id"] = detail::or_null(r.backend_id);
  j["latency_ms"] = detail::round_to(r.latency_ms, 1e3);
  return j;
}

// Throws nlohmann::json::exception or std::invalid_argument on malformed input.
inline AuditRecord audit_from_json(const nlohmann::json& j) {
  AuditRecord r;
  r.request_id = j.at("request_id").get<std::string>();
  auto ts = parse_iso8601(j.at("timestamp").get<std::string>());
  if (!ts) throw std::invalid_argument("bad timestamp");
  r.timestamp = *ts;
  r.principal_id = j.at("principal_id").get<std::string>();
  r.tier = detail::opt<int>(j, "tier");
  r.raw_score = detail::opt<double>(j, "raw_score");
  if (auto lv = detail::opt<std::string>(j, "level")) {
    r.level = level_from_string(*lv);
    if (!r.level) throw std::invalid_argument("bad level");
  }
  r.action_set = j.at("action_set").get<std::vector<std::string>>();
  r.entity_type_counts = j.at("entity_type_counts").get<std::map<std::string, int>>();
  r.output_hash = detail::opt<std::string>(j, "output_hash");
  r.anomaly_flag = j.at("anomaly_flag").get<bool>();
  r.backend_id = detail::opt<std::string>(j, "backend_id");
  r.latency_ms = j.at("latency_ms").get<double>();
  return r;
}

struct AuditFilter {
  std::optional<std::string> principal;
  std::optional<Instant> since;
};

// Append-only JSONL sink. Each record is written with a single write(2) on an
// O_APPEND descriptor, so a line is either fully present or absent.
class AuditLog {
 public:
  explicit AuditLog(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0640);
    if (fd_ < 0) note_error(std::string("open failed: ") + std::strerror(errno));
  }
  ~AuditLog() {
    if (fd_ >= 0) ::close(fd_);
  }
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  // Returns false and bumps the error counter when the line could not be
  // written in full.
  bool append(const AuditRecord& record) {
    std::string line = to_json(record).dump() + "\n";
    std::lock_guard lock(mu_);
    if (fd_ < 0) {
      note_error("audit sink is not open");
      return false;
    }
    ssize_t n = ::write(fd_, line.data(), line.size());
    if (n != static_cast<ssize_t>(line.size())) {
      note_error(n < 0 ? std::string("write failed: ") + std::strerror(errno)
                       : std::string("short write"));
      return false;
    }
    return true;
  }

  std::vector<AuditRecord> query(const AuditFilter& filter) const {
    std::vector<AuditRecord> out;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      AuditRecord r;
      try {
        r = audit_from_json(nlohmann::json::parse(line));
      } catch (const std::exception&) {
        continue;
      }
      if (filter.principal && r.principal_id != *filter.principal) continue;
      if (filter.since && r.timestamp < *filter.since) continue;
      out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const AuditRecord& a, const AuditRecord& b) {
      return a.timestamp < b.timestamp;
    });
    return out;
  }

  std::uint64_t error_count() const noexcept { return errors_.load(); }
  std::string last_error() const {
    std::lock_guard lock(err_mu_);
    return last_error_;
  }
  const std::string& path() const noexcept { return path_; }

 private:
  void note_error(std::string msg) {
    errors_.fetch_add(1);
    std::lock_guard lock(err_mu_);
    last_error_ = std::move(msg);
  }

  std::string path_;
  int fd_ = -1;
  std::mutex mu_;
  mutable std::mutex err_mu_;
  std::atomic<std::uint64_t> errors_{0};
  std::string last_error_;
};

}  // namespace trustgate
