#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "trustgate/audit.hpp"
#include "trustgate/config.hpp"
#include "trustgate/gateway.hpp"
#include "trustgate/policy.hpp"
#include "trustgate/sensitivity.hpp"

namespace trustgate::admin {

// Stable process exit codes shared by scan and policy check.
inline constexpr int kExitClean = 0;
inline constexpr int kExitIoError = 1;
inline constexpr int kExitFindings = 2;

// ── scan ─────────────────────────────────────────────────────────────────────

inline constexpr std::size_t kBinaryProbeBytes = 8192;

struct FileFinding {
  enum class Status { Scanned, SkippedBinary, Error };
  std::string path;
  Status status = Status::Scanned;
  SensitivityLevel level = SensitivityLevel::Public;
  std::map<std::string, int> counts;
  std::string error;
};

struct ScanReport {
  std::vector<FileFinding> files;  // sorted by path
  std::map<std::string, int> totals;
  std::size_t flagged = 0;         // scanned files at or above min_level
  int exit_code = kExitClean;
};

inline bool looks_binary(std::string_view head) {
  return head.substr(0, std::min(head.size(), kBinaryProbeBytes)).find('\0') !=
         std::string_view::npos;
}

inline FileFinding scan_file(const std::filesystem::path& p, const SensitivityEngine& engine) {
  FileFinding f;
  f.path = p.string();
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    f.status = FileFinding::Status::Error;
    f.error = "cannot read file";
    return f;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    f.status = FileFinding::Status::Error;
    f.error = "read failed";
    return f;
  }
  std::string text = ss.str();
  if (looks_binary(text)) {
    f.status = FileFinding::Status::SkippedBinary;
    return f;
  }
  auto report = engine.analyze(text);
  f.level = report.level;
  f.counts = report.counts;
  return f;
}

inline ScanReport scan_paths(const std::vector<std::string>& paths, const SensitivityEngine& engine,
                             SensitivityLevel min_level) {
  namespace fs = std::filesystem;
  ScanReport r;
  for (const auto& root : paths) {
    std::error_code ec;
    fs::path p(root);
    if (fs::is_directory(p, ec)) {
      fs::recursive_directory_iterator it(p, fs::directory_options::skip_permission_denied, ec),
          end;
      if (ec) {
        r.files.push_back({root, FileFinding::Status::Error, {}, {}, ec.message()});
        continue;
      }
      for (; it != end; it.increment(ec)) {
        if (ec) {
          r.files.push_back({it->path().string(), FileFinding::Status::Error, {}, {}, ec.message()});
          break;
        }
        if (it->is_regular_file(ec)) r.files.push_back(scan_file(it->path(), engine));
      }
    } else if (fs::is_regular_file(p, ec)) {
      r.files.push_back(scan_file(p, engine));
    } else {
      r.files.push_back({root, FileFinding::Status::Error, {}, {}, "no such file or directory"});
    }
  }
  std::sort(r.files.begin(), r.files.end(),
            [](const FileFinding& a, const FileFinding& b) { return a.path < b.path; });
  bool io_error = false;
  for (const auto& f : r.files) {
    if (f.status == FileFinding::Status::Error) io_error = true;
    if (f.status != FileFinding::Status::Scanned) continue;
    for (const auto& [type, n] : f.counts) r.totals[type] += n;
    if (f.level >= min_level && !f.counts.empty()) ++r.flagged;
  }
  r.exit_code = io_error ? kExitIoError : (r.flagged > 0 ? kExitFindings : kExitClean);
  return r;
}

inline std::string_view to_string(FileFinding::Status s) {
  switch (s) {
    case FileFinding::Status::Scanned:       return "scanned";
    case FileFinding::Status::SkippedBinary: return "skipped-binary";
    case FileFinding::Status::Error:         return "error";
  }
  return "error";
}

inline nlohmann::json to_json(const ScanReport& r) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : r.files) {
    nlohmann::json j{{"path", f.path}, {"status", std::string(to_string(f.status))}};
    if (f.status == FileFinding::Status::Scanned) {
      j["level"] = std::string(trustgate::to_string(f.level));
      j["counts"] = f.counts;
    }
    if (!f.error.empty()) j["error"] = f.error;
    files.push_back(std::move(j));
  }
  return {{"schema", 1},
          {"files", files},
          {"totals", r.totals},
          {"flagged", r.flagged},
          {"exit_code", r.exit_code}};
}

inline std::string format_table(const ScanReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "LEVEL" << std::setw(16) << "STATUS" << "PATH  FINDINGS\n";
  for (const auto& f : r.files) {
    os << std::setw(14)
       << (f.status == FileFinding::Status::Scanned ? std::string(trustgate::to_string(f.level))
                                                    : std::string("-"))
       << std::setw(16) << to_string(f.status) << f.path;
    if (f.status == FileFinding::Status::SkippedBinary) os << "  (binary file skipped)";
    if (!f.error.empty()) os << "  (" << f.error << ")";
    for (const auto& [type, n] : f.counts) os << "  " << type << "=" << n;
    os << '\n';
  }
  os << "totals:";
  if (r.totals.empty()) os << " none";
  for (const auto& [type, n] : r.totals) os << ' ' << type << '=' << n;
  os << "\nflagged files: " << r.flagged << '\n';
  return os.str();
}

// ── policy check ─────────────────────────────────────────────────────────────

struct PolicyCheckResult {
  int exit_code = kExitClean;
  std::vector<std::string> messages;
};

inline PolicyCheckResult policy_check_source(std::string_view source,
                                             const std::set<std::string>& schema) {
  PolicyCheckResult r;
  policy::Policy p;
  try {
    p = policy::parse_policy(source);
  } catch (const policy::PolicyError& e) {
    r.exit_code = kExitIoError;
    r.messages.push_back(e.what());
    return r;
  }
  for (const auto& d : policy::validate_policy(p, schema))
    r.messages.push_back("line " + std::to_string(d.line) + ": " +
                         std::string(policy::to_string(d.kind)) + ": " + d.message);
  r.exit_code = r.messages.empty() ? kExitClean : kExitFindings;
  return r;
}

inline PolicyCheckResult policy_check(const std::string& path,
                                      const std::set<std::string>& schema) {
  std::ifstream in(path);
  if (!in) return {kExitIoError, {"cannot read policy file " + path}};
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_check_source(ss.str(), schema);
}

// ── replay ───────────────────────────────────────────────────────────────────

struct ReplaySummary {
  std::size_t records = 0;
  std::size_t malformed = 0;
  std::map<std::string, std::size_t> per_tier;  // "0".."3", "none" for unscored requests
  std::map<std::string, std::size_t> actions;
  std::size_t anomalies = 0;
  std::size_t denials = 0;

  double anomaly_rate() const { return records ? double(anomalies) / double(records) : 0.0; }
  double denial_rate() const { return records ? double(denials) / double(records) : 0.0; }
};

inline ReplaySummary replay_stream(std::istream& in) {
  ReplaySummary s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AuditRecord r;
    try {
      r = audit_from_json(nlohmann::json::parse(line));
    } catch (const std::exception&) {
      ++s.malformed;
      continue;
    }
    ++s.records;
    ++s.per_tier[r.tier ? std::to_string(*r.tier) : "none"];
    for (const auto& a : r.action_set) ++s.actions[a];
    if (r.anomaly_flag) ++s.anomalies;
    if (std::find(r.action_set.begin(), r.action_set.end(), "deny") != r.action_set.end())
      ++s.denials;
  }
  return s;
}

// Throws std::runtime_error when the file cannot be opened.
inline ReplaySummary replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read audit file " + path);
  return replay_stream(in);
}

inline nlohmann::json to_json(const ReplaySummary& s) {
  return {{"schema", 1},
          {"records", s.records},
          {"malformed", s.malformed},
          {"per_tier", s.per_tier},
          {"actions", s.actions},
          {"anomaly_rate", s.anomaly_rate()},
          {"denial_rate", s.denial_rate()}};
}

inline std::string format_summary(const ReplaySummary& s) {
  std::ostringstream os;
  os << "records: " << s.records << '\n';
  if (s.malformed) os << s.malformed << " malformed line(s) skipped\n";
  os << "requests per tier:";
  if (s.per_tier.empty()) os << " none";
  for (const auto& [t, n] : s.per_tier) os << ' ' << t << '=' << n;
  os << "\nactions:";
  if (s.actions.empty()) os << " none";
  for (const auto& [a, n] : s.actions) os << ' ' << a << '=' << n;
  os << std::fixed << std::setprecision(4) << "\nanomaly rate: " << s.anomaly_rate()
     << "\ndenial rate: " << s.denial_rate() << '\n';
  return os.str();
}

// ── synthetic corpus ─────────────────────────────────────────────────────────

// Appends a Luhn check digit to `body`.
inline std::string with_luhn_digit(const std::string& body) {
  int sum = 0;
  bool dbl = true;
  for (auto it = body.rbegin(); it != body.rend(); ++it) {
    int d = *it - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
  }
  return body + static_cast<char>('0' + (10 - sum % 10) % 10);
}

// Deterministic documents mixing clinical and financial prose with seeded
// identifiers (SSNs, Luhn-valid card numbers, emails, MRNs, names, amounts).
inline std::vector<std::string> synthetic_corpus(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto digits = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + pick(10)));
    return s;
  };
  static const std::array<const char*, 6> names = {"Smith", "Garcia", "Okafor", "Nguyen",
                                                   "Patel", "Larsen"};
  static const std::array<const char*, 5> filler = {
      "The quarterly review found no outstanding issues.",
      "Follow-up is scheduled for next week.",
      "All systems operated within normal parameters.",
      "The committee approved the revised protocol.",
      "No further action is required at this time."};
  std::vector<std::string> docs;
  docs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::ostringstream d;
    d << filler[pick(filler.size())] << ' ';
    switch (i % 6) {
      case 0:
        d << "The patient SSN is " << 100 + pick(800) << '-' << 10 + pick(89) << '-'
          << 1000 + pick(8999) << '.';
        break;
      case 1:
        d << "Charge the visa card " << with_luhn_digit("4" + digits(14)) << " today.";
        break;
      case 2:
        d << "Contact " << names[pick(names.size())] << ".ops" << pick(100)
          << "@example.org for access.";
        break;
      case 3:
        d << "Dr. " << names[pick(names.size())] << " reviewed chart MRN-" << digits(7)
          << " and SSN " << 100 + pick(800) << '-' << 10 + pick(89) << '-' << 1000 + pick(8999)
          << '.';
        break;
      case 4:
        d << "Total paid was $" << 1 + pick(999) << ',' << 100 + pick(899) << '.' << 10 + pick(89)
          << " and the card " << with_luhn_digit("5" + digits(14)) << " was used.";
        break;
      case 5:
        d << "Wire to IBAN DE" << digits(2) << ' ' << digits(4) << ' ' << digits(4) << ' '
          << digits(4) << ' ' << digits(4) << " and email " << names[pick(names.size())]
          << "@bank.example.com.";
        break;
    }
    d << ' ' << filler[pick(filler.size())];
    docs.push_back(d.str());
  }
  return docs;
}

// ── simulate ─────────────────────────────────────────────────────────────────

struct SimulationSpec {
  std::size_t sessions = 20;
  std::uint64_t seed = 1;
  std::array<double, 4> tier_mix{0.25, 0.25, 0.25, 0.25};
  std::size_t requests_per_session = 5;
  std::vector<std::string> prompts;  // empty: synthetic corpus

  void validate() const {
    double sum = 0;
    for (double p : tier_mix) {
      if (!(p >= 0.0)) throw std::invalid_argument("tier proportions must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("tier proportions must sum to 1");
    if (sessions == 0) throw std::invalid_argument("session count must be positive");
  }
};

struct SimulationMetrics {
  std::size_t requests = 0;
  std::array<std::map<std::string, std::size_t>, 4> actions_per_tier;
  std::array<std::size_t, 4> requests_per_tier{};
  std::size_t anomalies = 0;
  // Spans at confidential or above that survive verbatim into an output the
  // disclosure matrix did not let through unchanged.
  std::size_t leakage = 0;

  bool operator==(const SimulationMetrics&) const = default;
};

inline nlohmann::json to_json(const SimulationMetrics& m) {
  nlohmann::json tiers = nlohmann::json::array();
  for (std::size_t t = 0; t < 4; ++t)
    tiers.push_back({{"tier", t}, {"requests", m.requests_per_tier[t]},
                     {"actions", m.actions_per_tier[t]}});
  return {{"schema", 1},
          {"requests", m.requests},
          {"tiers", tiers},
          {"anomalies", m.anomalies},
          {"leakage", m.leakage}};
}

namespace detail {

inline double tier_target(const TrustWeights& w, int tier) {
  const auto& t = w.thresholds;
  switch (tier) {
    case 0: return t[0] / 2.0;
    case 1: return (t[0] + t[1]) / 2.0;
    case 2: return (t[1] + t[2]) / 2.0;
    default: return (t[2] + 1.0) / 2.0;
  }
}

}  // namespace detail

// Drives the in-process pipeline with seeded synthetic sessions. Each session
// belongs to a fresh synthetic principal whose role and purpose scores are
// chosen to land the first request in the sampled tier; results are bucketed
// by the tier the pipeline actually assigned.
inline SimulationMetrics simulate(const SimulationSpec& spec, const Config& base) {
  spec.validate();
  Config cfg = base;
  cfg.noise_seed = spec.seed;
  cfg.state_path.clear();
  cfg.policy_source = "permit simulation on \"completions\":invoke;\n";
  cfg.principals.clear();

  const auto& w = cfg.trust.weights;
  const RequestContext strong{"", NetworkZone::Trusted, DevicePosture::Managed, AuthStrength::Mfa, {}};
  const RequestContext weak{"", NetworkZone::Public, DevicePosture::Unknown,
                            AuthStrength::Anonymous, {}};
  std::array<RequestContext, 4> contexts{};
  for (int t = 0; t < 4; ++t) {
    std::string name = "sim-tier-" + std::to_string(t);
    contexts[t] = t >= 2 ? strong : weak;
    contexts[t].purpose = name;
    double c = compute_context_score(contexts[t], cfg.trust.factors);
    double rp = w.role + w.purpose;
    double x = rp > 0 ? (detail::tier_target(w, t) - w.context * c - w.behavior * 0.5) / rp : 0.5;
    x = std::clamp(x, 0.0, 1.0);
    cfg.trust.role_weights[name] = x;
    cfg.trust.purpose_scores[name] = x;
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> session_tier(spec.sessions);
  for (std::size_t s = 0; s < spec.sessions; ++s) {
    double u = unit(rng), acc = 0.0;
    int tier = 3;
    for (int t = 0; t < 4; ++t) {
      acc += spec.tier_mix[t];
      if (u < acc) {
        tier = t;
        break;
      }
    }
    while (spec.tier_mix[tier] == 0.0 && tier > 0) --tier;
    session_tier[s] = tier;
    PrincipalEntry e;
    e.principal.id = "sim-" + std::to_string(s);
    e.principal.roles = {"sim-tier-" + std::to_string(tier)};
    cfg.principals.push_back(std::move(e));
  }

  std::vector<std::string> prompts = spec.prompts;
  if (prompts.empty()) prompts = synthetic_corpus(spec.seed ^ 0x5eedULL, 60);
  std::map<std::string, std::string> fixtures;
  for (std::size_t i = 0; i < prompts.size(); ++i) fixtures["doc-" + std::to_string(i)] = prompts[i];

  auto audit_path = std::filesystem::temp_directory_path() /
                    ("trustgate-sim-" + std::to_string(::getpid()) + "-" +
                     std::to_string(spec.seed) + ".jsonl");
  cfg.audit_path = audit_path.string();
  finalize_config(cfg);

  SimulationMetrics m;
  {
    Gateway gw(cfg, std::make_unique<MockBackend>(fixtures));
    const auto& engine = gw.engine();
    for (std::size_t s = 0; s < spec.sessions; ++s) {
      const auto& ctx = contexts[session_tier[s]];
      for (std::size_t k = 0; k < spec.requests_per_session; ++k) {
        std::string key = "doc-" + std::to_string(rng() % prompts.size());
        ChatRequest req{"sim-" + std::to_string(s), ctx.purpose,  key,
                        ctx.network_zone,            ctx.device_posture, ctx.auth_strength};
        auto res = gw.handle_completion(req);
        ++m.requests;
        if (res.anomaly) ++m.anomalies;
        if (!res.response) continue;
        const auto& r = *res.response;
        auto t = static_cast<std::size_t>(r.trust_tier);
        ++m.requests_per_tier[t];
        for (const auto& a : r.actions) ++m.actions_per_tier[t][a];
        if (std::find(r.actions.begin(), r.actions.end(), "pass") != r.actions.end()) continue;
        const std::string& original = fixtures.at(key);
        Utf8Text idx(original);
        for (const auto& span : engine.analyze(original).spans) {
          if (level_of_type(engine.type_levels(), span.entity_type) < SensitivityLevel::Confidential)
            continue;
          if (r.text.find(idx.slice(span.start, span.end)) != std::string::npos) ++m.leakage;
        }
      }
    }
  }
  std::error_code ec;
  std::filesystem::remove(audit_path, ec);
  return m;
}

}  // namespace trustgate::admin
