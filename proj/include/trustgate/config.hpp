#pragma once

// Gateway configuration: one JSON document. Every section is optional and
// falls back to the shipped defaults; whatever is present is validated, and
// the first failure raises ConfigError naming the offending key.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustgate/backend.hpp"
#include "trustgate/behavior.hpp"
#include "trustgate/common.hpp"
#include "trustgate/disclosure.hpp"
#include "trustgate/policy.hpp"
#include "trustgate/sensitivity.hpp"
#include "trustgate/trust.hpp"

namespace trustgate {

struct PrincipalEntry {
  Principal principal;
  std::string api_key;
};

inline constexpr std::string_view kDefaultPolicySource =
    "# Only known staff roles may invoke completions.\n"
    "permit staff-completions on \"completions\":invoke\n"
    "    when role in [\"clinician\", \"nurse\", \"analyst\", \"admin_staff\", \"guest\"];\n"
    "deny anonymous-public on \"completions\":invoke\n"
    "    when context.auth_strength == \"anonymous\" and context.network_zone == \"public\";\n"
    "deny suspended-accounts on \"completions\":invoke when suspended == true;\n";

struct Config {
  TrustConfig trust;

  double violation_weight = kDefaultViolationWeight;
  std::size_t behavior_window = 50;
  double anomaly_threshold = kDefaultAnomalyThreshold;
  HmmModel hmm = default_hmm();

  std::vector<Recognizer> recognizers = default_recognizers();
  SensitivityEngine::Settings sensitivity;
  bool scan_prompt = false;

  DisclosureMatrix disclosure;

  std::string policy_source{kDefaultPolicySource};
  policy::Policy policy;
  std::set<std::string> attribute_schema{"department", "suspended", "clearance"};

  std::vector<PrincipalEntry> principals;
  std::vector<std::string> admin_keys;

  BackendConfig backend;
  std::string audit_path = "audit.jsonl";
  std::string state_path;  // empty: behavior state kept in memory only
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::uint64_t> noise_seed;
};

inline std::map<std::string, double> default_role_weights() {
  return {{"clinician", 0.9}, {"nurse", 0.7},  {"analyst", 0.6},
          {"admin_staff", 0.5}, {"guest", 0.3}};
}

inline std::map<std::string, double> default_purpose_scores() {
  return {{"diagnosis", 1.0}, {"treatment", 0.9}, {"billing", 0.6},
          {"research", 0.5},  {"general", 0.3}};
}

// Validates cross-section constraints and parses the policy.
inline void finalize_config(Config& c) {
  c.trust.weights.validate();
  if (!(c.violation_weight >= 1.0))
    throw ConfigError("behavior.violation_weight", "must be >= 1");
  if (c.behavior_window == 0) throw ConfigError("behavior.window", "must be positive");
  try {
    c.hmm.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("behavior.hmm", e.what());
  }
  for (std::size_t i = 0; i < c.recognizers.size(); ++i) {
    const auto& r = c.recognizers[i];
    std::string key = "sensitivity.recognizers[" + std::to_string(i) + "]";
    if (!c.sensitivity.type_levels.count(r.entity_type))
      throw ConfigError(key + ".entity_type",
                        "entity type '" + r.entity_type + "' has no sensitivity level");
    try {
      compile_recognizer(r);
    } catch (const std::invalid_argument& e) {
      std::string what = e.what();
      std::string field = what.rfind("pattern", 0) == 0  ? ".pattern"
                          : what.rfind("base", 0) == 0   ? ".base_confidence"
                                                         : ".id";
      throw ConfigError(key + field, what);
    }
  }
  c.disclosure.validate();
  try {
    c.policy = policy::parse_policy(c.policy_source);
  } catch (const policy::PolicyError& e) {
    throw ConfigError("policy", e.what());
  }
  std::set<std::string> ids, keys;
  for (std::size_t i = 0; i < c.principals.size(); ++i) {
    const auto& p = c.principals[i];
    std::string key = "principals[" + std::to_string(i) + "]";
    if (p.principal.id.empty()) throw ConfigError(key + ".id", "principal id is empty");
    if (!ids.insert(p.principal.id).second)
      throw ConfigError(key + ".id", "duplicate principal id '" + p.principal.id + "'");
    if (!p.api_key.empty() && !keys.insert(p.api_key).second)
      throw ConfigError(key + ".api_key", "duplicate api key");
    for (const auto& role : p.principal.roles)
      if (!c.trust.role_weights.count(role))
        throw ConfigError(key + ".roles", "role '" + role + "' is not in trust.role_weights");
  }
}

inline Config default_config() {
  Config c;
  c.trust.role_weights = default_role_weights();
  c.trust.purpose_scores = default_purpose_scores();
  finalize_config(c);
  return c;
}

namespace detail {

using nlohmann::json;

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, std::string("wrong type: ") + e.what());
  }
}

inline double unit_interval(const json& j, const std::string& key) {
  double v = get_as<double>(j, key);
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, "must lie in [0,1]");
  return v;
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline void parse_trust(const json& t, TrustConfig& cfg) {
  if (auto it = t.find("weights"); it != t.end()) {
    const auto& w = *it;
    if (!w.is_object()) throw ConfigError("trust.weights", "must be an object");
    for (auto& [k, v] : w.items()) {
      double x = get_as<double>(v, "trust.weights." + k);
      if (k == "role") cfg.weights.role = x;
      else if (k == "purpose") cfg.weights.purpose = x;
      else if (k == "context") cfg.weights.context = x;
      else if (k == "behavior") cfg.weights.behavior = x;
      else throw ConfigError("trust.weights." + k, "unknown weight");
    }
  }
  if (auto it = t.find("thresholds"); it != t.end()) {
    auto v = get_as<std::vector<double>>(*it, "trust.thresholds");
    if (v.size() != 3) throw ConfigError("trust.thresholds", "expected three thresholds");
    cfg.weights.thresholds = {v[0], v[1], v[2]};
  }
  if (auto it = t.find("role_weights"); it != t.end()) {
    cfg.role_weights.clear();
    for (auto& [k, v] : it->items())
      cfg.role_weights[k] = unit_interval(v, "trust.role_weights." + k);
  }
  if (auto it = t.find("purpose_scores"); it != t.end()) {
    cfg.purpose_scores.clear();
    for (auto& [k, v] : it->items())
      cfg.purpose_scores[k] = unit_interval(v, "trust.purpose_scores." + k);
  }
  if (auto it = t.find("unknown_purpose_score"); it != t.end())
    cfg.unknown_purpose_score = unit_interval(*it, "trust.unknown_purpose_score");
  if (auto it = t.find("factors"); it != t.end()) {
    const auto& f = *it;
    auto table = [&](const char* name, auto parse, auto& target) {
      auto sec = f.find(name);
      if (sec == f.end()) return;
      for (auto& [k, v] : sec->items()) {
        std::string key = std::string("trust.factors.") + name + "." + k;
        auto e = parse(k);
        if (!e) throw ConfigError(key, "unknown value");
        target[*e] = unit_interval(v, key);
      }
    };
    table("network_zone", network_zone_from_string, cfg.factors.network);
    table("device_posture", device_posture_from_string, cfg.factors.device);
    table("auth_strength", auth_strength_from_string, cfg.factors.auth);
  }
}

inline void parse_behavior(const json& b, Config& c) {
  if (auto it = b.find("violation_weight"); it != b.end())
    c.violation_weight = get_as<double>(*it, "behavior.violation_weight");
  if (auto it = b.find("window"); it != b.end()) {
    auto w = get_as<long long>(*it, "behavior.window");
    if (w <= 0) throw ConfigError("behavior.window", "must be positive");
    c.behavior_window = static_cast<std::size_t>(w);
  }
  if (auto it = b.find("anomaly_threshold"); it != b.end())
    c.anomaly_threshold = get_as<double>(*it, "behavior.anomaly_threshold");
  if (auto it = b.find("hmm"); it != b.end()) {
    const auto& h = *it;
    HmmModel m = default_hmm();
    if (auto s = h.find("states"); s != h.end())
      m.states = get_as<std::vector<std::string>>(*s, "behavior.hmm.states");
    if (auto s = h.find("symbols"); s != h.end()) {
      auto syms = get_as<std::vector<std::string>>(*s, "behavior.hmm.symbols");
      if (syms != m.symbols)
        throw ConfigError("behavior.hmm.symbols", "symbols must be the action alphabet in order");
    }
    if (auto s = h.find("initial"); s != h.end())
      m.initial = get_as<std::vector<double>>(*s, "behavior.hmm.initial");
    if (auto s = h.find("transition"); s != h.end())
      m.transition = get_as<std::vector<std::vector<double>>>(*s, "behavior.hmm.transition");
    if (auto s = h.find("emission"); s != h.end())
      m.emission = get_as<std::vector<std::vector<double>>>(*s, "behavior.hmm.emission");
    c.hmm = std::move(m);
  }
}

inline Recognizer parse_recognizer(const json& r, const std::string& key) {
  Recognizer out;
  out.id = get_as<std::string>(r.value("id", json("")), key + ".id");
  out.entity_type = get_as<std::string>(r.value("entity_type", json("")), key + ".entity_type");
  out.pattern = get_as<std::string>(r.value("pattern", json("")), key + ".pattern");
  if (out.pattern.empty()) throw ConfigError(key + ".pattern", "pattern is empty");
  out.base_confidence =
      get_as<double>(r.value("base_confidence", json(0.5)), key + ".base_confidence");
  auto validator = get_as<std::string>(r.value("validator", json("none")), key + ".validator");
  if (validator == "luhn") out.validator = Validator::Luhn;
  else if (validator != "none") throw ConfigError(key + ".validator", "expected luhn or none");
  out.context_words = get_as<std::vector<std::string>>(
      r.value("context_words", json::array()), key + ".context_words");
  out.numeric = get_as<bool>(r.value("numeric", json(false)), key + ".numeric");
  return out;
}

inline void parse_sensitivity(const json& s, Config& c) {
  if (auto it = s.find("counting_threshold"); it != s.end())
    c.sensitivity.counting_threshold = unit_interval(*it, "sensitivity.counting_threshold");
  if (auto it = s.find("context_window"); it != s.end())
    c.sensitivity.context_window = get_as<std::size_t>(*it, "sensitivity.context_window");
  if (auto it = s.find("context_boost"); it != s.end())
    c.sensitivity.context_boost = unit_interval(*it, "sensitivity.context_boost");
  if (auto it = s.find("scan_prompt"); it != s.end())
    c.scan_prompt = get_as<bool>(*it, "sensitivity.scan_prompt");
  if (auto it = s.find("type_levels"); it != s.end()) {
    for (auto& [k, v] : it->items()) {
      std::string key = "sensitivity.type_levels." + k;
      auto level = level_from_string(get_as<std::string>(v, key));
      if (!level) throw ConfigError(key, "unknown sensitivity level");
      c.sensitivity.type_levels[k] = *level;
    }
  }
  if (auto it = s.find("recognizers"); it != s.end()) {
    if (!it->is_array()) throw ConfigError("sensitivity.recognizers", "must be an array");
    c.recognizers.clear();
    for (std::size_t i = 0; i < it->size(); ++i)
      c.recognizers.push_back(
          parse_recognizer((*it)[i], "sensitivity.recognizers[" + std::to_string(i) + "]"));
  }
  if (auto it = s.find("extra_recognizers"); it != s.end()) {
    if (!it->is_array()) throw ConfigError("sensitivity.extra_recognizers", "must be an array");
    // Keys index the combined list so errors line up with finalize_config.
    for (std::size_t i = 0; i < it->size(); ++i)
      c.recognizers.push_back(parse_recognizer(
          (*it)[i], "sensitivity.recognizers[" + std::to_string(c.recognizers.size()) + "]"));
  }
}

inline void parse_disclosure(const json& d, Config& c) {
  auto& m = c.disclosure;
  if (auto it = d.find("matrix"); it != d.end()) {
    for (auto& [k, v] : it->items()) {
      std::string key = "disclosure.matrix." + k;
      auto level = level_from_string(k);
      if (!level) throw ConfigError(key, "unknown sensitivity level");
      auto names = get_as<std::vector<std::string>>(v, key);
      if (names.size() != 4) throw ConfigError(key, "expected one action per tier (4)");
      for (std::size_t t = 0; t < 4; ++t) {
        auto a = action_from_name(names[t]);
        if (!a) throw ConfigError(key + "[" + std::to_string(t) + "]", "unknown action");
        m.cells[static_cast<std::size_t>(*level)][t] = *a;
      }
    }
  }
  if (auto it = d.find("placeholder"); it != d.end())
    m.placeholder = get_as<std::string>(*it, "disclosure.placeholder");
  if (auto it = d.find("epsilon"); it != d.end()) {
    auto v = get_as<std::vector<double>>(*it, "disclosure.epsilon");
    if (v.size() != 4) throw ConfigError("disclosure.epsilon", "expected one epsilon per tier");
    for (std::size_t t = 0; t < 4; ++t) m.epsilon[t] = v[t];
  }
  if (auto it = d.find("summary_max_sentences"); it != d.end())
    m.summary_max_sentences = get_as<std::size_t>(*it, "disclosure.summary_max_sentences");
  if (auto it = d.find("noise_sensitivity"); it != d.end())
    m.noise_sensitivity = get_as<double>(*it, "disclosure.noise_sensitivity");
}

inline void parse_backend(const json& b, Config& c, const std::filesystem::path& base) {
  auto kind = get_as<std::string>(b.value("kind", json("mock")), "backend.kind");
  bool has_fixture = b.contains("fixture");
  bool has_url = b.contains("base_url");
  if (kind == "mock") {
    if (has_url) throw ConfigError("backend.kind", "mock backend must not set base_url");
    c.backend.kind = BackendConfig::Kind::Mock;
    if (has_fixture)
      c.backend.fixture_path = resolve_path(get_as<std::string>(b["fixture"], "backend.fixture"), base);
  } else if (kind == "remote") {
    if (has_fixture) throw ConfigError("backend.kind", "remote backend must not set fixture");
    if (!has_url) throw ConfigError("backend.base_url", "remote backend needs base_url");
    c.backend.kind = BackendConfig::Kind::Remote;
    c.backend.base_url = get_as<std::string>(b["base_url"], "backend.base_url");
    c.backend.credential_env =
        get_as<std::string>(b.value("credential_env", json("")), "backend.credential_env");
  } else {
    throw ConfigError("backend.kind", "expected mock or remote");
  }
  c.backend.timeout_ms = get_as<int>(b.value("timeout_ms", json(10000)), "backend.timeout_ms");
  if (c.backend.timeout_ms <= 0) throw ConfigError("backend.timeout_ms", "must be positive");
  c.backend.max_tokens = get_as<int>(b.value("max_tokens", json(512)), "backend.max_tokens");
}

inline void parse_principals(const json& arr, Config& c) {
  if (!arr.is_array()) throw ConfigError("principals", "must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& p = arr[i];
    std::string key = "principals[" + std::to_string(i) + "]";
    PrincipalEntry e;
    e.principal.id = get_as<std::string>(p.value("id", json("")), key + ".id");
    auto roles = get_as<std::vector<std::string>>(p.value("roles", json::array()), key + ".roles");
    e.principal.roles = {roles.begin(), roles.end()};
    e.principal.attributes = get_as<std::map<std::string, std::string>>(
        p.value("attributes", json::object()), key + ".attributes");
    e.api_key = get_as<std::string>(p.value("api_key", json("")), key + ".api_key");
    c.principals.push_back(std::move(e));
  }
}

}  // namespace detail

// `base_dir` anchors relative paths (policy, fixture, audit, state).
inline Config parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using detail::get_as;
  if (!j.is_object()) throw ConfigError("config", "top level must be a JSON object");
  Config c;
  c.trust.role_weights = default_role_weights();
  c.trust.purpose_scores = default_purpose_scores();
  if (auto it = j.find("trust"); it != j.end()) detail::parse_trust(*it, c.trust);
  if (auto it = j.find("behavior"); it != j.end()) detail::parse_behavior(*it, c);
  if (auto it = j.find("sensitivity"); it != j.end()) detail::parse_sensitivity(*it, c);
  if (auto it = j.find("disclosure"); it != j.end()) detail::parse_disclosure(*it, c);
  if (auto it = j.find("policy"); it != j.end()) {
    const auto& p = *it;
    if (p.contains("path") == p.contains("source"))
      throw ConfigError("policy", "set exactly one of policy.path or policy.source");
    if (p.contains("source")) {
      c.policy_source = get_as<std::string>(p["source"], "policy.source");
    } else {
      auto path = detail::resolve_path(get_as<std::string>(p["path"], "policy.path"), base_dir);
      std::ifstream in(path);
      if (!in) throw ConfigError("policy.path", "cannot read policy file " + path);
      std::stringstream ss;
      ss << in.rdbuf();
      c.policy_source = ss.str();
    }
  }
  if (auto it = j.find("attributes"); it != j.end()) {
    auto names = get_as<std::vector<std::string>>(*it, "attributes");
    c.attribute_schema = {names.begin(), names.end()};
  }
  if (auto it = j.find("principals"); it != j.end()) detail::parse_principals(*it, c);
  if (auto it = j.find("admin_keys"); it != j.end())
    c.admin_keys = get_as<std::vector<std::string>>(*it, "admin_keys");
  if (auto it = j.find("backend"); it != j.end()) detail::parse_backend(*it, c, base_dir);
  if (auto it = j.find("audit"); it != j.end())
    c.audit_path = detail::resolve_path(
        get_as<std::string>(it->value("path", nlohmann::json("audit.jsonl")), "audit.path"),
        base_dir);
  else
    c.audit_path = detail::resolve_path(c.audit_path, base_dir);
  if (auto it = j.find("state"); it != j.end())
    c.state_path = detail::resolve_path(
        get_as<std::string>(it->value("path", nlohmann::json("")), "state.path"), base_dir);
  if (auto it = j.find("server"); it != j.end()) {
    c.host = get_as<std::string>(it->value("host", nlohmann::json(c.host)), "server.host");
    c.port = get_as<int>(it->value("port", nlohmann::json(c.port)), "server.port");
  }
  if (auto it = j.find("noise_seed"); it != j.end())
    c.noise_seed = get_as<std::uint64_t>(*it, "noise_seed");
  finalize_config(c);
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open configuration file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

inline SensitivityEngine make_engine(const Config& c) {
  return SensitivityEngine(c.recognizers, c.sensitivity);
}

}  // namespace trustgate
