#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustgate/audit.hpp"
#include "trustgate/backend.hpp"
#include "trustgate/behavior.hpp"
#include "trustgate/config.hpp"
#include "trustgate/disclosure.hpp"
#include "trustgate/policy.hpp"
#include "trustgate/sensitivity.hpp"
#include "trustgate/trust.hpp"

namespace trustgate {

struct ChatRequest {
  std::string principal_id;
  std::string purpose;
  std::string prompt;
  NetworkZone network_zone = NetworkZone::Public;
  DevicePosture device_posture = DevicePosture::Unknown;
  AuthStrength auth_strength = AuthStrength::Anonymous;
};

struct ChatResponse {
  std::string request_id;
  std::string text;
  int trust_tier = 0;
  SensitivityLevel sensitivity_level = SensitivityLevel::Public;
  std::vector<std::string> actions;
  std::optional<double> epsilon_spent;
};

inline nlohmann::json to_json(const ChatResponse& r) {
  nlohmann::json j{{"request_id", r.request_id},
                   {"text", r.text},
                   {"trust_tier", r.trust_tier},
                   {"sensitivity_level", std::string(to_string(r.sensitivity_level))},
                   {"actions", r.actions}};
  j["epsilon_spent"] = r.epsilon_spent ? nlohmann::json(*r.epsilon_spent) : nlohmann::json(nullptr);
  return j;
}

// HTTP-style status plus either a response or an error message.
struct CompletionResult {
  int status = 200;
  std::string request_id;
  std::optional<ChatResponse> response;
  std::string error;
  bool anomaly = false;
};

struct HealthReport {
  bool degraded = false;
  std::uint64_t audit_errors = 0;
  std::uint64_t state_errors = 0;
  std::uint64_t requests = 0;
  std::vector<std::string> warnings;
};

// The request pipeline: principal lookup, policy, trust scoring, backend
// call, detection, disclosure transform, audit and behavior update.
// Thread-safe; engines are immutable and swapped whole.
class Gateway {
 public:
  explicit Gateway(Config cfg, std::unique_ptr<Backend> backend = nullptr)
      : cfg_(std::move(cfg)),
        engine_(make_engine(cfg_)),
        policy_(std::make_shared<const policy::Policy>(cfg_.policy)),
        backend_(backend ? std::move(backend) : make_backend(cfg_.backend)),
        audit_(cfg_.audit_path) {
    for (const auto& p : cfg_.principals) {
      principals_.emplace(p.principal.id, p.principal);
      if (!p.api_key.empty()) api_keys_.emplace(p.api_key, p.principal.id);
    }
    std::random_device rd;
    salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    load_state();
  }

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  const Config& config() const noexcept { return cfg_; }
  const SensitivityEngine& engine() const noexcept { return engine_; }
  AuditLog& audit() noexcept { return audit_; }
  const Backend& backend() const noexcept { return *backend_; }

  std::optional<std::string> principal_for_key(const std::string& api_key) const {
    auto it = api_keys_.find(api_key);
    if (it == api_keys_.end()) return std::nullopt;
    return it->second;
  }

  bool is_admin_key(const std::string& key) const {
    return !key.empty() &&
           std::find(cfg_.admin_keys.begin(), cfg_.admin_keys.end(), key) != cfg_.admin_keys.end();
  }

  std::shared_ptr<const policy::Policy> current_policy() const {
    std::lock_guard lock(policy_mu_);
    return policy_;
  }

  // Parses and swaps in a new policy. Throws policy::PolicyError and leaves
  // the active policy untouched when the text does not parse.
  std::vector<policy::Diagnostic> swap_policy(const std::string& source) {
    auto next = std::make_shared<const policy::Policy>(policy::parse_policy(source));
    auto diags = policy::validate_policy(*next, cfg_.attribute_schema);
    std::lock_guard lock(policy_mu_);
    policy_ = std::move(next);
    return diags;
  }

  BehaviorState behavior_of(const std::string& principal_id) {
    auto slot = slot_for(principal_id);
    std::lock_guard lock(slot->mu);
    return slot->state;
  }

  HealthReport health() const {
    HealthReport h;
    h.audit_errors = audit_.error_count();
    h.state_errors = state_errors_.load();
    h.requests = requests_.load();
    if (h.audit_errors > 0) h.warnings.push_back("audit sink: " + audit_.last_error());
    if (h.state_errors > 0) h.warnings.push_back("state checkpoint failed");
    h.degraded = !h.warnings.empty();
    return h;
  }

  // Audits a request whose credential maps to no principal. No backend call.
  CompletionResult refuse_unauthenticated(const std::string& claimed_principal) {
    std::uint64_t seq = requests_.fetch_add(1);
    CompletionResult result;
    result.request_id = make_request_id(seq);
    AuditRecord rec;
    rec.request_id = result.request_id;
    rec.timestamp = now_utc();
    rec.principal_id = claimed_principal;
    rec.action_set = {"deny"};
    audit_.append(rec);
    result.status = 401;
    result.error = "unknown principal";
    return result;
  }

  CompletionResult handle_completion(const ChatRequest& req) {
    auto started = std::chrono::steady_clock::now();
    std::uint64_t seq = requests_.fetch_add(1);
    CompletionResult result;
    result.request_id = make_request_id(seq);

    AuditRecord rec;
    rec.request_id = result.request_id;
    rec.timestamp = now_utc();
    rec.principal_id = req.principal_id;
    auto finish = [&](int status, std::string error) {
      rec.latency_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
      audit_.append(rec);
      result.status = status;
      result.error = std::move(error);
      return result;
    };

    auto pit = principals_.find(req.principal_id);
    if (pit == principals_.end()) {
      rec.action_set = {"deny"};
      return finish(401, "unknown principal");
    }
    const Principal& principal = pit->second;

    RequestContext ctx;
    ctx.purpose = req.purpose;
    ctx.network_zone = req.network_zone;
    ctx.device_posture = req.device_posture;
    ctx.auth_strength = req.auth_strength;
    ctx.timestamp = rec.timestamp;

    auto decision = policy::evaluate(*current_policy(), principal, ctx, "completions", "invoke");
    if (decision.effect == policy::Effect::Deny) {
      rec.action_set = {"deny"};
      record_event(principal.id, BehaviorAction::Violation, false, rec.timestamp);
      return finish(403, "denied by access policy");
    }

    BehaviorState before = behavior_of(principal.id);
    double behavior = behavior_score(before);
    if (!before.recent.empty()) {
      auto anomaly = flag_anomaly(cfg_.hmm, before.recent, cfg_.anomaly_threshold);
      if (anomaly.anomalous) {
        rec.anomaly_flag = true;
        result.anomaly = true;
        behavior = 0.0;
      }
    }
    TrustScore trust = compute_trust_score(principal, ctx, behavior, cfg_.trust);
    rec.tier = trust.tier;
    rec.raw_score = trust.raw;

    rec.backend_id = backend_->id();
    std::string raw_output;
    try {
      raw_output = backend_->generate(req.prompt);
    } catch (const BackendError& e) {
      return finish(502, e.what());
    } catch (const std::exception& e) {
      return finish(502, std::string("backend failure: ") + e.what());
    }
    rec.output_hash = sha256_hex(raw_output);

    SensitivityReport report = engine_.analyze(raw_output);
    SensitivityLevel effective = report.level;
    if (cfg_.scan_prompt) {
      auto prompt_report = engine_.analyze(req.prompt);
      effective = std::max(effective, prompt_report.level);
    }
    report.level = effective;

    Action action = decide_action(cfg_.disclosure, trust.tier, report.level);
    if (auto it = decision.obligations.find(std::string(policy::kMaxDisclosableLevel));
        it != decision.obligations.end()) {
      auto cap = level_from_string(it->second);
      if (cap && report.level > *cap) action = Action::Deny;
    }
    UniformSource rng = noise_source(seq);
    ControlledOutput out =
        apply_action(action, raw_output, report, trust.tier, cfg_.disclosure, engine_, rng);

    rec.level = report.level;
    rec.entity_type_counts = report.counts;
    for (auto a : out.action_set) rec.action_set.emplace_back(to_string(a));

    ChatResponse resp;
    resp.request_id = result.request_id;
    resp.text = std::move(out.text);
    resp.trust_tier = trust.tier;
    resp.sensitivity_level = report.level;
    resp.actions = rec.action_set;
    resp.epsilon_spent = out.epsilon_spent;
    result.response = std::move(resp);

    finish(200, "");
    record_event(principal.id,
                 report.level >= SensitivityLevel::Confidential ? BehaviorAction::SensitiveAccess
                                                                : BehaviorAction::Query,
                 true, rec.timestamp);
    return result;
  }

 private:
  struct Slot {
    std::mutex mu;
    BehaviorState state;
  };

  std::shared_ptr<Slot> slot_for(const std::string& id) {
    std::lock_guard lock(slots_mu_);
    auto& s = slots_[id];
    if (!s) {
      s = std::make_shared<Slot>();
      s->state.capacity = cfg_.behavior_window;
    }
    return s;
  }

  void record_event(const std::string& id, BehaviorAction action, bool compliant, Instant when) {
    auto slot = slot_for(id);
    {
      std::lock_guard lock(slot->mu);
      slot->state = update_posterior(slot->state, {id, action, when, compliant},
                                     cfg_.violation_weight);
    }
    checkpoint();
  }

  std::string make_request_id(std::uint64_t seq) const {
    // The underscore keeps the hex run from starting at a word boundary.
    char buf[48];
    std::snprintf(buf, sizeof buf, "req_%08llx%08llx",
                  static_cast<unsigned long long>(salt_ & 0xffffffffULL),
                  static_cast<unsigned long long>(seq & 0xffffffffULL));
    return buf;
  }

  UniformSource noise_source(std::uint64_t seq) const {
    if (cfg_.noise_seed) return UniformSource(*cfg_.noise_seed * 0x9E3779B97F4A7C15ULL + seq);
    return UniformSource();
  }

  void load_state() {
    if (cfg_.state_path.empty()) return;
    std::ifstream in(cfg_.state_path);
    if (!in) return;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      for (auto& [id, v] : j.items()) {
        auto slot = slot_for(id);
        slot->state.alpha = v.at("alpha").get<double>();
        slot->state.beta = v.at("beta").get<double>();
        for (const auto& name : v.value("recent", nlohmann::json::array()))
          if (auto a = action_from_string(name.get<std::string>()))
            slot->state.recent.push_back(*a);
        while (slot->state.recent.size() > slot->state.capacity) slot->state.recent.pop_front();
      }
    } catch (const std::exception&) {
      state_errors_.fetch_add(1);
    }
  }

  // Write-then-rename so the state file is never half written.
  void checkpoint() {
    if (cfg_.state_path.empty()) return;
    std::lock_guard lock(state_mu_);
    nlohmann::json j = nlohmann::json::object();
    {
      std::lock_guard slots_lock(slots_mu_);
      for (const auto& [id, slot] : slots_) {
        std::lock_guard l(slot->mu);
        std::vector<std::string> recent;
        for (auto a : slot->state.recent) recent.emplace_back(to_string(a));
        j[id] = {{"alpha", slot->state.alpha}, {"beta", slot->state.beta}, {"recent", recent}};
      }
    }
    std::string tmp = cfg_.state_path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << j.dump() << '\n';
      if (!out) {
        state_errors_.fetch_add(1);
        return;
      }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, cfg_.state_path, ec);
    if (ec) state_errors_.fetch_add(1);
  }

  Config cfg_;
  SensitivityEngine engine_;
  mutable std::mutex policy_mu_;
  std::shared_ptr<const policy::Policy> policy_;
  std::unique_ptr<Backend> backend_;
  AuditLog audit_;
  std::map<std::string, Principal> principals_;
  std::map<std::string, std::string> api_keys_;
  std::mutex slots_mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::mutex state_mu_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> state_errors_{0};
  std::uint64_t salt_ = 0;
};

}  // namespace trustgate
