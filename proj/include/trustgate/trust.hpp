#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trustgate/common.hpp"

namespace trustgate {

// ── Request context attributes ───────────────────────────────────────────────

enum class NetworkZone { Trusted, Vpn, Public };
enum class DevicePosture { Managed, Unmanaged, Unknown };
enum class AuthStrength { Mfa, Password, Anonymous };

inline std::string_view to_string(NetworkZone z) {
  switch (z) {
    case NetworkZone::Trusted: return "trusted";
    case NetworkZone::Vpn:     return "vpn";
    case NetworkZone::Public:  return "public";
  }
  return "public";
}

inline std::string_view to_string(DevicePosture d) {
  switch (d) {
    case DevicePosture::Managed:   return "managed";
    case DevicePosture::Unmanaged: return "unmanaged";
    case DevicePosture::Unknown:   return "unknown";
  }
  return "unknown";
}

inline std::string_view to_string(AuthStrength a) {
  switch (a) {
    case AuthStrength::Mfa:       return "mfa";
    case AuthStrength::Password:  return "password";
    case AuthStrength::Anonymous: return "anonymous";
  }
  return "anonymous";
}

inline std::optional<NetworkZone> network_zone_from_string(std::string_view s) {
  if (s == "trusted") return NetworkZone::Trusted;
  if (s == "vpn") return NetworkZone::Vpn;
  if (s == "public") return NetworkZone::Public;
  return std::nullopt;
}

inline std::optional<DevicePosture> device_posture_from_string(std::string_view s) {
  if (s == "managed") return DevicePosture::Managed;
  if (s == "unmanaged") return DevicePosture::Unmanaged;
  if (s == "unknown") return DevicePosture::Unknown;
  return std::nullopt;
}

inline std::optional<AuthStrength> auth_strength_from_string(std::string_view s) {
  if (s == "mfa") return AuthStrength::Mfa;
  if (s == "password") return AuthStrength::Password;
  if (s == "anonymous") return AuthStrength::Anonymous;
  return std::nullopt;
}

struct Principal {
  std::string id;
  std::set<std::string> roles;
  std::map<std::string, std::string> attributes;
};

struct RequestContext {
  std::string purpose;
  NetworkZone network_zone = NetworkZone::Public;
  DevicePosture device_posture = DevicePosture::Unknown;
  AuthStrength auth_strength = AuthStrength::Anonymous;
  Instant timestamp{};
};

// ── Configuration ────────────────────────────────────────────────────────────

struct TrustWeights {
  double role = 0.4;
  double purpose = 0.2;
  double context = 0.2;
  double behavior = 0.2;
  std::array<double, 3> thresholds{0.30, 0.60, 0.85};

  // Throws ConfigError naming "trust.weights" or "trust.thresholds".
  void validate() const {
    for (double w : {role, purpose, context, behavior})
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ConfigError("trust.weights", "weights must be finite and non-negative");
    double sum = role + purpose + context + behavior;
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("trust.weights", "weights must sum to 1 (got " + std::to_string(sum) + ")");
    auto [t1, t2, t3] = thresholds;
    if (!(0.0 < t1 && t1 < t2 && t2 < t3 && t3 < 1.0))
      throw ConfigError("trust.thresholds", "thresholds must satisfy 0 < t1 < t2 < t3 < 1");
  }
};

struct FactorTables {
  std::map<NetworkZone, double> network{
      {NetworkZone::Trusted, 1.0}, {NetworkZone::Vpn, 0.7}, {NetworkZone::Public, 0.2}};
  std::map<DevicePosture, double> device{{DevicePosture::Managed, 1.0},
                                         {DevicePosture::Unmanaged, 0.3},
                                         {DevicePosture::Unknown, 0.1}};
  std::map<AuthStrength, double> auth{
      {AuthStrength::Mfa, 1.0}, {AuthStrength::Password, 0.5}, {AuthStrength::Anonymous, 0.0}};
};

struct TrustConfig {
  TrustWeights weights;
  FactorTables factors;
  std::map<std::string, double> role_weights;
  std::map<std::string, double> purpose_scores;
  double unknown_purpose_score = 0.5;
};

// ── Scores ───────────────────────────────────────────────────────────────────

struct TrustComponents {
  double role = 0.0;
  double purpose = 0.0;
  double context = 0.0;
  double behavior = 0.0;
};

struct TrustScore {
  double raw = 0.0;
  int tier = 0;
  TrustComponents components;
  Instant computed_at{};
};

inline double compute_context_score(const RequestContext& ctx, const FactorTables& f = {}) {
  return (f.network.at(ctx.network_zone) + f.device.at(ctx.device_posture) +
          f.auth.at(ctx.auth_strength)) /
         3.0;
}

// Boundary values belong to the higher tier.
inline int tier_of(double raw, const std::array<double, 3>& thresholds = {0.30, 0.60, 0.85}) {
  if (raw >= thresholds[2]) return 3;
  if (raw >= thresholds[1]) return 2;
  if (raw >= thresholds[0]) return 1;
  return 0;
}

class UnknownRoleError : public std::runtime_error {
 public:
  explicit UnknownRoleError(const std::string& role)
      : std::runtime_error("role not present in role-weight map: " + role) {}
};

// Most-privileged role governs; a principal with no roles scores 0.
inline double role_score(const Principal& p, const std::map<std::string, double>& role_weights) {
  double best = 0.0;
  for (const auto& r : p.roles) {
    auto it = role_weights.find(r);
    if (it == role_weights.end()) throw UnknownRoleError(r);
    best = std::max(best, it->second);
  }
  return best;
}

inline double purpose_score(const std::string& purpose, const TrustConfig& cfg) {
  auto it = cfg.purpose_scores.find(purpose);
  return it == cfg.purpose_scores.end() ? cfg.unknown_purpose_score : it->second;
}

inline TrustScore score_components(const TrustComponents& c, const TrustWeights& w) {
  TrustScore s;
  s.components = c;
  double raw = w.role * c.role + w.purpose * c.purpose + w.context * c.context +
               w.behavior * c.behavior;
  s.raw = std::clamp(raw, 0.0, 1.0);
  s.tier = tier_of(s.raw, w.thresholds);
  return s;
}

inline TrustScore compute_trust_score(const Principal& principal, const RequestContext& ctx,
                                      double behavior, const TrustConfig& cfg) {
  if (!(behavior >= 0.0 && behavior <= 1.0))
    throw std::invalid_argument("behavior component must lie in [0,1]");
  TrustComponents c;
  c.role = role_score(principal, cfg.role_weights);
  c.purpose = purpose_score(ctx.purpose, cfg);
  c.context = compute_context_score(ctx, cfg.factors);
  c.behavior = behavior;
  TrustScore s = score_components(c, cfg.weights);
  s.computed_at = now_utc();
  return s;
}

}  // namespace trustgate
