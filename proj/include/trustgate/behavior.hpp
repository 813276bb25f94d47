#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trustgate/common.hpp"

namespace trustgate {

enum class BehaviorAction { Query, SensitiveAccess, Export, Violation, LoginFail };

inline constexpr std::size_t kActionCount = 5;

inline std::string_view to_string(BehaviorAction a) {
  switch (a) {
    case BehaviorAction::Query:           return "QUERY";
    case BehaviorAction::SensitiveAccess: return "SENSITIVE_ACCESS";
    case BehaviorAction::Export:          return "EXPORT";
    case BehaviorAction::Violation:       return "VIOLATION";
    case BehaviorAction::LoginFail:       return "LOGIN_FAIL";
  }
  return "QUERY";
}

inline std::optional<BehaviorAction> action_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kActionCount; ++i) {
    auto a = static_cast<BehaviorAction>(i);
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

struct BehaviorEvent {
  std::string principal_id;
  BehaviorAction action = BehaviorAction::Query;
  Instant timestamp{};
  bool compliant = true;
};

// Beta(alpha, beta) posterior over the compliance rate plus a bounded window
// of the most recent actions.
struct BehaviorState {
  double alpha = 1.0;
  double beta = 1.0;
  std::deque<BehaviorAction> recent;
  std::size_t capacity = 50;
};

inline constexpr double kDefaultViolationWeight = 3.0;

inline BehaviorState update_posterior(BehaviorState state, const BehaviorEvent& event,
                                      double violation_weight = kDefaultViolationWeight) {
  if (!(violation_weight >= 1.0)) throw std::invalid_argument("violation weight must be >= 1");
  if (event.compliant) {
    state.alpha += 1.0;
  } else {
    state.beta += violation_weight;
  }
  state.recent.push_back(event.action);
  while (state.recent.size() > state.capacity) state.recent.pop_front();
  return state;
}

inline double behavior_score(const BehaviorState& s) { return s.alpha / (s.alpha + s.beta); }

// ── Hidden Markov model ──────────────────────────────────────────────────────

inline constexpr double kLogLikFloor = -1e9;
inline constexpr double kDefaultAnomalyThreshold = -2.5;

struct HmmModel {
  std::vector<std::string> states;
  std::vector<std::string> symbols;
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;  // [from][to]
  std::vector<std::vector<double>> emission;    // [state][symbol]

  std::size_t state_count() const { return states.size(); }
  std::size_t symbol_count() const { return symbols.size(); }

  // Throws std::invalid_argument naming the first malformed row.
  void validate(double tol = 1e-9) const {
    std::size_t n = states.size();
    if (n == 0) throw std::invalid_argument("model has no states");
    if (symbols.empty()) throw std::invalid_argument("model has no symbols");
    auto check_row = [&](const std::vector<double>& row, std::size_t width,
                         const std::string& what) {
      if (row.size() != width) throw std::invalid_argument(what + " has wrong width");
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p))
          throw std::invalid_argument(what + " has a negative or non-finite entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) throw std::invalid_argument(what + " does not sum to 1");
    };
    check_row(initial, n, "initial");
    if (transition.size() != n) throw std::invalid_argument("transition has wrong row count");
    if (emission.size() != n) throw std::invalid_argument("emission has wrong row count");
    for (std::size_t i = 0; i < n; ++i) {
      check_row(transition[i], n, "transition[" + std::to_string(i) + "]");
      check_row(emission[i], symbols.size(), "emission[" + std::to_string(i) + "]");
    }
  }

  std::size_t symbol_index(std::string_view name) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == name) return i;
    throw std::invalid_argument("unknown action symbol '" + std::string(name) + "'");
  }
};

// NORMAL rarely drifts into SUSPECT and SUSPECT does not linger, so sustained
// violation or export bursts score poorly under either state.
inline HmmModel default_hmm() {
  HmmModel m;
  m.states = {"NORMAL", "SUSPECT"};
  for (std::size_t i = 0; i < kActionCount; ++i)
    m.symbols.emplace_back(to_string(static_cast<BehaviorAction>(i)));
  m.initial = {0.95, 0.05};
  m.transition = {{0.97, 0.03}, {0.70, 0.30}};
  m.emission = {{0.70, 0.25, 0.03, 0.01, 0.01}, {0.20, 0.20, 0.20, 0.20, 0.20}};
  return m;
}

// Natural-log likelihood of `obs` (symbol indices) by the scaled forward
// recursion. Returns kLogLikFloor when the sequence has probability zero.
inline double forward_loglik(const HmmModel& model, std::span<const std::size_t> obs) {
  const std::size_t n = model.state_count();
  for (std::size_t o : obs)
    if (o >= model.symbol_count())
      throw std::invalid_argument("unknown action symbol index " + std::to_string(o));
  if (obs.empty()) return 0.0;

  std::vector<double> alpha(n), next(n);
  double loglik = 0.0;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double prior = 0.0;
      if (t == 0) {
        prior = model.initial[j];
      } else {
        for (std::size_t i = 0; i < n; ++i) prior += alpha[i] * model.transition[i][j];
      }
      next[j] = prior * model.emission[j][obs[t]];
      scale += next[j];
    }
    if (!(scale > 0.0)) return kLogLikFloor;
    for (std::size_t j = 0; j < n; ++j) alpha[j] = next[j] / scale;
    loglik += std::log(scale);
  }
  return loglik;
}

inline double forward_loglik(const HmmModel& model, const std::vector<std::string>& obs) {
  std::vector<std::size_t> idx;
  idx.reserve(obs.size());
  for (const auto& s : obs) idx.push_back(model.symbol_index(s));
  return forward_loglik(model, std::span<const std::size_t>(idx));
}

inline double forward_loglik(const HmmModel& model, const std::deque<BehaviorAction>& obs) {
  std::vector<std::string> names;
  for (auto a : obs) names.emplace_back(to_string(a));
  return forward_loglik(model, names);
}

struct AnomalyResult {
  bool anomalous = false;
  double mean_loglik = 0.0;
};

inline AnomalyResult flag_anomaly(const HmmModel& model, std::span<const std::size_t> obs,
                                  double threshold = kDefaultAnomalyThreshold) {
  if (obs.empty()) throw std::invalid_argument("anomaly check needs a nonempty sequence");
  double mean = forward_loglik(model, obs) / static_cast<double>(obs.size());
  return {mean < threshold, mean};
}

inline AnomalyResult flag_anomaly(const HmmModel& model, const std::vector<std::string>& obs,
                                  double threshold = kDefaultAnomalyThreshold) {
  std::vector<std::size_t> idx;
  for (const auto& s : obs) idx.push_back(model.symbol_index(s));
  return flag_anomaly(model, std::span<const std::size_t>(idx), threshold);
}

inline AnomalyResult flag_anomaly(const HmmModel& model, const std::deque<BehaviorAction>& obs,
                                  double threshold = kDefaultAnomalyThreshold) {
  std::vector<std::string> names;
  for (auto a : obs) names.emplace_back(to_string(a));
  return flag_anomaly(model, names, threshold);
}

}  // namespace trustgate
