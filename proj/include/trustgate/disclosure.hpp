#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cwctype>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trustgate/common.hpp"
#include "trustgate/sensitivity.hpp"
#include "trustgate/trust.hpp"
#include "trustgate/utf8.hpp"

namespace trustgate {

enum class Action { Pass, Summarize, Redact, Noise, Deny };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::Pass:      return "pass";
    case Action::Summarize: return "summarize";
    case Action::Redact:    return "redact";
    case Action::Noise:     return "noise";
    case Action::Deny:      return "deny";
  }
  return "deny";
}

inline std::optional<Action> action_from_name(std::string_view s) {
  for (auto a : {Action::Pass, Action::Summarize, Action::Redact, Action::Noise, Action::Deny})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

// deny > redact = noise > summarize > pass
inline int strictness(Action a) {
  switch (a) {
    case Action::Pass:      return 0;
    case Action::Summarize: return 1;
    case Action::Redact:
    case Action::Noise:     return 3;
    case Action::Deny:      return 4;
  }
  return 4;
}

inline int strictness(const std::vector<Action>& actions) {
  int s = 0;
  for (auto a : actions) s = std::max(s, strictness(a));
  return s;
}

inline constexpr std::string_view kDenialNotice = "[request denied by disclosure policy]";
inline constexpr std::string_view kDefaultPlaceholder = "<REDACTED:{TYPE}>";

struct DisclosureMatrix {
  // cells[level][tier]
  std::array<std::array<Action, 4>, 4> cells{{
      {Action::Pass, Action::Pass, Action::Pass, Action::Pass},
      {Action::Summarize, Action::Pass, Action::Pass, Action::Pass},
      {Action::Deny, Action::Redact, Action::Pass, Action::Pass},
      {Action::Deny, Action::Deny, Action::Redact, Action::Pass},
  }};
  std::string placeholder{kDefaultPlaceholder};
  std::array<double, 4> epsilon{0.5, 1.0, 2.0, 4.0};
  std::size_t summary_max_sentences = 5;
  double noise_sensitivity = 1.0;

  Action at(int tier, SensitivityLevel level) const {
    return cells.at(static_cast<std::size_t>(level)).at(static_cast<std::size_t>(tier));
  }

  // Rows (fixed level) must not get stricter as tier rises; columns (fixed
  // tier) must not get laxer as level rises. Throws ConfigError naming the
  // first offending cell.
  void validate() const {
    auto cell_key = [](int level, int tier) {
      return "disclosure.matrix." + std::string(kLevelNames[level]) + "[" +
             std::to_string(tier) + "]";
    };
    for (int l = 0; l < 4; ++l)
      for (int t = 1; t < 4; ++t)
        if (strictness(cells[l][t]) > strictness(cells[l][t - 1]))
          throw ConfigError(cell_key(l, t), "tier " + std::to_string(t) +
                                                " is stricter than tier " +
                                                std::to_string(t - 1) + " at the same level");
    for (int t = 0; t < 4; ++t)
      for (int l = 1; l < 4; ++l)
        if (strictness(cells[l][t]) < strictness(cells[l - 1][t]))
          throw ConfigError(cell_key(l, t), std::string("level ") +
                                                std::string(kLevelNames[l]) +
                                                " is laxer than a lower level at the same tier");
    for (int t = 0; t < 4; ++t)
      if (!(epsilon[t] > 0.0) || !std::isfinite(epsilon[t]))
        throw ConfigError("disclosure.epsilon", "every tier epsilon must be positive");
    if (placeholder.find("{TYPE}") == std::string::npos)
      throw ConfigError("disclosure.placeholder", "template must contain {TYPE}");
    if (!(noise_sensitivity > 0.0))
      throw ConfigError("disclosure.noise_sensitivity", "must be positive");
  }
};

inline Action decide_action(const DisclosureMatrix& m, int tier, SensitivityLevel level) {
  if (tier < 0 || tier > 3) throw std::out_of_range("tier must lie in 0..3");
  return m.at(tier, level);
}

inline std::string render_placeholder(std::string_view tmpl, std::string_view type) {
  std::string out(tmpl);
  for (auto pos = out.find("{TYPE}"); pos != std::string::npos;
       pos = out.find("{TYPE}", pos + type.size()))
    out.replace(pos, 6, type);
  return out;
}

// ── Redaction ────────────────────────────────────────────────────────────────

struct Edit {
  std::size_t start;  // code points
  std::size_t end;
  std::string replacement;
};

// Applies non-overlapping edits right to left; bytes outside edits are kept
// verbatim.
inline std::string apply_edits(std::string_view text, std::vector<Edit> edits) {
  Utf8Text idx(text);
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.start > b.start; });
  std::string out(text);
  std::size_t limit = idx.size();
  for (const auto& e : edits) {
    if (e.start >= e.end || e.end > limit)
      throw std::invalid_argument("edits overlap or fall outside the text");
    auto b0 = idx.byte_offset(e.start), b1 = idx.byte_offset(e.end);
    out.replace(b0, b1 - b0, e.replacement);
    limit = e.start;
  }
  return out;
}

// Spans must already be merged; overlapping input is rejected.
inline std::string redact(std::string_view text, const std::vector<EntitySpan>& spans,
                          std::string_view tmpl = kDefaultPlaceholder) {
  std::vector<Edit> edits;
  edits.reserve(spans.size());
  for (const auto& s : spans) edits.push_back({s.start, s.end, render_placeholder(tmpl, s.entity_type)});
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < edits.size(); ++i)
    if (edits[i].start < edits[i - 1].end)
      throw std::invalid_argument("overlapping spans must be merged before redaction");
  return apply_edits(text, std::move(edits));
}

// ── Laplace mechanism ────────────────────────────────────────────────────────

// Draws u uniformly from the open interval (-1/2, 1/2) using 53 random bits.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : gen_(seed) {}
  UniformSource() : gen_(std::random_device{}()) {}

  double operator()() {
    std::uint64_t bits = gen_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53 - 0.5;
  }

 private:
  std::mt19937_64 gen_;
};

// Inverse-CDF sample at a given u in (-1/2, 1/2).
inline double laplace_noise_at(double value, double sensitivity, double epsilon, double u) {
  if (!(sensitivity > 0.0)) throw std::invalid_argument("sensitivity must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(u > -0.5 && u < 0.5)) throw std::invalid_argument("u must lie in (-1/2, 1/2)");
  double b = sensitivity / epsilon;
  double sgn = (u > 0) - (u < 0);
  return value - b * sgn * std::log1p(-2.0 * std::abs(u));
}

template <typename Uniform>
double laplace_noise(double value, double sensitivity, double epsilon, Uniform&& uniform) {
  return laplace_noise_at(value, sensitivity, epsilon, uniform());
}

// ── Extractive summary ───────────────────────────────────────────────────────

struct Sentence {
  std::size_t start;  // code points, whitespace trimmed
  std::size_t end;
};

inline std::vector<Sentence> split_sentences(const std::wstring& w) {
  std::vector<Sentence> out;
  auto is_space = [](wchar_t c) { return std::iswspace(static_cast<wint_t>(c)) != 0; };
  std::size_t i = 0;
  while (i < w.size()) {
    while (i < w.size() && is_space(w[i])) ++i;
    if (i >= w.size()) break;
    std::size_t start = i;
    std::size_t end = w.size();
    for (; i < w.size(); ++i) {
      wchar_t c = w[i];
      if ((c == L'.' || c == L'!' || c == L'?') && (i + 1 == w.size() || is_space(w[i + 1]))) {
        end = i + 1;
        ++i;
        break;
      }
    }
    if (end == w.size()) {
      while (end > start && is_space(w[end - 1])) --end;
      i = w.size();
    }
    out.push_back({start, end});
  }
  return out;
}

inline std::string withheld_notice(std::size_t n) {
  return "[content withheld: " + std::to_string(n) + " sensitive passages]";
}

// Keeps, in order, up to max_sentences sentences that overlap no span.
inline std::string extractive_filter_summary(std::string_view text,
                                             const std::vector<EntitySpan>& spans,
                                             std::size_t max_sentences) {
  Utf8Text idx(text);
  auto sentences = split_sentences(idx.wide());
  std::string out;
  std::size_t kept = 0;
  bool any_clean = false;
  for (const auto& s : sentences) {
    bool sensitive = std::any_of(spans.begin(), spans.end(), [&](const EntitySpan& sp) {
      return sp.start < s.end && s.start < sp.end;
    });
    if (sensitive) continue;
    any_clean = true;
    if (kept == max_sentences) break;
    if (!out.empty()) out.push_back(' ');
    out.append(idx.slice(s.start, s.end));
    ++kept;
  }
  if (!any_clean && !sentences.empty() && !spans.empty()) return withheld_notice(spans.size());
  return out;
}

// ── Transform ────────────────────────────────────────────────────────────────

struct ControlledOutput {
  std::string text;
  std::vector<Action> action_set;
  std::size_t removed_span_count = 0;
  std::optional<double> epsilon_spent;
  SensitivityLevel level = SensitivityLevel::Public;
  int tier = 0;
  std::size_t noise_fallbacks = 0;  // numeric spans that failed to parse and were redacted
};

namespace detail {

inline std::optional<double> parse_numeric(std::string_view s, std::string& prefix) {
  std::size_t i = 0;
  while (i < s.size() && !(s[i] >= '0' && s[i] <= '9') && s[i] != '-' && s[i] != '.') ++i;
  prefix.assign(s.substr(0, i));
  std::string digits;
  for (; i < s.size(); ++i)
    if (s[i] != ',') digits.push_back(s[i]);
  if (digits.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(digits, &used);
    if (used != digits.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

inline std::string format_2dp(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline ControlledOutput apply_action(Action action, std::string_view text,
                                     const SensitivityReport& report, int tier,
                                     const DisclosureMatrix& matrix,
                                     const SensitivityEngine& engine, UniformSource& rng) {
  ControlledOutput out;
  out.level = report.level;
  out.tier = tier;
  out.action_set.push_back(action);
  switch (action) {
    case Action::Pass:
      out.text = std::string(text);
      return out;
    case Action::Deny:
      out.text = std::string(kDenialNotice);
      out.removed_span_count = report.spans.size();
      return out;
    case Action::Summarize:
      out.text = extractive_filter_summary(text, report.spans, matrix.summary_max_sentences);
      out.removed_span_count = report.spans.size();
      return out;
    case Action::Redact:
    case Action::Noise:
      break;
  }

  std::vector<EntitySpan> targets;
  for (const auto& s : report.spans)
    if (level_of_type(engine.type_levels(), s.entity_type) >= SensitivityLevel::Internal)
      targets.push_back(s);
  std::sort(targets.begin(), targets.end(), span_order);

  // Overlapping spans of different types collapse into one covering edit
  // labelled with the most sensitive type.
  struct Cluster {
    std::size_t start, end;
    std::vector<const EntitySpan*> members;
  };
  std::vector<Cluster> clusters;
  for (const auto& s : targets) {
    if (!clusters.empty() && s.start < clusters.back().end) {
      clusters.back().end = std::max(clusters.back().end, s.end);
      clusters.back().members.push_back(&s);
    } else {
      clusters.push_back({s.start, s.end, {&s}});
    }
  }

  Utf8Text idx(text);
  std::vector<Edit> edits;
  bool redacted = false;
  std::size_t noised = 0;
  for (const auto& c : clusters) {
    const EntitySpan* label = c.members.front();
    for (const auto* m : c.members)
      if (level_of_type(engine.type_levels(), m->entity_type) >
          level_of_type(engine.type_levels(), label->entity_type))
        label = m;
    if (action == Action::Noise && c.members.size() == 1 && engine.is_numeric(label->entity_type)) {
      std::string prefix;
      if (auto v = detail::parse_numeric(idx.slice(c.start, c.end), prefix)) {
        double noisy = laplace_noise(*v, matrix.noise_sensitivity,
                                     matrix.epsilon[static_cast<std::size_t>(tier)], rng);
        edits.push_back({c.start, c.end, prefix + detail::format_2dp(noisy)});
        ++noised;
        continue;
      }
      ++out.noise_fallbacks;
    }
    edits.push_back({c.start, c.end, render_placeholder(matrix.placeholder, label->entity_type)});
    redacted = true;
    out.removed_span_count += c.members.size();
  }
  out.text = apply_edits(text, std::move(edits));
  if (action == Action::Noise && redacted) out.action_set.push_back(Action::Redact);
  if (noised > 0)
    out.epsilon_spent = matrix.epsilon[static_cast<std::size_t>(tier)] * static_cast<double>(noised);
  return out;
}

inline ControlledOutput transform(std::string_view text, const SensitivityReport& report,
                                  const TrustScore& trust, const DisclosureMatrix& matrix,
                                  const SensitivityEngine& engine, UniformSource& rng) {
  return apply_action(decide_action(matrix, trust.tier, report.level), text, report, trust.tier,
                      matrix, engine, rng);
}

}  // namespace trustgate
