#pragma once

#include <algorithm>
#include <cstddef>
#include <cwctype>
#include <map>
#include <memory>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "trustgate/common.hpp"
#include "trustgate/utf8.hpp"

namespace trustgate {

// Half-open [start, end) range of code point offsets.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string entity_type;
  double confidence = 0.0;
  std::string recognizer_id;

  bool operator==(const EntitySpan&) const = default;
};

inline bool span_order(const EntitySpan& a, const EntitySpan& b) {
  return std::tie(a.start, a.end, a.entity_type, a.recognizer_id) <
         std::tie(b.start, b.end, b.entity_type, b.recognizer_id);
}

enum class Validator { None, Luhn };

struct Recognizer {
  std::string id;
  std::string entity_type;
  std::string pattern;
  double base_confidence = 0.5;
  Validator validator = Validator::None;
  std::vector<std::string> context_words;
  bool numeric = false;
};

// ── Luhn ─────────────────────────────────────────────────────────────────────

// Spaces and hyphens are ignored; anything else that is not a digit rejects.
inline bool luhn_valid(std::string_view s) {
  int sum = 0;
  int count = 0;
  bool dbl = false;
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    char c = *it;
    if (c == ' ' || c == '-') continue;
    if (c < '0' || c > '9') return false;
    int d = c - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
    ++count;
  }
  return count >= 12 && count <= 19 && sum % 10 == 0;
}

// ── Span operations ──────────────────────────────────────────────────────────

inline constexpr double kContextBoost = 0.2;
inline constexpr std::size_t kContextWindow = 30;

inline std::wstring lowercase(std::wstring_view s) {
  std::wstring out(s);
  for (auto& c : out) c = static_cast<wchar_t>(std::towlower(static_cast<wint_t>(c)));
  return out;
}

// Boosts confidence when a context word lies entirely inside the `window`
// code points preceding the span.
inline EntitySpan context_adjust(EntitySpan span, std::wstring_view text,
                                 const std::vector<std::string>& context_words,
                                 std::size_t window = kContextWindow,
                                 double boost = kContextBoost) {
  if (context_words.empty() || span.start == 0) return span;
  std::size_t from = span.start > window ? span.start - window : 0;
  std::wstring left = lowercase(text.substr(from, span.start - from));
  for (const auto& word : context_words) {
    if (word.empty()) continue;
    if (left.find(lowercase(decode_utf8(word))) != std::wstring::npos) {
      span.confidence = std::min(1.0, span.confidence + boost);
      break;
    }
  }
  return span;
}

inline EntitySpan context_adjust(EntitySpan span, std::string_view utf8_text,
                                 const std::vector<std::string>& context_words,
                                 std::size_t window = kContextWindow,
                                 double boost = kContextBoost) {
  Utf8Text t(utf8_text);
  return context_adjust(std::move(span), std::wstring_view(t.wide()), context_words, window,
                        boost);
}

// Same-type spans that overlap or touch collapse into one covering span with
// the highest confidence; spans of different types are left alone.
inline std::vector<EntitySpan> merge_spans(std::vector<EntitySpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const EntitySpan& a, const EntitySpan& b) {
    return std::tie(a.entity_type, a.start, a.end, a.recognizer_id) <
           std::tie(b.entity_type, b.start, b.end, b.recognizer_id);
  });
  std::vector<EntitySpan> out;
  for (auto& s : spans) {
    if (!out.empty() && out.back().entity_type == s.entity_type && s.start <= out.back().end) {
      auto& m = out.back();
      m.end = std::max(m.end, s.end);
      if (s.confidence > m.confidence) {
        m.confidence = s.confidence;
        m.recognizer_id = s.recognizer_id;
      }
      continue;
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), span_order);
  return out;
}

// ── Classification ───────────────────────────────────────────────────────────

using TypeLevelMap = std::map<std::string, SensitivityLevel>;

inline constexpr double kCountingThreshold = 0.5;

struct SensitivityReport {
  std::vector<EntitySpan> spans;
  SensitivityLevel level = SensitivityLevel::Public;
  std::map<std::string, int> counts;  // every span, regardless of confidence
};

inline SensitivityLevel level_of_type(const TypeLevelMap& levels, const std::string& type) {
  auto it = levels.find(type);
  if (it == levels.end()) throw std::invalid_argument("entity type has no level: " + type);
  return it->second;
}

inline SensitivityReport classify_document(std::vector<EntitySpan> spans,
                                           const TypeLevelMap& levels,
                                           double counting_threshold = kCountingThreshold) {
  SensitivityReport r;
  for (const auto& s : spans) {
    SensitivityLevel l = level_of_type(levels, s.entity_type);
    ++r.counts[s.entity_type];
    if (s.confidence >= counting_threshold && l > r.level) r.level = l;
  }
  r.spans = std::move(spans);
  return r;
}

// ── Recognizer engine ────────────────────────────────────────────────────────

struct CompiledRecognizer {
  Recognizer def;
  std::wregex regex;
};

// Throws std::invalid_argument describing the problem.
inline CompiledRecognizer compile_recognizer(const Recognizer& r) {
  if (r.id.empty()) throw std::invalid_argument("recognizer id is empty");
  if (r.entity_type.empty()) throw std::invalid_argument("entity type is empty");
  if (!(r.base_confidence > 0.0 && r.base_confidence <= 1.0))
    throw std::invalid_argument("base confidence must lie in (0,1]");
  try {
    return {r, std::wregex(decode_utf8(r.pattern), std::regex::ECMAScript | std::regex::optimize)};
  } catch (const std::regex_error& e) {
    throw std::invalid_argument("pattern does not compile: " + std::string(e.what()));
  }
}

inline std::vector<EntitySpan> detect(const Utf8Text& text,
                                      const std::vector<CompiledRecognizer>& recognizers,
                                      std::size_t window = kContextWindow,
                                      double boost = kContextBoost) {
  std::vector<EntitySpan> out;
  const std::wstring& w = text.wide();
  for (const auto& rec : recognizers) {
    for (auto it = std::wsregex_iterator(w.begin(), w.end(), rec.regex);
         it != std::wsregex_iterator(); ++it) {
      const auto& m = *it;
      if (m.length(0) == 0) continue;
      EntitySpan s;
      s.start = static_cast<std::size_t>(m.position(0));
      s.end = s.start + static_cast<std::size_t>(m.length(0));
      if (rec.def.validator == Validator::Luhn && !luhn_valid(text.slice(s.start, s.end)))
        continue;
      s.entity_type = rec.def.entity_type;
      s.confidence = rec.def.base_confidence;
      s.recognizer_id = rec.def.id;
      out.push_back(context_adjust(std::move(s), std::wstring_view(w), rec.def.context_words,
                                   window, boost));
    }
  }
  std::sort(out.begin(), out.end(), span_order);
  return out;
}

inline std::vector<EntitySpan> detect(std::string_view text,
                                      const std::vector<Recognizer>& recognizers) {
  std::vector<CompiledRecognizer> compiled;
  compiled.reserve(recognizers.size());
  for (const auto& r : recognizers) compiled.push_back(compile_recognizer(r));
  return detect(Utf8Text(text), compiled);
}

inline std::vector<Recognizer> default_recognizers() {
  return {
      {"us-ssn", "US_SSN", R"(\b\d{3}-\d{2}-\d{4}\b)", 0.4, Validator::None,
       {"ssn", "social security"}, false},
      {"credit-card", "CREDIT_CARD", R"(\b\d(?:[ -]?\d){11,18}\b)", 0.8, Validator::Luhn,
       {"card", "visa", "mastercard", "amex", "credit"}, false},
      {"email", "EMAIL", R"(\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b)", 0.9,
       Validator::None, {"email", "e-mail", "mail"}, false},
      {"phone", "PHONE", R"((?:\(\d{3}\)\s?|\b\d{3}[-. ])\d{3}[-. ]\d{4}\b)", 0.5,
       Validator::None, {"phone", "tel", "call", "mobile", "cell"}, false},
      {"iban", "IBAN", R"(\b[A-Z]{2}\d{2}(?: ?[A-Z0-9]{4}){2,7}(?: ?[A-Z0-9]{1,3})?\b)", 0.7,
       Validator::None, {"iban", "account", "bank"}, false},
      {"person-name", "PERSON_NAME",
       R"(\b(?:Mr|Mrs|Ms|Dr|Prof)\.? [A-Z][a-z]+(?: [A-Z][a-z]+)?)", 0.6, Validator::None,
       {"patient", "name", "client"}, false},
      {"medical-id", "MEDICAL_ID", R"(\bMRN[-: ]?\d{6,10}\b)", 0.7, Validator::None,
       {"patient", "medical record", "chart"}, false},
      {"amount", "AMOUNT", R"(\$ ?\d{1,3}(?:,\d{3})*(?:\.\d{1,2})?(?![\d,]))", 0.6,
       Validator::None, {"amount", "balance", "paid", "salary", "total"}, true},
  };
}

inline TypeLevelMap default_type_levels() {
  using L = SensitivityLevel;
  return {{"CREDIT_CARD", L::Secret},      {"US_SSN", L::Secret},
          {"IBAN", L::Confidential},       {"MEDICAL_ID", L::Confidential},
          {"EMAIL", L::Internal},          {"PHONE", L::Internal},
          {"PERSON_NAME", L::Internal},    {"AMOUNT", L::Internal}};
}

// Immutable compiled recognizer set plus classification settings.
class SensitivityEngine {
 public:
  struct Settings {
    TypeLevelMap type_levels = default_type_levels();
    double counting_threshold = kCountingThreshold;
    std::size_t context_window = kContextWindow;
    double context_boost = kContextBoost;
  };

  SensitivityEngine() : SensitivityEngine(default_recognizers(), Settings{}) {}

  // Throws std::invalid_argument for a recognizer that fails to compile or
  // whose entity type has no configured level.
  SensitivityEngine(const std::vector<Recognizer>& recognizers, Settings settings)
      : settings_(std::move(settings)) {
    for (const auto& r : recognizers) {
      if (!settings_.type_levels.count(r.entity_type))
        throw std::invalid_argument("entity type '" + r.entity_type + "' of recognizer '" +
                                    r.id + "' has no sensitivity level");
      compiled_.push_back(compile_recognizer(r));
    }
  }

  std::vector<EntitySpan> detect(std::string_view text) const {
    return trustgate::detect(Utf8Text(text), compiled_, settings_.context_window,
                             settings_.context_boost);
  }

  SensitivityReport analyze(std::string_view text) const {
    return classify_document(merge_spans(detect(text)), settings_.type_levels,
                             settings_.counting_threshold);
  }

  bool is_numeric(const std::string& entity_type) const {
    return std::any_of(compiled_.begin(), compiled_.end(), [&](const CompiledRecognizer& c) {
      return c.def.entity_type == entity_type && c.def.numeric;
    });
  }

  const Settings& settings() const noexcept { return settings_; }
  const TypeLevelMap& type_levels() const noexcept { return settings_.type_levels; }
  std::vector<Recognizer> recognizers() const {
    std::vector<Recognizer> out;
    for (const auto& c : compiled_) out.push_back(c.def);
    return out;
  }

 private:
  Settings settings_;
  std::vector<CompiledRecognizer> compiled_;
};

}  // namespace trustgate
