#include <gtest/gtest.h>

#include <random>

#include "trustgate/sensitivity.hpp"

using namespace trustgate;

namespace {

// Left-to-right Luhn using the doubled-digit lookup table.
bool luhn_oracle(const std::string& raw) {
  std::string d;
  for (char c : raw) {
    if (c == ' ' || c == '-') continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    d.push_back(c);
  }
  if (d.size() < 12 || d.size() > 19) return false;
  static const int doubled[] = {0, 2, 4, 6, 8, 1, 3, 5, 7, 9};
  int sum = 0;
  bool double_this = d.size() % 2 == 0;
  for (char c : d) {
    int v = c - '0';
    sum += double_this ? doubled[v] : v;
    double_this = !double_this;
  }
  return sum % 10 == 0;
}

Recognizer ssn_recognizer(double base = 0.6) {
  return {"ssn", "US_SSN", R"(\d{3}-\d{2}-\d{4})", base, Validator::None, {"ssn"}, false};
}

EntitySpan span(std::size_t s, std::size_t e, std::string type, double conf = 0.9) {
  return {s, e, std::move(type), conf, "r"};
}

}  // namespace

// ── Luhn ─────────────────────────────────────────────────────────────────────

TEST(Luhn, KnownValues) {
  EXPECT_TRUE(luhn_valid("4111111111111111"));
  EXPECT_FALSE(luhn_valid("4111111111111112"));
  EXPECT_FALSE(luhn_valid(""));
  EXPECT_TRUE(luhn_valid("4111 1111 1111 1111"));
  EXPECT_TRUE(luhn_valid("4111-1111-1111-1111"));
  EXPECT_FALSE(luhn_valid("4111x1111111111111"));
  EXPECT_FALSE(luhn_valid("00000000000"));    // 11 digits
  EXPECT_TRUE(luhn_valid("000000000000"));    // 12 digits, checksum 0
  EXPECT_FALSE(luhn_valid("00000000000000000000"));  // 20 digits
}

TEST(Luhn, AgreesWithIndependentOracle) {
  std::mt19937_64 rng(99);
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    std::size_t len = rng() % 23;
    std::string s;
    for (std::size_t k = 0; k < len; ++k) {
      auto r = rng() % 40;
      s.push_back(r < 36 ? static_cast<char>('0' + r % 10) : (r < 38 ? ' ' : (r < 39 ? '-' : 'x')));
    }
    bool got = luhn_valid(s);
    ASSERT_EQ(got, luhn_oracle(s)) << '"' << s << '"';
    accepted += got;
  }
  EXPECT_GT(accepted, 100);
}

// ── Detection ────────────────────────────────────────────────────────────────

TEST(Detect, SsnOffsetsAreCodePointIndices) {
  auto spans = detect("SSN: 123-45-6789", {ssn_recognizer()});
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].start, 5u);
  EXPECT_EQ(spans[0].end, 16u);
  EXPECT_EQ(spans[0].entity_type, "US_SSN");
}

TEST(Detect, OffsetsCountCodePointsNotBytes) {
  std::string text = "Ünïcødé SSN 123-45-6789";
  auto spans = detect(text, {ssn_recognizer()});
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].start, 12u);
  EXPECT_EQ(spans[0].end, 23u);
  EXPECT_EQ(Utf8Text(text).slice(spans[0].start, spans[0].end), "123-45-6789");
}

TEST(Detect, EmptyTextYieldsNothing) {
  EXPECT_TRUE(detect("", default_recognizers()).empty());
}

TEST(Detect, LuhnValidatorDropsBadCards) {
  EXPECT_TRUE(detect("card 4111111111111112", default_recognizers()).empty());
  auto ok = detect("card 4111111111111111", default_recognizers());
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].entity_type, "CREDIT_CARD");
  EXPECT_NEAR(ok[0].confidence, 1.0, 1e-12);
}

TEST(Detect, ContextWordBoostsConfidence) {
  auto boosted = detect("SSN: 123-45-6789", {ssn_recognizer(0.6)});
  EXPECT_NEAR(boosted[0].confidence, 0.8, 1e-12);
  auto plain = detect("ref 123-45-6789", {ssn_recognizer(0.6)});
  EXPECT_NEAR(plain[0].confidence, 0.6, 1e-12);
}

TEST(Detect, DefaultRecognizersCoverShippedTypes) {
  std::string text =
      "Dr. Alvarez (alvarez@clinic.example.org, 555-201-7788) filed MRN-0048213; "
      "paid $1,250.00 via IBAN DE89 3704 0044 0532 0130 00 and card 4111 1111 1111 1111. "
      "SSN 078-05-1120.";
  std::set<std::string> types;
  for (const auto& s : detect(text, default_recognizers())) {
    types.insert(s.entity_type);
    EXPECT_LT(s.start, s.end);
    EXPECT_LE(s.end, Utf8Text(text).size());
  }
  EXPECT_EQ(types, (std::set<std::string>{"PERSON_NAME", "EMAIL", "PHONE", "MEDICAL_ID", "AMOUNT",
                                          "IBAN", "CREDIT_CARD", "US_SSN"}));
}

TEST(Detect, PlaceholdersMatchNoShippedRecognizer) {
  std::string text;
  for (const auto& [type, level] : default_type_levels()) text += "<REDACTED:" + type + "> ";
  EXPECT_TRUE(detect(text, default_recognizers()).empty());
}

TEST(Detect, SpansReproducePatternMatches) {
  std::string text = "a 123-45-6789 b 987-65-4321 c";
  for (const auto& s : detect(text, {ssn_recognizer()})) {
    std::string sub(Utf8Text(text).slice(s.start, s.end));
    EXPECT_TRUE(std::regex_match(sub, std::regex(R"(\d{3}-\d{2}-\d{4})"))) << sub;
  }
}

TEST(Detect, Deterministic) {
  SensitivityEngine engine;
  std::string text = "Email jo@example.com, SSN 078-05-1120, card 4111111111111111";
  auto a = engine.analyze(text), b = engine.analyze(text);
  EXPECT_EQ(a.spans, b.spans);
  EXPECT_EQ(a.level, b.level);
  EXPECT_EQ(a.counts, b.counts);
}

TEST(Detect, BadRecognizersRejected) {
  EXPECT_THROW(compile_recognizer({"x", "T", "([", 0.5, Validator::None, {}, false}),
               std::invalid_argument);
  EXPECT_THROW(compile_recognizer({"x", "T", "a", 0.0, Validator::None, {}, false}),
               std::invalid_argument);
  EXPECT_THROW(SensitivityEngine({{"x", "UNMAPPED", "a", 0.5, Validator::None, {}, false}}, {}),
               std::invalid_argument);
}

// ── Context adjustment ───────────────────────────────────────────────────────

TEST(ContextAdjust, BoostWithinWindow) {
  std::string text = "ssn 123-45-6789";
  auto s = context_adjust(span(4, 15, "US_SSN", 0.6), text, {"ssn"});
  EXPECT_NEAR(s.confidence, 0.8, 1e-12);
}

TEST(ContextAdjust, CapsAtOne) {
  auto s = context_adjust(span(4, 15, "US_SSN", 0.95), std::string_view("SSN 123-45-6789"), {"ssn"});
  EXPECT_DOUBLE_EQ(s.confidence, 1.0);
}

TEST(ContextAdjust, NoWordsMeansUnchanged) {
  auto in = span(4, 15, "US_SSN", 0.6);
  EXPECT_EQ(context_adjust(in, std::string_view("ssn 123-45-6789"), {}), in);
}

TEST(ContextAdjust, WordOutsideWindowIgnored) {
  std::string text = "ssn" + std::string(40, ' ') + "123-45-6789";
  auto s = context_adjust(span(43, 54, "US_SSN", 0.6), text, {"ssn"});
  EXPECT_DOUBLE_EQ(s.confidence, 0.6);
  auto near = context_adjust(span(43, 54, "US_SSN", 0.6), text, {"ssn"}, 45);
  EXPECT_NEAR(near.confidence, 0.8, 1e-12);
}

TEST(ContextAdjust, CaseInsensitive) {
  auto s = context_adjust(span(16, 27, "US_SSN", 0.4), std::string_view("Social Security 123-45-6789"),
                          {"social security"});
  EXPECT_NEAR(s.confidence, 0.6, 1e-12);
}

// ── Merging ──────────────────────────────────────────────────────────────────

TEST(Merge, SameTypeOverlapUnion) {
  auto out = merge_spans({span(15, 25, "A", 0.7), span(10, 20, "A", 0.9)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].start, 10u);
  EXPECT_EQ(out[0].end, 25u);
  EXPECT_DOUBLE_EQ(out[0].confidence, 0.9);
}

TEST(Merge, TouchingSameTypeMerges) {
  auto out = merge_spans({span(0, 5, "A"), span(5, 9, "A")});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].end, 9u);
}

TEST(Merge, CrossTypeRetained) {
  auto out = merge_spans({span(15, 25, "B"), span(10, 20, "A")});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].entity_type, "A");
  EXPECT_EQ(out[1].entity_type, "B");
}

TEST(Merge, DisjointOrderNormalized) {
  auto out = merge_spans({span(10, 15, "A"), span(0, 5, "A")});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].start, 0u);
  EXPECT_EQ(out[1].start, 10u);
}

// ── Classification ───────────────────────────────────────────────────────────

TEST(Classify, Examples) {
  auto levels = default_type_levels();
  EXPECT_EQ(classify_document({}, levels).level, SensitivityLevel::Public);
  EXPECT_EQ(classify_document({span(0, 5, "EMAIL"), span(6, 17, "US_SSN")}, levels).level,
            SensitivityLevel::Secret);
  auto low = classify_document({span(0, 16, "CREDIT_CARD", 0.3)}, levels, 0.5);
  EXPECT_EQ(low.level, SensitivityLevel::Public);
  EXPECT_EQ(low.counts.at("CREDIT_CARD"), 1);
}

TEST(Classify, AddingASpanNeverLowersLevel) {
  auto levels = default_type_levels();
  std::vector<std::string> types;
  for (const auto& [t, l] : levels) types.push_back(t);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> conf(0.05, 1.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<EntitySpan> spans;
    for (std::size_t k = rng() % 5; k > 0; --k)
      spans.push_back(span(k * 10, k * 10 + 5, types[rng() % types.size()], conf(rng)));
    auto before = classify_document(spans, levels).level;
    spans.push_back(span(100, 105, types[rng() % types.size()], conf(rng)));
    ASSERT_GE(classify_document(spans, levels).level, before);
  }
}

TEST(Engine, AnalyzeCombinesDetectionMergeAndClassification) {
  SensitivityEngine engine;
  auto r = engine.analyze("Discharge summary for chart MRN-0048213. Reference 123-45-6789.");
  EXPECT_EQ(r.level, SensitivityLevel::Confidential);
  EXPECT_EQ(r.counts.at("US_SSN"), 1);
  EXPECT_EQ(r.counts.at("MEDICAL_ID"), 1);
  auto boosted = engine.analyze("The patient SSN is 078-05-1120.");
  EXPECT_EQ(boosted.level, SensitivityLevel::Secret);
  EXPECT_TRUE(engine.is_numeric("AMOUNT"));
  EXPECT_FALSE(engine.is_numeric("US_SSN"));
}
