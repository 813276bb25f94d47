// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every check uses an oracle or property defined here, independent
// of the library code it exercises.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "trustgate/trustgate.hpp"

using namespace trustgate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

#define CHECK_OR_FAIL(cond, msg)          \
  do {                                    \
    if (!(cond)) return Outcome{false, msg}; \
  } while (0)

const std::string kConfigDir = TRUSTGATE_CONFIG_DIR;

Config shipped_config() { return load_config(kConfigDir + "/trustgate.json"); }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() /
           ("trustgate-acceptance-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  return p;
}

// ── 1. policy truth table ────────────────────────────────────────────────────

struct Formula {
  std::string text;
  std::function<bool(const std::array<bool, 3>&)> eval;
};

Formula random_formula(std::mt19937_64& rng, int depth) {
  static const char* names[] = {"a", "b", "c"};
  int pick = depth <= 0 ? static_cast<int>(rng() % 3) : static_cast<int>(rng() % 6);
  int v = static_cast<int>(rng() % 3);
  switch (pick) {
    case 0: return {std::string(names[v]) + " == true", [v](const auto& s) { return s[v]; }};
    case 1: return {std::string(names[v]) + " == false", [v](const auto& s) { return !s[v]; }};
    case 2: return {names[v], [v](const auto& s) { return s[v]; }};
    case 3: {
      auto x = random_formula(rng, depth - 1);
      return {"not (" + x.text + ")", [x](const auto& s) { return !x.eval(s); }};
    }
    case 4: {
      auto x = random_formula(rng, depth - 1), y = random_formula(rng, depth - 1);
      return {"(" + x.text + " and " + y.text + ")",
              [x, y](const auto& s) { return x.eval(s) && y.eval(s); }};
    }
    default: {
      auto x = random_formula(rng, depth - 1), y = random_formula(rng, depth - 1);
      return {"(" + x.text + " or " + y.text + ")",
              [x, y](const auto& s) { return x.eval(s) || y.eval(s); }};
    }
  }
}

Outcome policy_oracle() {
  std::mt19937_64 rng(1001);
  int cases = 0;
  RequestContext ctx;
  for (int trial = 0; trial < 250; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::vector<Formula> conds;
    std::vector<bool> deny;
    std::string src;
    for (int i = 0; i < n; ++i) {
      deny.push_back(rng() % 3 == 0);
      conds.push_back(random_formula(rng, 3));
      src += std::string(deny.back() ? "deny" : "permit") + " r" + std::to_string(i) +
             " when " + conds.back().text + ";\n";
    }
    auto p = policy::parse_policy(src);
    for (int bits = 0; bits < 8; ++bits) {
      std::array<bool, 3> s{bool(bits & 1), bool(bits & 2), bool(bits & 4)};
      Principal who{"x", {}, {}};
      for (int k = 0; k < 3; ++k) who.attributes[std::string(1, char('a' + k))] = s[k] ? "true" : "false";
      bool any_deny = false, any_permit = false;
      for (int i = 0; i < n; ++i)
        if (conds[i].eval(s)) (deny[i] ? any_deny : any_permit) = true;
      bool expected = any_permit && !any_deny;
      bool got = policy::evaluate(p, who, ctx, "res", "act").effect == policy::Effect::Permit;
      CHECK_OR_FAIL(got == expected, "mismatch on assignment " + std::to_string(bits) + ":\n" + src);
      ++cases;
    }
  }
  CHECK_OR_FAIL(cases >= 1000, "too few cases");
  return {true, std::to_string(cases) + " cases"};
}

// ── 2. HMM path enumeration ──────────────────────────────────────────────────

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> row(n);
  double sum = 0;
  for (auto& p : row) sum += p = (rng() % 6 == 0) ? 0.0 : u(rng);
  if (sum == 0) {
    row[rng() % n] = 1.0;
    return row;
  }
  for (auto& p : row) p /= sum;
  return row;
}

double brute_force(const HmmModel& m, const std::vector<std::size_t>& obs) {
  const std::size_t n = m.states.size();
  std::size_t paths = 1;
  for (std::size_t t = 0; t < obs.size(); ++t) paths *= n;
  double total = 0;
  for (std::size_t code = 0; code < paths; ++code) {
    std::size_t c = code, prev = 0;
    double p = 1;
    for (std::size_t t = 0; t < obs.size(); ++t) {
      std::size_t s = c % n;
      c /= n;
      p *= (t == 0 ? m.initial[s] : m.transition[prev][s]) * m.emission[s][obs[t]];
      prev = s;
    }
    total += p;
  }
  return total;
}

Outcome hmm_oracle() {
  std::mt19937_64 rng(2002);
  int sequences = 0;
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng() % 3, k = 1 + rng() % 3;
    HmmModel m;
    for (std::size_t i = 0; i < n; ++i) m.states.push_back("s" + std::to_string(i));
    for (std::size_t j = 0; j < k; ++j) m.symbols.push_back("o" + std::to_string(j));
    m.initial = random_row(rng, n);
    for (std::size_t i = 0; i < n; ++i) {
      m.transition.push_back(random_row(rng, n));
      m.emission.push_back(random_row(rng, k));
    }
    m.validate();
    for (std::size_t len = 1; len <= 5; ++len) {
      std::size_t count = 1;
      for (std::size_t t = 0; t < len; ++t) count *= k;
      double mass = 0;
      for (std::size_t code = 0; code < count; ++code) {
        std::vector<std::size_t> obs(len);
        std::size_t c = code;
        for (auto& o : obs) {
          o = c % k;
          c /= k;
        }
        double p = brute_force(m, obs);
        double ll = forward_loglik(m, std::span<const std::size_t>(obs));
        if (p == 0) {
          CHECK_OR_FAIL(ll == kLogLikFloor, "zero-probability sequence not floored");
        } else {
          double err = std::abs(ll - std::log(p));
          worst = std::max(worst, err);
          CHECK_OR_FAIL(err <= 1e-9, "log-likelihood differs by " + std::to_string(err));
          mass += std::exp(ll);
        }
        ++sequences;
      }
      if (len <= 4)
        CHECK_OR_FAIL(std::abs(mass - 1.0) <= 1e-9,
                      "length-" + std::to_string(len) + " mass " + std::to_string(mass));
    }
  }
  std::ostringstream os;
  os << sequences << " sequences, max |error| " << worst;
  return {true, os.str()};
}

// ── 3. Laplace statistics ────────────────────────────────────────────────────

Outcome laplace_stats() {
  UniformSource rng(3003);
  const int n = 100000;
  const double value = 42.0;
  std::vector<double> xs(n);
  double sum = 0;
  for (auto& x : xs) sum += x = laplace_noise(value, 1.0, 1.0, rng);
  double mean = sum / n, ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double var = ss / (n - 1);
  std::ostringstream os;
  os << "mean " << mean << ", variance " << var;
  CHECK_OR_FAIL(std::abs(mean - value) <= 0.05, os.str());
  CHECK_OR_FAIL(std::abs(var - 2.0) <= 0.2, os.str());
  return {true, os.str()};
}

// ── 4. redaction completeness ────────────────────────────────────────────────

Outcome redaction_completeness() {
  SensitivityEngine engine;
  DisclosureMatrix m;
  UniformSource rng(4004);
  auto docs = admin::synthetic_corpus(4004, 60);
  std::set<std::string> kinds;
  std::size_t original_spans = 0;
  for (const auto& doc : docs) {
    auto report = engine.analyze(doc);
    Utf8Text idx(doc);
    std::set<std::string> originals;
    for (const auto& s : report.spans) {
      originals.insert(std::string(idx.slice(s.start, s.end)));
      kinds.insert(s.entity_type);
    }
    original_spans += report.spans.size();
    auto out = apply_action(Action::Redact, doc, report, 1, m, engine, rng);
    Utf8Text oidx(out.text);
    for (const auto& s : engine.detect(out.text))
      {
        std::string hit(oidx.slice(s.start, s.end));
        CHECK_OR_FAIL(!originals.count(hit), "span survived redaction: " + hit);
      }
  }
  for (const char* t : {"US_SSN", "CREDIT_CARD", "EMAIL"})
    CHECK_OR_FAIL(kinds.count(t), std::string("corpus lacks ") + t);

  admin::SimulationSpec spec;
  spec.sessions = 40;
  spec.seed = 4004;
  auto metrics = admin::simulate(spec, shipped_config());
  CHECK_OR_FAIL(metrics.leakage == 0, "simulation leakage " + std::to_string(metrics.leakage));
  return {true, std::to_string(docs.size()) + " documents, " + std::to_string(original_spans) +
                    " spans; simulation of " + std::to_string(metrics.requests) +
                    " requests leaked 0"};
}

// ── 5. monotonicity ──────────────────────────────────────────────────────────

Outcome trust_monotone() {
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrustWeights w;
  for (int i = 0; i < 20000; ++i) {
    TrustComponents c{u(rng), u(rng), u(rng), u(rng)};
    double base = score_components(c, w).raw;
    for (int k = 0; k < 4; ++k) {
      TrustComponents up = c;
      double* f[] = {&up.role, &up.purpose, &up.context, &up.behavior};
      *f[k] = std::min(1.0, *f[k] + u(rng) * (1.0 - *f[k]));
      if (score_components(up, w).raw < base) return {false, "raw decreased"};
    }
  }
  return {true, ""};
}

Outcome matrix_monotone() {
  DisclosureMatrix m;
  try {
    m.validate();
  } catch (const ConfigError& e) {
    return {false, std::string("default rejected: ") + e.what()};
  }
  DisclosureMatrix broken;
  broken.cells[static_cast<int>(SensitivityLevel::Secret)][3] = Action::Deny;
  try {
    broken.validate();
    return {false, "broken table accepted"};
  } catch (const ConfigError&) {
  }
  return {true, ""};
}

Outcome end_to_end_monotone() {
  auto dir = scratch("monotone");
  fs::create_directories(dir);
  Config cfg = shipped_config();
  cfg.audit_path = (dir / "audit.jsonl").string();
  cfg.trust.role_weights["visitor"] = 0.1;
  PrincipalEntry vic;
  vic.principal = {"vic", {"visitor"}, {}};
  cfg.principals.push_back(vic);
  cfg.policy_source = "permit all-callers on \"completions\":invoke;\n";
  finalize_config(cfg);

  std::ifstream fx(kConfigDir + "/fixtures.json");
  auto fixtures = nlohmann::json::parse(fx);
  // Raw scores 0.22, 0.53, 0.74, 0.86 at a fresh behavior prior.
  const ChatRequest at_tier[4] = {
      {"vic", "general", "", NetworkZone::Public, DevicePosture::Unknown, AuthStrength::Anonymous},
      {"sam", "billing", "", NetworkZone::Public, DevicePosture::Unmanaged, AuthStrength::Password},
      {"nina", "treatment", "", NetworkZone::Vpn, DevicePosture::Managed, AuthStrength::Mfa},
      {"alice", "diagnosis", "", NetworkZone::Trusted, DevicePosture::Managed, AuthStrength::Mfa}};
  int checked = 0;
  for (auto& [prompt, _] : fixtures.items()) {
    Gateway gw(cfg);
    int prev = 1000;
    for (int t = 0; t < 4; ++t) {
      ChatRequest req = at_tier[t];
      req.prompt = prompt;
      auto res = gw.handle_completion(req);
      CHECK_OR_FAIL(res.response, "request refused: " + res.error);
      CHECK_OR_FAIL(res.response->trust_tier == t, "tier " + std::to_string(t) + " not reached");
      int s = 0;
      for (const auto& a : res.response->actions) s = std::max(s, strictness(*action_from_name(a)));
      CHECK_OR_FAIL(s <= prev, "stricter action at tier " + std::to_string(t) + " for " + prompt);
      prev = s;
      ++checked;
    }
  }
  fs::remove_all(dir);
  return {true, std::to_string(checked) + " requests over " + std::to_string(fixtures.size()) +
                    " fixtures"};
}

Outcome monotonicity() {
  auto a = trust_monotone();
  if (!a.pass) return {false, "(a) " + a.detail};
  auto b = matrix_monotone();
  if (!b.pass) return {false, "(b) " + b.detail};
  auto c = end_to_end_monotone();
  if (!c.pass) return {false, "(c) " + c.detail};
  return {true, "trust, matrix and end-to-end; " + c.detail};
}

// ── 6. Luhn ──────────────────────────────────────────────────────────────────

bool luhn_digitwise(const std::string& raw) {
  std::vector<int> d;
  for (char c : raw) {
    if (c == ' ' || c == '-') continue;
    if (c < '0' || c > '9') return false;
    d.push_back(c - '0');
  }
  if (d.size() < 12 || d.size() > 19) return false;
  int sum = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    int v = d[d.size() - 1 - i];
    if (i % 2 == 1) v = (v * 2) / 10 + (v * 2) % 10;
    sum += v;
  }
  return sum % 10 == 0;
}

Outcome luhn() {
  CHECK_OR_FAIL(luhn_valid("4111111111111111"), "4111111111111111 rejected");
  CHECK_OR_FAIL(!luhn_valid("4111111111111112"), "4111111111111112 accepted");
  std::mt19937_64 rng(6006);
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    std::size_t len = 10 + rng() % 12;
    for (std::size_t k = 0; k < len; ++k) s.push_back(static_cast<char>('0' + rng() % 10));
    bool got = luhn_valid(s);
    CHECK_OR_FAIL(got == luhn_digitwise(s), "disagreement on " + s);
    accepted += got;
  }
  return {true, "10000 strings, " + std::to_string(accepted) + " valid"};
}

// ── 7. end-to-end redaction ──────────────────────────────────────────────────

Outcome pipeline() {
  auto dir = scratch("pipeline");
  fs::create_directories(dir);
  Config cfg = shipped_config();
  cfg.audit_path = (dir / "audit.jsonl").string();
  Gateway gw(cfg);
  ChatRequest req{"sam",           "billing",         "discharge summary",
                  NetworkZone::Public, DevicePosture::Unmanaged, AuthStrength::Password};
  auto res = gw.handle_completion(req);
  CHECK_OR_FAIL(res.status == 200, "status " + std::to_string(res.status));
  CHECK_OR_FAIL(res.response->trust_tier == 1, "tier " + std::to_string(res.response->trust_tier));
  CHECK_OR_FAIL(res.response->text.find("<REDACTED:US_SSN>") != std::string::npos,
                "no SSN placeholder in: " + res.response->text);
  std::ifstream in(cfg.audit_path);
  std::string line;
  std::getline(in, line);
  auto j = nlohmann::json::parse(line);
  CHECK_OR_FAIL(j["entity_type_counts"].value("US_SSN", 0) == 1, "US_SSN count wrong: " + line);
  for (const char* raw : {"123-45-6789", "123456789", "6789"})
    CHECK_OR_FAIL(line.find(raw) == std::string::npos, "raw SSN digits in audit line");
  fs::remove_all(dir);
  return {true, res.response->text};
}

// ── 8. audit integrity under concurrency ─────────────────────────────────────

Outcome audit_integrity() {
  auto dir = scratch("audit");
  fs::create_directories(dir);
  Config cfg = shipped_config();
  cfg.audit_path = (dir / "audit.jsonl").string();
  Gateway gw(cfg);
  HttpServer server(gw);
  int port = server.bind("127.0.0.1", 0);
  CHECK_OR_FAIL(port > 0, "bind failed");
  std::thread listener([&] { server.listen(); });
  server.wait_until_ready();

  const std::vector<std::pair<std::string, std::string>> callers = {
      {"tg-alice-key", "diagnosis"}, {"tg-nina-key", "treatment"}, {"tg-sam-key", "billing"},
      {"tg-gus-key", "general"}};
  const std::vector<std::string> prompts = {"discharge summary", "billing record",
                                            "patient identity", "wire transfer", "ward status",
                                            "staff directory"};
  constexpr int kThreads = 16, kTotal = 1000;
  std::atomic<int> next{0}, transport_errors{0}, ok{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t)
    workers.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < kTotal;) {
        const auto& [key, purpose] = callers[i % callers.size()];
        httplib::Client c("127.0.0.1", port);
        c.set_bearer_token_auth(key);
        nlohmann::json body{{"prompt", prompts[i % prompts.size()]},
                            {"purpose", purpose},
                            {"context",
                             {{"network_zone", "vpn"},
                              {"device_posture", "managed"},
                              {"auth_strength", "mfa"}}}};
        auto r = c.Post("/v1/completions", body.dump(), "application/json");
        if (!r)
          ++transport_errors;
        else if (r->status == 200)
          ++ok;
      }
    });
  for (auto& w : workers) w.join();
  server.stop();
  listener.join();
  CHECK_OR_FAIL(transport_errors == 0, std::to_string(transport_errors.load()) + " transport errors");

  std::ifstream in(cfg.audit_path);
  std::string line;
  int lines = 0, spans = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lines;
    try {
      ids.insert(nlohmann::json::parse(line).at("request_id").get<std::string>());
    } catch (const std::exception&) {
      return {false, "unparseable line " + std::to_string(lines)};
    }
    spans += static_cast<int>(gw.engine().detect(line).size());
  }
  fs::remove_all(dir);
  CHECK_OR_FAIL(lines == kTotal, std::to_string(lines) + " lines");
  CHECK_OR_FAIL(static_cast<int>(ids.size()) == kTotal, "duplicate request ids");
  CHECK_OR_FAIL(spans == 0, std::to_string(spans) + " sensitive spans in audit file");
  return {true, std::to_string(lines) + " lines (" + std::to_string(ok.load()) +
                    " served), 0 sensitive spans"};
}

// ── 9. Beta posterior ────────────────────────────────────────────────────────

Outcome beta_dynamics() {
  BehaviorState s;
  CHECK_OR_FAIL(behavior_score(s) == 0.5, "prior is not 0.5");
  s = update_posterior(s, {"p", BehaviorAction::Violation, {}, false}, 3.0);
  CHECK_OR_FAIL(behavior_score(s) == 0.2, "after violation: " + std::to_string(behavior_score(s)));
  s = update_posterior(s, {"p", BehaviorAction::Query, {}, true}, 3.0);
  CHECK_OR_FAIL(behavior_score(s) == 2.0 / 6.0, "after compliance: " + std::to_string(behavior_score(s)));
  return {true, "0.5 -> 0.2 -> 2/6"};
}

// ── 10. config validation ────────────────────────────────────────────────────

Outcome config_validation() {
  using nlohmann::json;
  const std::vector<std::pair<json, std::string>> cases = {
      {{{"trust", {{"weights", {{"role", 0.5}, {"purpose", 0.2}, {"context", 0.2}, {"behavior", 0.2}}}}}},
       "trust.weights"},
      {{{"disclosure", {{"matrix", {{"secret", {"deny", "deny", "pass", "redact"}}}}}}},
       "disclosure.matrix.secret[3]"},
      {{{"sensitivity",
         {{"extra_recognizers", {{{"id", "bad"}, {"entity_type", "EMAIL"}, {"pattern", "(unclosed"}}}}}}},
       "sensitivity.recognizers[8].pattern"},
      {{{"policy", {{"source", "permit broken when role =="}}}}, "policy"}};
  std::string keys;
  for (const auto& [j, expected] : cases) {
    try {
      Gateway gw(parse_config(j, kConfigDir));
      return {false, "accepted config that should fail at " + expected};
    } catch (const ConfigError& e) {
      CHECK_OR_FAIL(e.key() == expected, "expected key " + expected + ", got " + e.key());
      keys += (keys.empty() ? "" : ", ") + e.key();
    }
  }
  return {true, keys};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"policy evaluation matches truth-table oracle", policy_oracle},
      {"forward algorithm matches path enumeration", hmm_oracle},
      {"Laplace sample statistics", laplace_stats},
      {"redaction completeness and zero simulated leakage", redaction_completeness},
      {"monotonicity of trust, matrix and pipeline", monotonicity},
      {"Luhn validator matches digit-wise oracle", luhn},
      {"tier-1 request redacts SSN end to end", pipeline},
      {"concurrent audit integrity", audit_integrity},
      {"Beta posterior dynamics", beta_dynamics},
      {"invalid configs name the offending key", config_validation}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first;
    if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
