#pragma once

// Attribute-based access policies.
//
// Policy text format (one rule per statement, `#` starts a comment):
//
//   permit read-records on "records/**":read priority 10 limit confidential
//       when role in ["clinician", "nurse"] and context.network_zone != "public";
//   deny block-anon when context.auth_strength == "anonymous";
//
//   rule      := ("permit" | "deny") ID [target] ["priority" INT] ["limit" LEVEL]
//                ["when" expr] [";"]
//   target    := "on" STRING [":" (ID | "*")]
//   expr      := or ; or := and {"or" and} ; and := unary {"and" unary}
//   unary     := "not" unary | "(" expr ")" | comparison
//   comparison:= operand [("==" | "!=" | ">=" | "<=" | "in") operand]
//   operand   := ID | STRING | NUMBER | "true" | "false" | "[" [literal {"," literal}] "]"
//
// Resource globs: `*` and `?` stay within one path segment, a whole `**`
// segment spans any number of segments. A rule without `on` targets
// everything.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trustgate/common.hpp"
#include "trustgate/trust.hpp"

namespace trustgate::policy {

// ── Errors ───────────────────────────────────────────────────────────────────

class PolicyError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Type, DuplicateRule, Glob };

  PolicyError(Kind kind, int line, int column, const std::string& msg)
      : std::runtime_error(format(kind, line, column, msg)),
        kind_(kind),
        line_(line),
        column_(column) {}

  Kind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(Kind k, int line, int col, const std::string& msg) {
    const char* label = k == Kind::Syntax          ? "syntax error"
                        : k == Kind::Type          ? "type error"
                        : k == Kind::DuplicateRule ? "duplicate rule"
                                                   : "invalid glob";
    return std::string(label) + " at " + std::to_string(line) + ":" + std::to_string(col) +
           ": " + msg;
  }

  Kind kind_;
  int line_;
  int column_;
};

// ── AST ──────────────────────────────────────────────────────────────────────

enum class Effect { Permit, Deny };

inline std::string_view to_string(Effect e) { return e == Effect::Permit ? "permit" : "deny"; }

struct Literal {
  enum class Kind { String, Number, Bool, List };
  Kind kind = Kind::String;
  std::string text;  // string payload, or canonical spelling of a number
  double number = 0.0;
  bool boolean = false;
  std::vector<Literal> items;

  bool operator==(const Literal& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::String: return text == o.text;
      case Kind::Number: return number == o.number;
      case Kind::Bool:   return boolean == o.boolean;
      case Kind::List:   return items == o.items;
    }
    return false;
  }
};

// Either an attribute reference or a literal.
struct Operand {
  std::variant<std::string, Literal> value;

  bool is_attribute() const { return std::holds_alternative<std::string>(value); }
  const std::string& attribute() const { return std::get<std::string>(value); }
  const Literal& literal() const { return std::get<Literal>(value); }
  bool operator==(const Operand& o) const { return value == o.value; }
};

enum class CompareOp { Eq, Ne, Ge, Le, In };

inline std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
    case CompareOp::In: return "in";
  }
  return "==";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Operand, Compare, Not, And, Or };
  Kind kind = Kind::Operand;
  CompareOp op = CompareOp::Eq;
  Operand lhs;
  Operand rhs;
  ExprPtr left;   // Not uses left only
  ExprPtr right;

  bool operator==(const Expr& o) const {
    if (kind != o.kind) return false;
    auto same = [](const ExprPtr& a, const ExprPtr& b) {
      if (!a || !b) return !a && !b;
      return *a == *b;
    };
    switch (kind) {
      case Kind::Operand: return lhs == o.lhs;
      case Kind::Compare: return op == o.op && lhs == o.lhs && rhs == o.rhs;
      case Kind::Not:     return same(left, o.left);
      case Kind::And:
      case Kind::Or:      return same(left, o.left) && same(right, o.right);
    }
    return false;
  }
};

struct Target {
  std::string resource;  // empty: any resource
  std::string action;    // empty or "*": any action
  bool present = false;

  bool operator==(const Target&) const = default;
};

struct Rule {
  std::string id;
  Effect effect = Effect::Deny;
  Target target;
  ExprPtr condition;  // null: unconditional
  int priority = 0;
  std::optional<SensitivityLevel> limit;
  int line = 0;

  bool operator==(const Rule& o) const {
    bool cond_eq = (!condition && !o.condition) ||
                   (condition && o.condition && *condition == *o.condition);
    return id == o.id && effect == o.effect && target == o.target && cond_eq &&
           priority == o.priority && limit == o.limit;
  }
};

struct Policy {
  std::vector<Rule> rules;
  std::string version;

  bool operator==(const Policy& o) const { return rules == o.rules && version == o.version; }
};

// ── Glob matching ────────────────────────────────────────────────────────────

namespace detail {

inline std::vector<std::string_view> split_segments(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto slash = s.find('/', start);
    if (slash == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, slash - start));
    start = slash + 1;
  }
}

inline bool match_segment(std::string_view pat, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

inline bool match_segments(const std::vector<std::string_view>& pat, std::size_t pi,
                           const std::vector<std::string_view>& text, std::size_t ti) {
  while (pi < pat.size()) {
    if (pat[pi] == "**") {
      for (std::size_t k = ti; k <= text.size(); ++k)
        if (match_segments(pat, pi + 1, text, k)) return true;
      return false;
    }
    if (ti >= text.size() || !match_segment(pat[pi], text[ti])) return false;
    ++pi;
    ++ti;
  }
  return ti == text.size();
}

}  // namespace detail

// Returns an error message, or nullopt when the pattern is well formed.
inline std::optional<std::string> glob_error(std::string_view pattern) {
  if (pattern.empty()) return "empty resource pattern";
  for (auto seg : detail::split_segments(pattern)) {
    if (seg.find("**") != std::string_view::npos && seg != "**")
      return "'**' must occupy a whole path segment";
  }
  return std::nullopt;
}

inline bool glob_match(std::string_view pattern, std::string_view text) {
  return detail::match_segments(detail::split_segments(pattern), 0, detail::split_segments(text),
                                 0);
}

// ── Lexer ────────────────────────────────────────────────────────────────────

namespace detail {

enum class Tok {
  Ident, String, Number, LParen, RParen, LBracket, RBracket, Comma, Colon, Semicolon, Star,
  Eq, Ne, Ge, Le, End
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    int tl = line, tc = col;
    auto push = [&](Tok k, std::string text, std::size_t len) {
      out.push_back({k, std::move(text), tl, tc});
      advance(len);
    };
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      push(Tok::Ident, std::string(src.substr(i, j - i)), j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.'))
        ++j;
      push(Tok::Number, std::string(src.substr(i, j - i)), j - i);
      continue;
    }
    if (c == '"') {
      std::string text;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < src.size()) {
        if (src[j] == '\\' && j + 1 < src.size()) {
          text.push_back(src[j + 1]);
          j += 2;
        } else if (src[j] == '"') {
          closed = true;
          ++j;
          break;
        } else if (src[j] == '\n') {
          break;
        } else {
          text.push_back(src[j++]);
        }
      }
      if (!closed) throw PolicyError(PolicyError::Kind::Syntax, tl, tc, "unterminated string");
      push(Tok::String, std::move(text), j - i);
      continue;
    }
    auto two = src.substr(i, 2);
    if (two == "==") { push(Tok::Eq, "==", 2); continue; }
    if (two == "!=") { push(Tok::Ne, "!=", 2); continue; }
    if (two == ">=") { push(Tok::Ge, ">=", 2); continue; }
    if (two == "<=") { push(Tok::Le, "<=", 2); continue; }
    switch (c) {
      case '(': push(Tok::LParen, "(", 1); continue;
      case ')': push(Tok::RParen, ")", 1); continue;
      case '[': push(Tok::LBracket, "[", 1); continue;
      case ']': push(Tok::RBracket, "]", 1); continue;
      case ',': push(Tok::Comma, ",", 1); continue;
      case ':': push(Tok::Colon, ":", 1); continue;
      case ';': push(Tok::Semicolon, ";", 1); continue;
      case '*': push(Tok::Star, "*", 1); continue;
      default: break;
    }
    throw PolicyError(PolicyError::Kind::Syntax, tl, tc,
                      std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

inline bool is_keyword(std::string_view s) {
  static const std::set<std::string_view> kw = {"permit", "deny",  "on",  "when", "priority",
                                                "limit",  "and",   "or",  "not",  "in",
                                                "true",   "false"};
  return kw.count(s) > 0;
}

// ── Parser ───────────────────────────────────────────────────────────────────

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Policy parse() {
    Policy p;
    std::map<std::string, int> seen;
    while (peek().kind != Tok::End) {
      Rule r = parse_rule();
      if (auto it = seen.find(r.id); it != seen.end())
        throw PolicyError(PolicyError::Kind::DuplicateRule, r.line, 1,
                          "rule id '" + r.id + "' already defined on line " +
                              std::to_string(it->second));
      seen.emplace(r.id, r.line);
      p.rules.push_back(std::move(r));
    }
    return p;
  }

  ExprPtr parse_standalone_expr() {
    auto e = parse_or();
    expect_end();
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  bool at_word(std::string_view w) const {
    return peek().kind == Tok::Ident && peek().text == w;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw PolicyError(PolicyError::Kind::Syntax, t.line, t.column, msg + ", found " + found);
  }

  void expect_end() {
    if (peek().kind != Tok::End) fail(peek(), "expected end of expression");
  }

  Rule parse_rule() {
    const Token& head = next();
    Rule r;
    r.line = head.line;
    if (head.kind == Tok::Ident && head.text == "permit") {
      r.effect = Effect::Permit;
    } else if (head.kind == Tok::Ident && head.text == "deny") {
      r.effect = Effect::Deny;
    } else {
      fail(head, "expected 'permit' or 'deny'");
    }
    const Token& id = next();
    if (id.kind != Tok::Ident || is_keyword(id.text)) fail(id, "expected rule id");
    r.id = id.text;

    if (at_word("on")) {
      next();
      const Token& pat = next();
      if (pat.kind != Tok::String) fail(pat, "expected quoted resource pattern");
      if (auto err = glob_error(pat.text))
        throw PolicyError(PolicyError::Kind::Glob, pat.line, pat.column, *err);
      r.target.present = true;
      r.target.resource = pat.text;
      if (peek().kind == Tok::Colon) {
        next();
        const Token& act = next();
        if (act.kind == Tok::Star) {
          r.target.action = "*";
        } else if (act.kind == Tok::Ident && !is_keyword(act.text)) {
          r.target.action = act.text;
        } else {
          fail(act, "expected action name or '*'");
        }
      }
    }
    if (at_word("priority")) {
      next();
      const Token& n = next();
      int value = 0;
      auto res = std::from_chars(n.text.data(), n.text.data() + n.text.size(), value);
      if (n.kind != Tok::Number || res.ec != std::errc() ||
          res.ptr != n.text.data() + n.text.size())
        fail(n, "expected integer priority");
      r.priority = value;
    }
    if (at_word("limit")) {
      next();
      const Token& lv = next();
      auto level = lv.kind == Tok::Ident ? level_from_string(lv.text) : std::nullopt;
      if (!level) fail(lv, "expected sensitivity level (public|internal|confidential|secret)");
      r.limit = level;
    }
    if (at_word("when")) {
      next();
      r.condition = parse_or();
    }
    if (peek().kind == Tok::Semicolon) {
      next();
    } else if (peek().kind != Tok::End && !at_word("permit") && !at_word("deny")) {
      fail(peek(), "expected ';' or start of next rule");
    }
    return r;
  }

  ExprPtr make_binary(Expr::Kind k, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
  }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (at_word("or")) {
      next();
      lhs = make_binary(Expr::Kind::Or, lhs, parse_and());
    }
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_unary();
    while (at_word("and")) {
      next();
      lhs = make_binary(Expr::Kind::And, lhs, parse_unary());
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (at_word("not")) {
      next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Not;
      e->left = parse_unary();
      return e;
    }
    if (peek().kind == Tok::LParen) {
      next();
      auto inner = parse_or();
      if (peek().kind != Tok::RParen) fail(peek(), "expected ')'");
      next();
      return inner;
    }
    return parse_comparison();
  }

  std::optional<CompareOp> peek_operator() const {
    switch (peek().kind) {
      case Tok::Eq: return CompareOp::Eq;
      case Tok::Ne: return CompareOp::Ne;
      case Tok::Ge: return CompareOp::Ge;
      case Tok::Le: return CompareOp::Le;
      default: break;
    }
    if (at_word("in")) return CompareOp::In;
    return std::nullopt;
  }

  ExprPtr parse_comparison() {
    const Token& start = peek();
    Operand lhs = parse_operand();
    auto e = std::make_shared<Expr>();
    if (auto op = peek_operator()) {
      const Token& op_tok = next();
      Operand rhs = parse_operand();
      check_comparison(lhs, *op, rhs, op_tok);
      e->kind = Expr::Kind::Compare;
      e->op = *op;
      e->lhs = std::move(lhs);
      e->rhs = std::move(rhs);
      return e;
    }
    if (!lhs.is_attribute() && lhs.literal().kind != Literal::Kind::Bool)
      throw PolicyError(PolicyError::Kind::Type, start.line, start.column,
                        "non-boolean literal used as a condition");
    e->kind = Expr::Kind::Operand;
    e->lhs = std::move(lhs);
    return e;
  }

  Literal parse_scalar_literal() {
    const Token& t = next();
    Literal lit;
    if (t.kind == Tok::String) {
      lit.kind = Literal::Kind::String;
      lit.text = t.text;
    } else if (t.kind == Tok::Number) {
      lit.kind = Literal::Kind::Number;
      lit.text = t.text;
      try {
        std::size_t used = 0;
        lit.number = std::stod(t.text, &used);
        if (used != t.text.size()) fail(t, "malformed number");
      } catch (const std::logic_error&) {
        fail(t, "malformed number");
      }
    } else if (t.kind == Tok::Ident && (t.text == "true" || t.text == "false")) {
      lit.kind = Literal::Kind::Bool;
      lit.boolean = t.text == "true";
    } else {
      fail(t, "expected literal");
    }
    return lit;
  }

  Operand parse_operand() {
    const Token& t = peek();
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      next();
      return Operand{t.text};
    }
    if (t.kind == Tok::LBracket) {
      next();
      Literal list;
      list.kind = Literal::Kind::List;
      if (peek().kind != Tok::RBracket) {
        for (;;) {
          const Token& item_tok = peek();
          Literal item = parse_scalar_literal();
          if (!list.items.empty() && list.items.front().kind != item.kind)
            throw PolicyError(PolicyError::Kind::Type, item_tok.line, item_tok.column,
                              "list literal mixes element kinds");
          list.items.push_back(std::move(item));
          if (peek().kind == Tok::Comma) {
            next();
            continue;
          }
          break;
        }
      }
      if (peek().kind != Tok::RBracket) fail(peek(), "expected ']'");
      next();
      return Operand{std::move(list)};
    }
    if (t.kind == Tok::String || t.kind == Tok::Number ||
        (t.kind == Tok::Ident && (t.text == "true" || t.text == "false")))
      return Operand{parse_scalar_literal()};
    fail(t, "expected operand");
  }

  static void check_comparison(const Operand& lhs, CompareOp op, const Operand& rhs,
                               const Token& at) {
    auto type_error = [&](const std::string& msg) {
      throw PolicyError(PolicyError::Kind::Type, at.line, at.column, msg);
    };
    auto kind_of = [](const Operand& o) -> std::optional<Literal::Kind> {
      if (o.is_attribute()) return std::nullopt;
      return o.literal().kind;
    };
    auto lk = kind_of(lhs), rk = kind_of(rhs);
    switch (op) {
      case CompareOp::Eq:
      case CompareOp::Ne:
        if (lk == Literal::Kind::List || rk == Literal::Kind::List)
          type_error("list literal is not comparable with '" + std::string(to_string(op)) + "'");
        if (lk && rk && *lk != *rk) type_error("comparison between incompatible literal kinds");
        break;
      case CompareOp::Ge:
      case CompareOp::Le:
        for (auto k : {lk, rk})
          if (k && *k != Literal::Kind::Number)
            type_error("ordering comparison requires numeric operands");
        break;
      case CompareOp::In:
        if (lk == Literal::Kind::List) type_error("left operand of 'in' must be a scalar");
        if (rk && *rk != Literal::Kind::List)
          type_error("right operand of 'in' must be a list or attribute");
        if (lk && rk && !rhs.literal().items.empty() &&
            rhs.literal().items.front().kind != *lk)
          type_error("'in' between incompatible literal kinds");
        break;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Policy parse_policy(std::string_view source) {
  return detail::Parser(detail::lex(source)).parse();
}

inline ExprPtr parse_expression(std::string_view source) {
  return detail::Parser(detail::lex(source)).parse_standalone_expr();
}

// ── Printing ─────────────────────────────────────────────────────────────────

namespace detail {

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string print_literal(const Literal& l) {
  switch (l.kind) {
    case Literal::Kind::String: return quote(l.text);
    case Literal::Kind::Number: return l.text;
    case Literal::Kind::Bool:   return l.boolean ? "true" : "false";
    case Literal::Kind::List: {
      std::string out = "[";
      for (std::size_t i = 0; i < l.items.size(); ++i) {
        if (i) out += ", ";
        out += print_literal(l.items[i]);
      }
      return out + "]";
    }
  }
  return "";
}

inline std::string print_operand(const Operand& o) {
  return o.is_attribute() ? o.attribute() : print_literal(o.literal());
}

}  // namespace detail

inline std::string print_expression(const Expr& e) {
  auto child = [](const ExprPtr& c) {
    std::string s = print_expression(*c);
    if (c->kind == Expr::Kind::And || c->kind == Expr::Kind::Or) return "(" + s + ")";
    return s;
  };
  switch (e.kind) {
    case Expr::Kind::Operand: return detail::print_operand(e.lhs);
    case Expr::Kind::Compare:
      return detail::print_operand(e.lhs) + " " + std::string(to_string(e.op)) + " " +
             detail::print_operand(e.rhs);
    case Expr::Kind::Not: return "not " + child(e.left);
    case Expr::Kind::And: return child(e.left) + " and " + child(e.right);
    case Expr::Kind::Or:  return child(e.left) + " or " + child(e.right);
  }
  return "";
}

inline std::string print_policy(const Policy& p) {
  std::ostringstream os;
  for (const auto& r : p.rules) {
    os << to_string(r.effect) << ' ' << r.id;
    if (r.target.present) {
      os << " on " << detail::quote(r.target.resource);
      if (!r.target.action.empty()) os << ':' << r.target.action;
    }
    if (r.priority != 0) os << " priority " << r.priority;
    if (r.limit) os << " limit " << to_string(*r.limit);
    if (r.condition) os << " when " << print_expression(*r.condition);
    os << ";\n";
  }
  return os.str();
}

// ── Evaluation ───────────────────────────────────────────────────────────────

struct Request {
  const Principal& principal;
  const RequestContext& context;
  std::string_view resource;
  std::string_view action;
};

struct Decision {
  Effect effect = Effect::Deny;
  std::vector<std::string> matched_rule_ids;
  std::map<std::string, std::string> obligations;
  // Attribute references that did not resolve while evaluating matching
  // targets; each made its enclosing comparison false.
  std::vector<std::string> unresolved;
};

inline constexpr std::string_view kMaxDisclosableLevel = "max_disclosable_level";

namespace detail {

using Values = std::vector<std::string>;

inline std::optional<Values> resolve(std::string_view name, const Request& req) {
  if (name == "role") return Values(req.principal.roles.begin(), req.principal.roles.end());
  if (name == "resource") return Values{std::string(req.resource)};
  if (name == "action") return Values{std::string(req.action)};
  if (name == "principal.id") return Values{req.principal.id};
  if (name == "context.purpose") return Values{req.context.purpose};
  if (name == "context.network_zone")
    return Values{std::string(to_string(req.context.network_zone))};
  if (name == "context.device_posture")
    return Values{std::string(to_string(req.context.device_posture))};
  if (name == "context.auth_strength")
    return Values{std::string(to_string(req.context.auth_strength))};
  if (auto it = req.principal.attributes.find(std::string(name));
      it != req.principal.attributes.end())
    return Values{it->second};
  return std::nullopt;
}

inline std::optional<double> to_number(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Equality between an attribute value (always a string) and a literal.
inline bool value_equals(const std::string& v, const Literal& lit) {
  switch (lit.kind) {
    case Literal::Kind::String: return v == lit.text;
    case Literal::Kind::Number: {
      auto n = to_number(v);
      return n && *n == lit.number;
    }
    case Literal::Kind::Bool: return v == (lit.boolean ? "true" : "false");
    case Literal::Kind::List: return false;
  }
  return false;
}

inline bool literal_equals(const Literal& a, const Literal& b) { return a == b; }

class Evaluator {
 public:
  Evaluator(const Request& req, std::vector<std::string>& unresolved)
      : req_(req), unresolved_(unresolved) {}

  bool eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Operand:
        if (e.lhs.is_attribute()) {
          auto vals = lookup(e.lhs.attribute());
          if (!vals) return false;
          return std::any_of(vals->begin(), vals->end(),
                             [](const std::string& v) { return v == "true"; });
        }
        return e.lhs.literal().kind == Literal::Kind::Bool && e.lhs.literal().boolean;
      case Expr::Kind::Compare: return compare(e);
      case Expr::Kind::Not: return !eval(*e.left);
      case Expr::Kind::And: return eval(*e.left) && eval(*e.right);
      case Expr::Kind::Or: return eval(*e.left) || eval(*e.right);
    }
    return false;
  }

 private:
  std::optional<Values> lookup(const std::string& name) {
    auto v = resolve(name, req_);
    if (!v && std::find(unresolved_.begin(), unresolved_.end(), name) == unresolved_.end())
      unresolved_.push_back(name);
    return v;
  }

  bool compare(const Expr& e) {
    std::optional<Values> lv, rv;
    if (e.lhs.is_attribute() && !(lv = lookup(e.lhs.attribute()))) return false;
    if (e.rhs.is_attribute() && !(rv = lookup(e.rhs.attribute()))) return false;
    switch (e.op) {
      case CompareOp::Eq: return equal(e.lhs, lv, e.rhs, rv);
      case CompareOp::Ne: return !equal(e.lhs, lv, e.rhs, rv);
      case CompareOp::Ge:
      case CompareOp::Le: return ordered(e.op, e.lhs, lv, e.rhs, rv);
      case CompareOp::In: return contained(e.lhs, lv, e.rhs, rv);
    }
    return false;
  }

  static bool equal(const Operand& l, const std::optional<Values>& lv, const Operand& r,
                    const std::optional<Values>& rv) {
    if (lv && rv) {
      for (const auto& a : *lv)
        for (const auto& b : *rv)
          if (a == b) return true;
      return false;
    }
    if (lv)
      return std::any_of(lv->begin(), lv->end(),
                         [&](const std::string& v) { return value_equals(v, r.literal()); });
    if (rv)
      return std::any_of(rv->begin(), rv->end(),
                         [&](const std::string& v) { return value_equals(v, l.literal()); });
    return literal_equals(l.literal(), r.literal());
  }

  static std::vector<double> numbers(const Operand& o, const std::optional<Values>& vals) {
    std::vector<double> out;
    if (vals) {
      for (const auto& v : *vals)
        if (auto n = to_number(v)) out.push_back(*n);
    } else {
      out.push_back(o.literal().number);
    }
    return out;
  }

  static bool ordered(CompareOp op, const Operand& l, const std::optional<Values>& lv,
                      const Operand& r, const std::optional<Values>& rv) {
    for (double a : numbers(l, lv))
      for (double b : numbers(r, rv))
        if (op == CompareOp::Ge ? a >= b : a <= b) return true;
    return false;
  }

  static bool contained(const Operand& l, const std::optional<Values>& lv, const Operand& r,
                        const std::optional<Values>& rv) {
    if (rv) return equal(l, lv, r, rv);
    const auto& items = r.literal().items;
    for (const auto& item : items) {
      Operand single{item};
      if (equal(l, lv, single, std::nullopt)) return true;
    }
    return false;
  }

  const Request& req_;
  std::vector<std::string>& unresolved_;
};

inline bool target_matches(const Target& t, std::string_view resource, std::string_view action) {
  if (!t.present) return true;
  if (!glob_match(t.resource, resource)) return false;
  return t.action.empty() || t.action == "*" || t.action == action;
}

// Rules in evaluation order: higher priority first, source order within equal
// priority.
inline std::vector<const Rule*> ordered_rules(const Policy& p) {
  std::vector<const Rule*> out;
  out.reserve(p.rules.size());
  for (const auto& r : p.rules) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(),
                   [](const Rule* a, const Rule* b) { return a->priority > b->priority; });
  return out;
}

}  // namespace detail

inline bool evaluate_condition(const Expr& e, const Request& req,
                               std::vector<std::string>* unresolved = nullptr) {
  std::vector<std::string> sink;
  detail::Evaluator ev(req, unresolved ? *unresolved : sink);
  return ev.eval(e);
}

// Deny-overrides combining with default deny.
inline Decision evaluate(const Policy& policy, const Principal& principal,
                         const RequestContext& ctx, std::string_view resource,
                         std::string_view action) {
  Request req{principal, ctx, resource, action};
  Decision d;
  const Rule* first_permit = nullptr;
  std::vector<std::string> denies;
  for (const Rule* r : detail::ordered_rules(policy)) {
    if (!detail::target_matches(r->target, resource, action)) continue;
    bool holds = !r->condition || evaluate_condition(*r->condition, req, &d.unresolved);
    if (!holds) continue;
    if (r->effect == Effect::Deny) {
      denies.push_back(r->id);
    } else if (!first_permit) {
      first_permit = r;
    }
  }
  if (!denies.empty()) {
    d.effect = Effect::Deny;
    d.matched_rule_ids = std::move(denies);
  } else if (first_permit) {
    d.effect = Effect::Permit;
    d.matched_rule_ids.push_back(first_permit->id);
    if (first_permit->limit)
      d.obligations[std::string(kMaxDisclosableLevel)] = std::string(to_string(*first_permit->limit));
  }
  return d;
}

// ── Validation ───────────────────────────────────────────────────────────────

struct Diagnostic {
  enum class Kind { UnreachableRule, UnknownAttribute, EmptyTarget };
  Kind kind;
  std::string rule_id;
  int line = 0;
  std::string message;
};

inline std::string_view to_string(Diagnostic::Kind k) {
  switch (k) {
    case Diagnostic::Kind::UnreachableRule:  return "unreachable rule";
    case Diagnostic::Kind::UnknownAttribute: return "unknown attribute";
    case Diagnostic::Kind::EmptyTarget:      return "empty target";
  }
  return "";
}

// Names every policy may reference regardless of configuration.
inline const std::set<std::string>& builtin_attributes() {
  static const std::set<std::string> names = {
      "role",           "resource",          "action",
      "principal.id",   "context.purpose",   "context.network_zone",
      "context.device_posture", "context.auth_strength"};
  return names;
}

namespace detail {

inline void collect_attributes(const Expr& e, std::vector<std::string>& out) {
  auto add = [&](const Operand& o) {
    if (o.is_attribute()) out.push_back(o.attribute());
  };
  switch (e.kind) {
    case Expr::Kind::Operand: add(e.lhs); break;
    case Expr::Kind::Compare:
      add(e.lhs);
      add(e.rhs);
      break;
    case Expr::Kind::Not: collect_attributes(*e.left, out); break;
    case Expr::Kind::And:
    case Expr::Kind::Or:
      collect_attributes(*e.left, out);
      collect_attributes(*e.right, out);
      break;
  }
}

inline bool unconditional(const Rule& r) {
  if (!r.condition) return true;
  const Expr& e = *r.condition;
  return e.kind == Expr::Kind::Operand && !e.lhs.is_attribute() &&
         e.lhs.literal().kind == Literal::Kind::Bool && e.lhs.literal().boolean;
}

// True when every request matched by `inner` is also matched by `outer`.
inline bool target_covers(const Target& outer, const Target& inner) {
  if (outer.present) {
    if (!inner.present) return false;
    bool resource_ok = outer.resource == inner.resource || outer.resource == "**" ||
                       (inner.resource.find_first_of("*?") == std::string::npos &&
                        glob_match(outer.resource, inner.resource));
    if (!resource_ok) return false;
    bool outer_any = outer.action.empty() || outer.action == "*";
    bool inner_any = inner.action.empty() || inner.action == "*";
    if (!outer_any && (inner_any || outer.action != inner.action)) return false;
  }
  return true;
}

}  // namespace detail

// Reports rules shadowed by an earlier unconditional deny, references to
// attributes outside `schema` (plus the built-in names) and rules without a
// target.
inline std::vector<Diagnostic> validate_policy(const Policy& policy,
                                               const std::set<std::string>& schema = {}) {
  std::vector<Diagnostic> out;
  auto order = detail::ordered_rules(policy);
  for (std::size_t j = 0; j < order.size(); ++j) {
    const Rule& r = *order[j];
    for (std::size_t i = 0; i < j; ++i) {
      const Rule& earlier = *order[i];
      if (earlier.effect == Effect::Deny && detail::unconditional(earlier) &&
          detail::target_covers(earlier.target, r.target)) {
        out.push_back({Diagnostic::Kind::UnreachableRule, r.id, r.line,
                       "rule '" + r.id + "' is shadowed by unconditional deny '" + earlier.id +
                           "'"});
        break;
      }
    }
  }
  for (const auto& r : policy.rules) {
    if (!r.target.present)
      out.push_back({Diagnostic::Kind::EmptyTarget, r.id, r.line,
                     "rule '" + r.id + "' has no target and applies to every resource"});
    if (!r.condition) continue;
    std::vector<std::string> names;
    detail::collect_attributes(*r.condition, names);
    std::set<std::string> reported;
    for (const auto& n : names) {
      if (builtin_attributes().count(n) || schema.count(n) || reported.count(n)) continue;
      reported.insert(n);
      out.push_back({Diagnostic::Kind::UnknownAttribute, r.id, r.line,
                     "rule '" + r.id + "' references undeclared attribute '" + n + "'"});
    }
  }
  return out;
}

}  // namespace trustgate::policy
