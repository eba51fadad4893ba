#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "contlog/formula.hpp"
#include "contlog/signature.hpp"

namespace contlog {

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_symbol, sort_mismatch };

  ParseError(Kind kind, const std::string& msg, SourceSpan span)
      : std::runtime_error(msg + " at line " + std::to_string(span.line) + ", column " +
                           std::to_string(span.column)),
        kind_(kind),
        span_(span) {}

  Kind kind() const { return kind_; }
  const SourceSpan& span() const { return span_; }

 private:
  Kind kind_;
  SourceSpan span_;
};

namespace detail {

struct Token {
  enum class Kind { ident, number, punct, end } kind = Kind::end;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t base) : text_(text), base_(base) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  SourceSpan span(std::size_t start, std::size_t end) const {
    SourceSpan s{base_ + start, base_ + end, 1, 1};
    for (std::size_t i = 0; i < start && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++s.line;
        s.column = 1;
      } else {
        ++s.column;
      }
    }
    s.line += line_offset_;
    return s;
  }
  SourceSpan span(const Token& t) const { return span(t.start, t.end); }

  void set_line_offset(int n) { line_offset_ = n; }
  std::string_view text() const { return text_; }

 private:
  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
  int line_offset_ = 0;
  Token tok_;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(ParseError::Kind::syntax, msg, span(at, std::min(at + 1, text_.size())));
  }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.start = pos_;
    if (pos_ >= text_.size()) {
      tok_.kind = Token::Kind::end;
      tok_.end = pos_;
      return;
    }
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t e = pos_;
      while (e < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[e])) || text_[e] == '_')) ++e;
      if (e < text_.size() && text_[e] == '{' && text_[e - 1] == '_') {
        const std::size_t close = text_.find('}', e);
        if (close == std::string_view::npos) fail("unterminated index suffix", e);
        for (std::size_t i = e + 1; i < close; ++i) {
          if (!std::isdigit(static_cast<unsigned char>(text_[i])) && text_[i] != ',') fail("bad index suffix", i);
        }
        e = close + 1;
      }
      tok_.kind = Token::Kind::ident;
      tok_.text = std::string(text_.substr(pos_, e - pos_));
      pos_ = e;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t e = pos_;
      while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
      if (e + 1 < text_.size() && text_[e] == '.' && std::isdigit(static_cast<unsigned char>(text_[e + 1]))) {
        ++e;
        while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
      }
      if (e < text_.size() && (text_[e] == 'e' || text_[e] == 'E')) {
        std::size_t f = e + 1;
        if (f < text_.size() && (text_[f] == '+' || text_[f] == '-')) ++f;
        if (f < text_.size() && std::isdigit(static_cast<unsigned char>(text_[f]))) {
          e = f;
          while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
        }
      }
      if (e + 1 < text_.size() && text_[e] == '/' && std::isdigit(static_cast<unsigned char>(text_[e + 1]))) {
        ++e;
        while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
      }
      tok_.kind = Token::Kind::number;
      tok_.text = std::string(text_.substr(pos_, e - pos_));
      pos_ = e;
    } else {
      std::size_t len = 1;
      if ((c == '-' || c == '+') && pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') len = 2;
      if (c == '<' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') len = 2;
      const std::string_view p = text_.substr(pos_, len);
      static constexpr std::string_view ok[] = {"-.", "+.", "<=", "(", ")", ",", "|", "-", "~", ":", ".", "*", "="};
      bool known = false;
      for (auto k : ok) known = known || p == k;
      if (!known) fail(std::string("unexpected character '") + c + "'", pos_);
      tok_.kind = Token::Kind::punct;
      tok_.text = std::string(p);
      pos_ += len;
    }
    tok_.end = pos_;
  }
};

inline bool parse_index_pair(const std::string& ident, const std::string& prefix, int& m, int& n) {
  if (ident.rfind(prefix + "_{", 0) != 0 || ident.back() != '}') return false;
  const std::string inner = ident.substr(prefix.size() + 2, ident.size() - prefix.size() - 3);
  const auto comma = inner.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == inner.size()) return false;
  if (inner.find(',', comma + 1) != std::string::npos) return false;
  m = std::stoi(inner.substr(0, comma));
  n = std::stoi(inner.substr(comma + 1));
  return true;
}

class Parser {
 public:
  Parser(std::string_view text, const Signature* sig, std::size_t base = 0,
         std::map<std::string, std::string> free_sorts = {})
      : lex_(text, base), sig_(sig) {
    if (sig_) checker_.emplace(*sig_, std::move(free_sorts));
  }

  Lexer& lexer() { return lex_; }
  std::map<std::string, std::string> free_sorts() const {
    return checker_ ? checker_->free_sorts() : std::map<std::string, std::string>{};
  }

  Formula formula() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::ident && (t.text == "sup" || t.text == "inf")) return binder();
    Formula lhs = unary();
    while (lex_.peek().kind == Token::Kind::punct && (lex_.peek().text == "-." || lex_.peek().text == "+.")) {
      const Connective op = lex_.next().text == "-." ? Connective::tminus : Connective::tplus;
      Formula rhs = unary();
      lhs = f::conn(op, {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  double number() {
    Token t = lex_.next();
    if (t.kind != Token::Kind::number) syntax("expected a number", t);
    return to_number(t);
  }

  void expect(const std::string& p) {
    Token t = lex_.next();
    if (t.kind != Token::Kind::punct || t.text != p) syntax("expected '" + p + "'", t);
  }

  void expect_end() {
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::end) syntax("unexpected '" + t.text + "'", t);
  }

  [[noreturn]] void syntax(const std::string& msg, const Token& t) const {
    throw ParseError(ParseError::Kind::syntax, msg, lex_.span(t));
  }

 private:
  Lexer lex_;
  const Signature* sig_;
  std::optional<SortChecker> checker_;

  double to_number(const Token& t) const {
    const auto slash = t.text.find('/');
    auto parse = [&](std::string_view s) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) syntax("malformed number", t);
      return v;
    };
    if (slash == std::string::npos) return parse(t.text);
    const double q = parse(std::string_view(t.text).substr(slash + 1));
    if (q == 0.0) syntax("zero denominator", t);
    return parse(std::string_view(t.text).substr(0, slash)) / q;
  }

  Formula binder() {
    const Token kw = lex_.next();
    const Quantifier q = kw.text == "sup" ? Quantifier::sup : Quantifier::inf;
    const Token var = lex_.next();
    if (var.kind != Token::Kind::ident) syntax("expected a variable name", var);
    expect(":");
    const Token sort = lex_.next();
    if (sort.kind != Token::Kind::ident) syntax("expected a sort name", sort);
    expect(".");
    if (checker_) {
      if (!sig_->find_sort(sort.text)) {
        throw ParseError(ParseError::Kind::unknown_symbol, "unknown sort '" + sort.text + "'", lex_.span(sort));
      }
      checker_->push(var.text, sort.text);
    }
    Formula body = formula();
    if (checker_) checker_->pop();
    return f::binder(q, var.text, sort.text, std::move(body));
  }

  Formula unary() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::punct && t.text == "~") {
      lex_.next();
      return f::neg(unary());
    }
    if (t.kind == Token::Kind::ident && (t.text == "sup" || t.text == "inf")) return binder();
    return primary();
  }

  Formula primary() {
    const Token t = lex_.next();
    if (t.kind == Token::Kind::number) {
      const double v = to_number(t);
      if (!std::isfinite(v)) syntax("constant out of range", t);
      return f::constant(v);
    }
    if (t.kind == Token::Kind::punct && t.text == "(") {
      Formula inner = formula();
      expect(")");
      return inner;
    }
    if (t.kind == Token::Kind::punct && t.text == "|") {
      Formula a = formula();
      expect("-");
      Formula b = formula();
      expect("|");
      return f::absdiff(std::move(a), std::move(b));
    }
    if (t.kind != Token::Kind::ident) syntax(t.kind == Token::Kind::end ? "unexpected end of input" : "unexpected '" + t.text + "'", t);
    if (t.text == "half" || t.text == "min" || t.text == "max") {
      if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == "(") {
        lex_.next();
        std::vector<Formula> args{formula()};
        while (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == ",") {
          lex_.next();
          args.push_back(formula());
        }
        const Token close = lex_.next();
        if (close.kind != Token::Kind::punct || close.text != ")") syntax("expected ')'", close);
        if (t.text == "half") {
          if (args.size() != 1) syntax("half takes one argument", t);
          return f::half(std::move(args[0]));
        }
        return f::conn(t.text == "min" ? Connective::min : Connective::max, std::move(args));
      }
    }
    return atom(t);
  }

  Formula atom(const Token& name) {
    std::vector<Term> terms;
    std::vector<Token> starts;
    std::size_t end = name.end;
    if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == "(") {
      lex_.next();
      starts.push_back(lex_.peek());
      terms.push_back(term());
      while (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == ",") {
        lex_.next();
        starts.push_back(lex_.peek());
        terms.push_back(term());
      }
      const Token close = lex_.next();
      if (close.kind != Token::Kind::punct || close.text != ")") syntax("expected ')'", close);
      end = close.end;
    }
    if (checker_) {
      const SourceSpan s = lex_.span(name.start, end);
      try {
        checker_->check_atom(name.text, terms);
      } catch (const UnknownSymbolError& e) {
        throw ParseError(ParseError::Kind::unknown_symbol, e.what(), s);
      } catch (const SortError& e) {
        throw ParseError(ParseError::Kind::sort_mismatch, e.what(), s);
      }
    }
    return f::atom(name.text, std::move(terms));
  }

  Term term() {
    Term lhs = factor();
    while (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == "*") {
      lex_.next();
      lhs = Term::mul(std::move(lhs), factor());
    }
    return lhs;
  }

  Term factor() {
    const Token t = lex_.next();
    if (t.kind == Token::Kind::number) {
      if (t.text == "1") return Term::one();
      if (t.text == "0") return Term::zero();
      syntax("only the constants 1 and 0 are terms", t);
    }
    if (t.kind == Token::Kind::punct && t.text == "(") {
      Term inner = term();
      expect(")");
      return inner;
    }
    if (t.kind != Token::Kind::ident) syntax("expected a term", t);
    int m = 0, n = 0;
    if (t.text == "inv" || parse_index_pair(t.text, "I", m, n)) {
      expect("(");
      Term inner = term();
      expect(")");
      if (t.text == "inv") return Term::inv(std::move(inner));
      if (m > n) throw ParseError(ParseError::Kind::sort_mismatch, "inclusion I_{m,n} requires m <= n", lex_.span(t));
      return Term::include(m, n, std::move(inner));
    }
    if (t.text == "sup" || t.text == "inf" || t.text == "min" || t.text == "max" || t.text == "half") {
      syntax("keyword '" + t.text + "' used as a variable", t);
    }
    return Term::var(t.text);
  }
};

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline void format_term(const Term& t, std::string& out) {
  switch (t.kind) {
    case Term::Kind::var: out += t.name; return;
    case Term::Kind::identity: out += '1'; return;
    case Term::Kind::zero: out += '0'; return;
    case Term::Kind::inv:
      out += "inv(";
      format_term(t.args[0], out);
      out += ')';
      return;
    case Term::Kind::include:
      out += "I_{" + std::to_string(t.from) + "," + std::to_string(t.to) + "}(";
      format_term(t.args[0], out);
      out += ')';
      return;
    case Term::Kind::mul:
      format_term(t.args[0], out);
      out += '*';
      if (t.args[1].kind == Term::Kind::mul) {
        out += '(';
        format_term(t.args[1], out);
        out += ')';
      } else {
        format_term(t.args[1], out);
      }
      return;
  }
}

inline bool is_binop(const Formula& fm) {
  return fm.kind == Formula::Kind::connective && (fm.op == Connective::tminus || fm.op == Connective::tplus);
}

inline void format_into(const Formula& fm, std::string& out);

inline void format_wrapped(const Formula& fm, bool wrap, std::string& out) {
  if (wrap) out += '(';
  format_into(fm, out);
  if (wrap) out += ')';
}

inline void format_into(const Formula& fm, std::string& out) {
  switch (fm.kind) {
    case Formula::Kind::constant: out += format_number(fm.value); return;
    case Formula::Kind::atom:
      out += fm.predicate;
      if (!fm.terms.empty()) {
        out += '(';
        for (std::size_t i = 0; i < fm.terms.size(); ++i) {
          if (i) out += ", ";
          format_term(fm.terms[i], out);
        }
        out += ')';
      }
      return;
    case Formula::Kind::binder:
      out += fm.quantifier == Quantifier::sup ? "sup " : "inf ";
      out += fm.var + ":" + fm.sort + " . ";
      format_into(fm.children[0], out);
      return;
    case Formula::Kind::connective: break;
  }
  const auto& c = fm.children;
  auto is_b = [](const Formula& x) { return x.kind == Formula::Kind::binder; };
  switch (fm.op) {
    case Connective::half:
      out += "half(";
      format_into(c[0], out);
      out += ')';
      return;
    case Connective::min:
    case Connective::max:
      out += fm.op == Connective::min ? "min(" : "max(";
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) out += ", ";
        format_into(c[i], out);
      }
      out += ')';
      return;
    case Connective::tminus:
    case Connective::tplus:
      format_wrapped(c[0], is_b(c[0]), out);
      out += fm.op == Connective::tminus ? " -. " : " +. ";
      format_wrapped(c[1], is_b(c[1]) || is_binop(c[1]), out);
      return;
    case Connective::absdiff:
      out += '|';
      format_wrapped(c[0], is_b(c[0]), out);
      out += " - ";
      format_wrapped(c[1], is_b(c[1]), out);
      out += '|';
      return;
    case Connective::neg:
      out += '~';
      format_wrapped(c[0], is_b(c[0]) || is_binop(c[0]), out);
      return;
  }
}

}  // namespace detail

/// Parses a formula; with a signature, also resolves symbols and checks sorts. `free_sorts`
/// declares sorts of free variables that cannot be inferred from their argument positions.
inline Formula parse_formula(std::string_view text, const Signature* sig = nullptr,
                             std::map<std::string, std::string> free_sorts = {}) {
  detail::Parser p(text, sig, 0, std::move(free_sorts));
  Formula fm = p.formula();
  p.expect_end();
  return fm;
}

inline Formula parse_formula(std::string_view text, const Signature& sig,
                             std::map<std::string, std::string> free_sorts = {}) {
  return parse_formula(text, &sig, std::move(free_sorts));
}

/// Deterministic printed form; parse_formula(format_formula(f)) == f.
inline std::string format_formula(const Formula& fm) {
  std::string out;
  detail::format_into(fm, out);
  return out;
}

inline std::string format_term(const Term& t) {
  std::string out;
  detail::format_term(t, out);
  return out;
}

namespace detail {

inline Condition parse_condition_at(std::string_view text, const Signature* sig, std::size_t base, int line_offset) {
  Parser p(text, sig, base);
  p.lexer().set_line_offset(line_offset);
  const Token first = p.lexer().peek();
  Formula fm = p.formula();
  const Token rel = p.lexer().next();
  Condition c;
  if (rel.kind == Token::Kind::punct && rel.text == "=") {
    const Token zero = p.lexer().next();
    if (zero.kind != Token::Kind::number || zero.text != "0") p.syntax("expected '0' after '='", zero);
    c = Condition::zero(std::move(fm));
  } else if (rel.kind == Token::Kind::punct && rel.text == "<=") {
    const double eps = p.number();
    if (eps < 0.0) p.syntax("negative bound", rel);
    c = Condition::at_most(std::move(fm), eps);
  } else {
    p.syntax("expected '= 0' or '<= bound'", rel);
  }
  p.expect_end();
  if (!is_closed(c.formula)) {
    const auto names = free_variable_names(c.formula);
    throw ParseError(ParseError::Kind::sort_mismatch, "condition has free variable '" + *names.begin() + "'",
                     p.lexer().span(first.start, rel.start));
  }
  return c;
}

}  // namespace detail

inline Condition parse_condition(std::string_view text, const Signature* sig = nullptr) {
  return detail::parse_condition_at(text, sig, 0, 0);
}

inline Condition parse_condition(std::string_view text, const Signature& sig) { return parse_condition(text, &sig); }

inline std::string format_condition(const Condition& c) {
  if (c.relation == Condition::Relation::equals_zero) return format_formula(c.formula) + " = 0";
  return format_formula(c.formula) + " <= " + detail::format_number(c.bound);
}

struct ConditionLine {
  Condition condition;
  int line = 0;
  std::string text;
};

/// Formula file: one condition per line, '#' starts a comment.
inline std::vector<ConditionLine> parse_condition_file(std::string_view text, const Signature* sig = nullptr) {
  std::vector<ConditionLine> out;
  std::size_t pos = 0;
  int line = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view row = text.substr(pos, nl - pos);
    const auto hash = row.find('#');
    if (hash != std::string_view::npos) row = row.substr(0, hash);
    bool blank = true;
    for (char ch : row) blank = blank && std::isspace(static_cast<unsigned char>(ch));
    if (!blank) {
      out.push_back({detail::parse_condition_at(row, sig, pos, line), line + 1, std::string(row)});
    }
    ++line;
    if (nl == text.size()) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace contlog
