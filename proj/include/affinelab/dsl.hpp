// SPDX-License-Identifier: Apache-2.0
//
// Surface description language.
//
//   # comment
//   n = 3;
//   name = "paraboloid";                        (optional)
//   domain u1 = [-1, 1];                        (optional, per variable)
//   profile g(s) = integral(exp(s), 0.5, 0);    g(t) = 0 + int_{0.5}^t exp(s) ds
//   profile k(s) = ode2(s^2, -4*s, 2, 1, 1, 3); s^2 k'' - 4 s k' + 2 k = 0, k(1)=1, k'(1)=3
//   F = (u1, u2, u3, (u1^2 + u2^2 + u3^2)/2);
//
// Exponents must be constant. `^` binds tighter than unary minus and is right
// associative. Non-integer exponents need a positive base.
#pragma once

#include <affinelab/error.hpp>
#include <affinelab/jet.hpp>
#include <affinelab/linalg.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace affinelab {

namespace dsl {

enum class Op { number, variable, add, sub, mul, div, neg, pow, call };
enum class Func { exp, log, sin, cos, sqrt, profile };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::number;
  double value = 0.0;   // literal value, or the folded exponent of a pow node
  int slot = -1;        // variable slot, or profile index for Func::profile
  Func func = Func::exp;
  std::string name;     // variable or function name as written
  std::vector<NodePtr> args;
  int line = 0, column = 0;
};

inline NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::number;
  n->value = v;
  return n;
}

inline NodePtr variable(std::string name, int slot) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->name = std::move(name);
  n->slot = slot;
  return n;
}

inline NodePtr binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(a), std::move(b)};
  return n;
}

inline NodePtr negate(NodePtr a) {
  auto n = std::make_shared<Node>();
  n->op = Op::neg;
  n->args = {std::move(a)};
  return n;
}

inline NodePtr power(NodePtr base, NodePtr exponent, double folded) {
  auto n = std::make_shared<Node>();
  n->op = Op::pow;
  n->value = folded;
  n->args = {std::move(base), std::move(exponent)};
  return n;
}

inline NodePtr call(Func f, std::string name, NodePtr arg, int profile_index = -1) {
  auto n = std::make_shared<Node>();
  n->op = Op::call;
  n->func = f;
  n->name = std::move(name);
  n->slot = profile_index;
  n->args = {std::move(arg)};
  return n;
}

}  // namespace dsl

/// Values of a profile on the grid t0 + j * kProfileStep, filled on demand.
/// Evaluation starts from the nearest node so that nested profiles stay cheap.
struct ProfileCache {
  std::mutex mutex;
  std::map<int, std::array<double, 2>> nodes;  // integral: {value, 0}; ode2: {k, k'}
};

inline constexpr double kProfileStep = 1.0 / 32.0;

/// A univariate function defined by quadrature or by a linear second-order ODE.
struct ProfileDef {
  enum class Kind { integral, ode2 };
  std::string name;
  std::string dummy = "s";
  Kind kind = Kind::integral;
  /// integral: {integrand}; ode2: {a2, a1, a0} for a2 k'' + a1 k' + a0 k = 0.
  std::vector<dsl::NodePtr> exprs;
  double t0 = 0.0;
  double value0 = 0.0;  // g(t0) or k(t0)
  double slope0 = 0.0;  // k'(t0), ode2 only
  std::shared_ptr<ProfileCache> cache = std::make_shared<ProfileCache>();
};

struct Box {
  double lo = 0.0, hi = 0.0;
};

struct ImmersionSpec {
  std::string name;
  int chart_dim = 0;
  std::vector<dsl::NodePtr> components;
  std::vector<std::optional<Box>> domain;  // one slot per chart variable
  std::vector<ProfileDef> profiles;

  int ambient_dim() const { return chart_dim + 1; }
};

using ChartPoint = std::vector<double>;

// ---------------------------------------------------------------------------
// Printing

namespace dsl {

inline std::string format_number(double v) {
  if (v == std::round(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline int precedence(const Node& n) {
  switch (n.op) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    case Op::number: return n.value < 0 ? 3 : 5;
    default: return 5;
  }
}

inline std::string to_string(const Node& n);

inline std::string wrap(const Node& n, bool parens) {
  return parens ? "(" + to_string(n) + ")" : to_string(n);
}

inline std::string to_string(const Node& n) {
  switch (n.op) {
    case Op::number: return format_number(n.value);
    case Op::variable: return n.name;
    case Op::add: return to_string(*n.args[0]) + " + " + wrap(*n.args[1], precedence(*n.args[1]) < 1);
    case Op::sub: return to_string(*n.args[0]) + " - " + wrap(*n.args[1], precedence(*n.args[1]) <= 1);
    case Op::mul:
      return wrap(*n.args[0], precedence(*n.args[0]) < 2) + "*" +
             wrap(*n.args[1], precedence(*n.args[1]) < 2);
    case Op::div:
      return wrap(*n.args[0], precedence(*n.args[0]) < 2) + "/" +
             wrap(*n.args[1], precedence(*n.args[1]) <= 2);
    case Op::neg: return "-" + wrap(*n.args[0], precedence(*n.args[0]) < 3);
    case Op::pow: {
      const Node& e = *n.args[1];
      const bool simple = e.op == Op::number && e.value >= 0;
      return wrap(*n.args[0], precedence(*n.args[0]) <= 4) + "^" + wrap(e, !simple);
    }
    case Op::call: return n.name + "(" + to_string(*n.args[0]) + ")";
  }
  return "?";
}

}  // namespace dsl

/// Canonical text form of a spec; parse(to_sdl(s)) reproduces s.
inline std::string to_sdl(const ImmersionSpec& spec) {
  std::string out = "n = " + std::to_string(spec.chart_dim) + ";\n";
  if (!spec.name.empty()) out += "name = \"" + spec.name + "\";\n";
  for (std::size_t k = 0; k < spec.domain.size(); ++k)
    if (spec.domain[k])
      out += "domain u" + std::to_string(k + 1) + " = [" + dsl::format_number(spec.domain[k]->lo) +
             ", " + dsl::format_number(spec.domain[k]->hi) + "];\n";
  for (const auto& p : spec.profiles) {
    out += "profile " + p.name + "(" + p.dummy + ") = ";
    if (p.kind == ProfileDef::Kind::integral) {
      out += "integral(" + dsl::to_string(*p.exprs[0]) + ", " + dsl::format_number(p.t0) + ", " +
             dsl::format_number(p.value0) + ");\n";
    } else {
      out += "ode2(" + dsl::to_string(*p.exprs[0]) + ", " + dsl::to_string(*p.exprs[1]) + ", " +
             dsl::to_string(*p.exprs[2]) + ", " + dsl::format_number(p.t0) + ", " +
             dsl::format_number(p.value0) + ", " + dsl::format_number(p.slope0) + ");\n";
    }
  }
  out += "F = (";
  for (std::size_t k = 0; k < spec.components.size(); ++k) {
    if (k) out += ",\n     ";
    out += dsl::to_string(*spec.components[k]);
  }
  out += ");\n";
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace dsl {

enum class Tok { number, ident, string, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  int line = 1, column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
          advance();
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
          std::size_t save = pos_;
          int save_col = col_;
          advance();
          if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
          if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
          } else {
            pos_ = save;
            col_ = save_col;
          }
        }
        t.kind = Tok::number;
        t.text = std::string(src_.substr(start, pos_ - start));
        try {
          std::size_t used = 0;
          t.number = std::stod(t.text, &used);
          if (used != t.text.size()) throw std::invalid_argument(t.text);
        } catch (const std::exception&) {
          throw ParseError(ErrorCode::syntax, "malformed number '" + t.text + "'", t.line, t.column);
        }
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.kind = Tok::ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (c == '"') {
        advance();
        std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') advance();
        if (pos_ >= src_.size() || src_[pos_] != '"')
          throw ParseError(ErrorCode::syntax, "unterminated string", t.line, t.column);
        t.kind = Tok::string;
        t.text = std::string(src_.substr(start, pos_ - start));
        advance();
      } else if (std::string_view("+-*/^(),;=[]").find(c) != std::string_view::npos) {
        t.kind = Tok::punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(ErrorCode::syntax, std::string("unexpected character '") + c + "'", t.line,
                         t.column);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

inline std::optional<Func> builtin(std::string_view name) {
  if (name == "exp") return Func::exp;
  if (name == "log") return Func::log;
  if (name == "sin") return Func::sin;
  if (name == "cos") return Func::cos;
  if (name == "sqrt") return Func::sqrt;
  return std::nullopt;
}

/// Constant-fold an expression without variables; nullopt if it has any.
inline std::optional<double> fold(const Node& n) {
  switch (n.op) {
    case Op::number: return n.value;
    case Op::variable: return std::nullopt;
    case Op::neg: {
      auto a = fold(*n.args[0]);
      return a ? std::optional(-*a) : std::nullopt;
    }
    case Op::call: {
      if (n.func == Func::profile) return std::nullopt;
      auto a = fold(*n.args[0]);
      if (!a) return std::nullopt;
      switch (n.func) {
        case Func::exp: return std::exp(*a);
        case Func::log: return *a > 0 ? std::optional(std::log(*a)) : std::nullopt;
        case Func::sin: return std::sin(*a);
        case Func::cos: return std::cos(*a);
        case Func::sqrt: return *a > 0 ? std::optional(std::sqrt(*a)) : std::nullopt;
        default: return std::nullopt;
      }
    }
    default: break;
  }
  auto a = fold(*n.args[0]);
  auto b = fold(*n.args[1]);
  if (!a || !b) return std::nullopt;
  switch (n.op) {
    case Op::add: return *a + *b;
    case Op::sub: return *a - *b;
    case Op::mul: return *a * *b;
    case Op::div: return *a / *b;
    case Op::pow: return std::pow(*a, *b);
    default: return std::nullopt;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  ImmersionSpec run() {
    ImmersionSpec spec;
    const Token& first = peek();
    if (!(first.kind == Tok::ident && first.text == "n"))
      fail(first, "expected header 'n = <int>'");
    next();
    expect("=");
    const Token& nt = next();
    if (nt.kind != Tok::number || nt.number != std::round(nt.number) || nt.number < 1 || nt.number > 7)
      fail(nt, "chart dimension must be an integer in [1, 7]");
    spec.chart_dim = static_cast<int>(nt.number);
    spec.domain.assign(static_cast<std::size_t>(spec.chart_dim), std::nullopt);
    bool have_f = false;
    while (peek().kind != Tok::end) {
      expect(";");
      if (peek().kind == Tok::end) break;
      const Token& kw = next();
      if (kw.kind != Tok::ident) fail(kw, "expected a statement");
      if (have_f) fail(kw, "statements after 'F = (...)' are not allowed");
      if (kw.text == "name") {
        expect("=");
        const Token& s = next();
        if (s.kind != Tok::string) fail(s, "expected a string literal");
        spec.name = s.text;
      } else if (kw.text == "domain") {
        const Token& v = next();
        const int slot = chart_slot(spec, v);
        if (slot < 0) semantic(v, "unknown chart variable '" + v.text + "'");
        expect("=");
        expect("[");
        double lo = constant_expr(spec);
        expect(",");
        double hi = constant_expr(spec);
        expect("]");
        if (!(lo < hi)) semantic(v, "empty domain interval");
        spec.domain[static_cast<std::size_t>(slot)] = Box{lo, hi};
      } else if (kw.text == "profile") {
        spec.profiles.push_back(profile(spec));
      } else if (kw.text == "F") {
        expect("=");
        expect("(");
        scope_ = Scope::chart;
        spec.components.push_back(expr(spec));
        while (accept(",")) spec.components.push_back(expr(spec));
        expect(")");
        if (static_cast<int>(spec.components.size()) != spec.ambient_dim())
          semantic(kw, "F has " + std::to_string(spec.components.size()) +
                           " components; n = " + std::to_string(spec.chart_dim) + " requires " +
                           std::to_string(spec.ambient_dim()));
        have_f = true;
      } else {
        fail(kw, "unknown statement '" + kw.text + "'");
      }
    }
    if (!have_f) fail(peek(), "missing 'F = (...)'");
    return spec;
  }

 private:
  enum class Scope { chart, profile, constant };

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError(ErrorCode::syntax, msg, t.line, t.column);
  }
  [[noreturn]] static void semantic(const Token& t, const std::string& msg) {
    throw ParseError(ErrorCode::semantic, msg, t.line, t.column);
  }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::end) ++pos_;
    return t;
  }
  bool accept(std::string_view p) {
    if (peek().kind == Tok::punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(std::string_view p) {
    if (!accept(p)) fail(peek(), "expected '" + std::string(p) + "'" + found());
  }
  std::string found() const {
    const Token& t = peek();
    return t.kind == Tok::end ? " at end of input" : ", found '" + t.text + "'";
  }

  static int chart_slot(const ImmersionSpec& spec, const Token& t) {
    if (t.kind != Tok::ident || t.text.size() < 2 || t.text[0] != 'u') return -1;
    for (std::size_t k = 1; k < t.text.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(t.text[k]))) return -1;
    if (t.text[1] == '0') return -1;
    const int k = std::stoi(t.text.substr(1));
    return k >= 1 && k <= spec.chart_dim ? k - 1 : -1;
  }

  double constant_expr(const ImmersionSpec& spec) {
    const Token& at = peek();
    const Scope saved = scope_;
    scope_ = Scope::constant;
    NodePtr e = expr(spec);
    scope_ = saved;
    auto v = fold(*e);
    if (!v || !std::isfinite(*v)) semantic(at, "expected a constant expression");
    return *v;
  }

  ProfileDef profile(const ImmersionSpec& spec) {
    ProfileDef p;
    const Token& name = next();
    if (name.kind != Tok::ident) fail(name, "expected profile name");
    if (builtin(name.text) || name.text == "F" || chart_slot(spec, name) >= 0)
      semantic(name, "profile name '" + name.text + "' is reserved");
    for (const auto& q : spec.profiles)
      if (q.name == name.text) semantic(name, "profile '" + name.text + "' redefined");
    p.name = name.text;
    expect("(");
    const Token& dummy = next();
    if (dummy.kind != Tok::ident || builtin(dummy.text)) fail(dummy, "expected a dummy variable name");
    p.dummy = dummy.text;
    expect(")");
    expect("=");
    const Token& kind = next();
    dummy_ = p.dummy;
    scope_ = Scope::profile;
    if (kind.kind == Tok::ident && kind.text == "integral") {
      p.kind = ProfileDef::Kind::integral;
      expect("(");
      p.exprs.push_back(expr(spec));
      expect(",");
      p.t0 = constant_expr(spec);
      expect(",");
      p.value0 = constant_expr(spec);
      expect(")");
    } else if (kind.kind == Tok::ident && kind.text == "ode2") {
      p.kind = ProfileDef::Kind::ode2;
      expect("(");
      for (int k = 0; k < 3; ++k) {
        p.exprs.push_back(expr(spec));
        expect(",");
      }
      p.t0 = constant_expr(spec);
      expect(",");
      p.value0 = constant_expr(spec);
      expect(",");
      p.slope0 = constant_expr(spec);
      expect(")");
    } else {
      fail(kind, "expected 'integral' or 'ode2'");
    }
    scope_ = Scope::chart;
    return p;
  }

  NodePtr expr(const ImmersionSpec& spec) {
    NodePtr lhs = term(spec);
    for (;;) {
      if (accept("+")) lhs = binary(Op::add, lhs, term(spec));
      else if (accept("-")) lhs = binary(Op::sub, lhs, term(spec));
      else return lhs;
    }
  }

  NodePtr term(const ImmersionSpec& spec) {
    NodePtr lhs = unary(spec);
    for (;;) {
      if (accept("*")) lhs = binary(Op::mul, lhs, unary(spec));
      else if (accept("/")) lhs = binary(Op::div, lhs, unary(spec));
      else return lhs;
    }
  }

  NodePtr unary(const ImmersionSpec& spec) {
    if (accept("-")) return negate(unary(spec));
    if (accept("+")) return unary(spec);
    return power_expr(spec);
  }

  NodePtr power_expr(const ImmersionSpec& spec) {
    NodePtr base = primary(spec);
    const Token& at = peek();
    if (!accept("^")) return base;
    NodePtr exponent = unary(spec);  // right associative, allows u^-2
    auto folded = fold(*exponent);
    if (!folded || !std::isfinite(*folded)) semantic(at, "exponent must be a constant");
    auto n = std::const_pointer_cast<Node>(power(base, exponent, *folded));
    n->line = at.line;
    n->column = at.column;
    return n;
  }

  NodePtr primary(const ImmersionSpec& spec) {
    const Token& t = next();
    if (t.kind == Tok::number) return number(t.number);
    if (t.kind == Tok::punct && t.text == "(") {
      NodePtr e = expr(spec);
      expect(")");
      return e;
    }
    if (t.kind != Tok::ident) fail(t, "expected an expression" + std::string(t.kind == Tok::end ? " at end of input" : ", found '" + t.text + "'"));
    if (peek().kind == Tok::punct && peek().text == "(") {
      next();
      std::vector<NodePtr> args;
      if (!(peek().kind == Tok::punct && peek().text == ")")) {
        args.push_back(expr(spec));
        while (accept(",")) args.push_back(expr(spec));
      }
      expect(")");
      if (args.size() != 1)
        semantic(t, "function '" + t.text + "' takes 1 argument, got " + std::to_string(args.size()));
      NodePtr n;
      if (auto f = builtin(t.text)) {
        n = call(*f, t.text, args[0]);
      } else {
        int index = -1;
        for (std::size_t k = 0; k < spec.profiles.size(); ++k)
          if (spec.profiles[k].name == t.text) index = static_cast<int>(k);
        if (index < 0 || scope_ == Scope::constant) semantic(t, "unknown function '" + t.text + "'");
        n = call(Func::profile, t.text, args[0], index);
      }
      auto m = std::const_pointer_cast<Node>(n);
      m->line = t.line;
      m->column = t.column;
      return m;
    }
    if (builtin(t.text)) semantic(t, "function '" + t.text + "' used without arguments");
    if (scope_ == Scope::chart) {
      const int slot = chart_slot(spec, t);
      if (slot < 0) semantic(t, "unbound variable '" + t.text + "'");
      return variable(t.text, slot);
    }
    if (scope_ == Scope::profile && t.text == dummy_) return variable(t.text, 0);
    semantic(t, "unbound variable '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Scope scope_ = Scope::chart;
  std::string dummy_;
};

}  // namespace dsl

inline ImmersionSpec parse_immersion(std::string_view text) { return dsl::Parser(text).run(); }

// ---------------------------------------------------------------------------
// Evaluation

namespace dsl {

inline int order_of(double) { return 0; }
inline int order_of(const Jet& j) { return j.order(); }

template <class V>
V apply_builtin(Func f, const V& a) {
  if constexpr (std::is_same_v<V, double>) {
    auto check = [&](bool ok, const char* what) {
      if (!ok) throw Error(ErrorCode::evaluation, std::string(what) + " evaluated at " + std::to_string(a));
    };
    switch (f) {
      case Func::exp: return std::exp(a);
      case Func::log: check(a > 0, "log"); return std::log(a);
      case Func::sin: return std::sin(a);
      case Func::cos: return std::cos(a);
      case Func::sqrt: check(a > 0, "sqrt"); return std::sqrt(a);
      default: break;
    }
    return a;
  } else {
    switch (f) {
      case Func::exp: return exp(a);
      case Func::log: return log(a);
      case Func::sin: return sin(a);
      case Func::cos: return cos(a);
      case Func::sqrt: return sqrt(a);
      default: break;
    }
    return a;
  }
}

template <class V>
V apply_power(const V& base, double p) {
  if constexpr (std::is_same_v<V, double>) {
    if (p == std::round(p)) {
      if (p < 0 && base == 0.0) throw Error(ErrorCode::evaluation, "negative power of zero");
      return std::pow(base, p);
    }
    if (!(base > 0))
      throw Error(ErrorCode::evaluation, "non-integer power of non-positive base " + std::to_string(base));
    return std::pow(base, p);
  } else {
    return pow(base, p);
  }
}

inline std::vector<double> profile_series(const ImmersionSpec& spec, int index, double at, int order);

template <class V>
V evaluate(const ImmersionSpec& spec, const Node& n, std::span<const V> vars) {
  switch (n.op) {
    case Op::number:
      if constexpr (std::is_same_v<V, double>) return n.value;
      else return Jet::constant(vars[0].num_vars(), vars[0].order(), n.value);
    case Op::variable: return vars[static_cast<std::size_t>(n.slot)];
    case Op::add: return evaluate(spec, *n.args[0], vars) + evaluate(spec, *n.args[1], vars);
    case Op::sub: return evaluate(spec, *n.args[0], vars) - evaluate(spec, *n.args[1], vars);
    case Op::mul: return evaluate(spec, *n.args[0], vars) * evaluate(spec, *n.args[1], vars);
    case Op::div: {
      V d = evaluate(spec, *n.args[1], vars);
      if (leading(d) == 0.0)
        throw Error(ErrorCode::evaluation, "division by zero in '" + to_string(n) + "'");
      return evaluate(spec, *n.args[0], vars) / d;
    }
    case Op::neg: return -evaluate(spec, *n.args[0], vars);
    case Op::pow: {
      V base = evaluate(spec, *n.args[0], vars);
      try {
        return apply_power(base, n.value);
      } catch (const Error& e) {
        throw Error(ErrorCode::evaluation, "in '" + to_string(n) + "': " + e.what());
      }
    }
    case Op::call: {
      V arg = evaluate(spec, *n.args[0], vars);
      try {
        if (n.func != Func::profile) return apply_builtin(n.func, arg);
        const auto series = profile_series(spec, n.slot, leading(arg), order_of(arg));
        if constexpr (std::is_same_v<V, double>) return series[0];
        else return compose(series, arg);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::evaluation) throw;
        throw Error(ErrorCode::evaluation, "in '" + to_string(n) + "': " + e.what());
      }
    }
  }
  throw Error(ErrorCode::semantic, "malformed expression");
}

/// Univariate Taylor coefficients of a profile function at `at`.
inline std::vector<double> profile_series(const ImmersionSpec& spec, int index, double at, int order) {
  const ProfileDef& p = spec.profiles.at(static_cast<std::size_t>(index));
  auto scalar = [&](const NodePtr& e, double s) {
    const double v[1] = {s};
    return evaluate<double>(spec, *e, std::span<const double>(v, 1));
  };
  auto series_of = [&](const NodePtr& e, int ord) {
    const Jet v[1] = {Jet::variable(1, ord, 0, at)};
    Jet j = evaluate<Jet>(spec, *e, std::span<const Jet>(v, 1));
    return std::vector<double>(j.coefficients().begin(), j.coefficients().end());
  };
  if (!std::isfinite(at)) throw Error(ErrorCode::evaluation, "profile evaluated at non-finite point");

  using State = std::array<double, 2>;
  // advances `state` from a to b
  auto advance = [&](State& state, double a, double b) {
    if (a == b) return;
    if (p.kind == ProfileDef::Kind::integral) {
      double err = 0.0;
      state[0] += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double s) { return scalar(p.exprs[0], s); }, a, b, 6, 1e-12, &err);
      return;
    }
    // a2 k'' + a1 k' + a0 k = 0
    auto rhs = [&](const State& y, State& dy, double s) {
      const double a2 = scalar(p.exprs[0], s);
      if (a2 == 0.0) throw Error(ErrorCode::evaluation, "ode2: leading coefficient vanishes at s = " + std::to_string(s));
      dy[0] = y[1];
      dy[1] = -(scalar(p.exprs[1], s) * y[1] + scalar(p.exprs[2], s) * y[0]) / a2;
    };
    namespace odeint = boost::numeric::odeint;
    auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, state, a, b, (b - a) / 8);
  };
  auto node_time = [&](int j) { return p.t0 + j * kProfileStep; };
  const int target = static_cast<int>(std::lround((at - p.t0) / kProfileStep));
  State state;
  {
    std::lock_guard<std::mutex> lock(p.cache->mutex);
    auto& nodes = p.cache->nodes;
    if (nodes.empty()) nodes[0] = {p.value0, p.slope0};
    const int dir = target >= 0 ? 1 : -1;
    int j = 0;
    // walk outward from the farthest cached node on the way to the target
    for (int k = target; k != 0; k -= dir)
      if (nodes.count(k)) {
        j = k;
        break;
      }
    state = nodes.at(j);
    while (j != target) {
      advance(state, node_time(j), node_time(j + dir));
      j += dir;
      nodes[j] = state;
    }
  }
  advance(state, node_time(target), at);

  std::vector<double> out(static_cast<std::size_t>(order) + 1, 0.0);
  if (p.kind == ProfileDef::Kind::integral) {
    out[0] = state[0];
    if (order > 0) {
      const auto d = series_of(p.exprs[0], order - 1);
      for (int k = 1; k <= order; ++k) out[static_cast<std::size_t>(k)] = d[static_cast<std::size_t>(k - 1)] / k;
    }
    return out;
  }

  out[0] = state[0];
  if (order >= 1) out[1] = state[1];
  if (order >= 2) {
    const auto a2 = series_of(p.exprs[0], order - 2);
    const auto a1 = series_of(p.exprs[1], order - 2);
    const auto a0 = series_of(p.exprs[2], order - 2);
    for (int m = 0; m + 2 <= order; ++m) {
      double rest = 0.0;
      for (int i = 0; i <= m; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int j = m - i;
        if (i > 0) rest += a2[ui] * (j + 2) * (j + 1) * out[static_cast<std::size_t>(j + 2)];
        rest += a1[ui] * (j + 1) * out[static_cast<std::size_t>(j + 1)];
        rest += a0[ui] * out[static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(m + 2)] = -rest / (a2[0] * (m + 2) * (m + 1));
    }
  }
  return out;
}

}  // namespace dsl

/// Pointwise values of all n+1 components.
inline std::vector<double> eval_point(const ImmersionSpec& spec, const ChartPoint& p) {
  if (static_cast<int>(p.size()) != spec.chart_dim)
    throw Error(ErrorCode::dimension, "chart point has " + std::to_string(p.size()) +
                                          " coordinates, expected " + std::to_string(spec.chart_dim));
  std::vector<double> out;
  for (const auto& c : spec.components) out.push_back(dsl::evaluate<double>(spec, *c, p));
  return out;
}

/// Taylor expansion of every component about p, truncated at `order`.
inline std::vector<Jet> eval_jet(const ImmersionSpec& spec, const ChartPoint& p, int order) {
  if (static_cast<int>(p.size()) != spec.chart_dim)
    throw Error(ErrorCode::dimension, "chart point has " + std::to_string(p.size()) +
                                          " coordinates, expected " + std::to_string(spec.chart_dim));
  if (order < 0) throw Error(ErrorCode::order, "eval_jet: negative order");
  std::vector<Jet> vars;
  for (int k = 0; k < spec.chart_dim; ++k)
    vars.push_back(Jet::variable(spec.chart_dim, order, k, p[static_cast<std::size_t>(k)]));
  std::vector<Jet> out;
  for (const auto& c : spec.components) out.push_back(dsl::evaluate<Jet>(spec, *c, vars));
  return out;
}

// ---------------------------------------------------------------------------
// Affine transforms of specs

namespace dsl {

inline NodePtr substitute(const NodePtr& n, const std::vector<NodePtr>& replacement) {
  if (n->op == Op::variable) return replacement.at(static_cast<std::size_t>(n->slot));
  if (n->op == Op::number) return n;
  auto copy = std::make_shared<Node>(*n);
  for (auto& a : copy->args) a = substitute(a, replacement);
  return copy;
}

/// sum_k coeff_k * terms_k + offset, skipping exact zeros.
inline NodePtr linear_combination(const std::vector<double>& coeff, const std::vector<NodePtr>& terms,
                                  double offset) {
  NodePtr acc;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (coeff[k] == 0.0) continue;
    NodePtr t = coeff[k] == 1.0 ? terms[k] : binary(Op::mul, number(coeff[k]), terms[k]);
    acc = acc ? binary(Op::add, acc, t) : t;
  }
  if (offset != 0.0 || !acc) acc = acc ? binary(Op::add, acc, number(offset)) : number(offset);
  return acc;
}

}  // namespace dsl

/// x -> A x + b applied to the immersion (A is (n+1)x(n+1), row-major).
inline ImmersionSpec compose_ambient(const ImmersionSpec& spec, const Mat<double>& a,
                                     const std::vector<double>& b) {
  const auto m = static_cast<std::size_t>(spec.ambient_dim());
  if (a.rows() != m || a.cols() != m || b.size() != m)
    throw Error(ErrorCode::dimension, "compose_ambient: shape mismatch");
  ImmersionSpec out = spec;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = a(i, j);
    out.components[i] = dsl::linear_combination(row, spec.components, b[i]);
  }
  return out;
}

/// Precompose with the chart change u = B v + offset. Domain hints are dropped
/// because the image of a box is no longer a box.
inline ImmersionSpec reparametrize(const ImmersionSpec& spec, const Mat<double>& b,
                                   const std::vector<double>& offset) {
  const auto n = static_cast<std::size_t>(spec.chart_dim);
  if (b.rows() != n || b.cols() != n || offset.size() != n)
    throw Error(ErrorCode::dimension, "reparametrize: shape mismatch");
  std::vector<dsl::NodePtr> vars;
  for (std::size_t k = 0; k < n; ++k) vars.push_back(dsl::variable("u" + std::to_string(k + 1), static_cast<int>(k)));
  std::vector<dsl::NodePtr> repl;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = b(i, j);
    repl.push_back(dsl::linear_combination(row, vars, offset[i]));
  }
  ImmersionSpec out = spec;
  for (auto& c : out.components) c = dsl::substitute(c, repl);
  out.domain.assign(n, std::nullopt);
  return out;
}

}  // namespace affinelab
