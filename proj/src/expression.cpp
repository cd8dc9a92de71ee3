#include "ellopt/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace ellopt {

struct Expression::Node {
  enum class Kind { constant, x1, x2, neg, add, sub, mul, div, pow, call } kind;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a, b;

  double eval(Point2 p) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::x1: return p.x;
      case Kind::x2: return p.y;
      case Kind::neg: return -a->eval(p);
      case Kind::add: return a->eval(p) + b->eval(p);
      case Kind::sub: return a->eval(p) - b->eval(p);
      case Kind::mul: return a->eval(p) * b->eval(p);
      case Kind::div: return a->eval(p) / b->eval(p);
      case Kind::pow: return std::pow(a->eval(p), b->eval(p));
      case Kind::call: return fn(a->eval(p));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

struct Function {
  const char* name;
  double (*fn)(double);
};

const Function kFunctions[] = {
    {"sin", [](double x) { return std::sin(x); }},   {"cos", [](double x) { return std::cos(x); }},
    {"exp", [](double x) { return std::exp(x); }},   {"log", [](double x) { return std::log(x); }},
    {"sqrt", [](double x) { return std::sqrt(x); }}, {"abs", [](double x) { return std::abs(x); }},
    {"tanh", [](double x) { return std::tanh(x); }},
};

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ExpressionError(msg, pos_); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Kind::add, lhs, term());
      else if (accept('-')) lhs = make(Kind::sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Kind::mul, lhs, unary());
      else if (accept('/')) lhs = make(Kind::div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x1") return make(Kind::x1);
      if (id == "x2") return make(Kind::x2);
      if (id == "pi") {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::constant;
        n->value = std::numbers::pi;
        return n;
      }
      for (const auto& f : kFunctions) {
        if (id == f.name) {
          if (!accept('(')) fail("expected '(' after " + id);
          auto n = std::make_shared<Expression::Node>();
          n->kind = Kind::call;
          n->fn = f.fn;
          n->a = expr();
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t d0 = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return pos_ > d0;
    };
    bool any = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      any = digits() || any;
    }
    if (!any) fail("malformed number");
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (!digits()) fail("malformed exponent");
    }
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc()) fail("malformed number");
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::constant;
    n->value = v;
    return n;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.source_ = text;
  e.root_ = Parser(text).parse_all();
  return e;
}

double Expression::operator()(Point2 p) const { return root_->eval(p); }

}  // namespace ellopt
