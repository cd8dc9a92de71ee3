#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "ellopt/grid.hpp"

namespace ellopt {

class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& what, std::size_t position)
      : std::invalid_argument(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Arithmetic over the coordinates x1, x2:
///
///   expr    = term { ("+" | "-") term } ;
///   term    = unary { ("*" | "/") unary } ;
///   unary   = ("+" | "-") unary | power ;
///   power   = primary [ "^" unary ] ;            (right associative)
///   primary = number | "x1" | "x2" | "pi"
///           | func "(" expr ")" | "(" expr ")" ;
///   func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" | "tanh" ;
///   number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
///
/// Whitespace is ignored between tokens.
class Expression {
 public:
  /// Throws ExpressionError on a syntax error.
  static Expression parse(const std::string& text);

  double operator()(Point2 p) const;
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace ellopt
