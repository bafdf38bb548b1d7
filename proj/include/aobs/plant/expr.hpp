#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace aobs::plant {

/// Scalar expression over the measured output y and the input u, used for the
/// entries of φ(y,u) and G(y,u) in scenario files.
///
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' non-negative-integer)?
///   atom  := number | var | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
///   var   := 'y' | 'y'k | 'u' | 'u'k        (k is 1-based; bare y/u mean y1/u1)
///
/// Numbers are decimal floating literals and are parsed exactly (correctly
/// rounded), so "0.2" is the same double as in source code.
class Expr {
 public:
  struct Node;

  Expr();  // the constant 0
  static Expr parse(std::string_view text, std::size_t outputs, std::size_t inputs);
  static Expr constant(double v);

  double eval(std::span<const double> y, std::span<const double> u) const;
  const std::string& source() const noexcept { return source_; }
  /// True for expressions that are the literal constant zero.
  bool is_zero() const noexcept;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace aobs::plant
