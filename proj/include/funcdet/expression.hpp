#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace funcdet {

/// Real-valued coefficient expression in one variable `x`.
///
/// Grammar (highest precedence last):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' unary)?          // right-associative
///     primary := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
///
/// func is one of sin cos tan exp log sinh cosh tanh sqrt abs.
/// Values are immutable and cheap to copy; evaluation is thread-safe.
class Expression {
 public:
  /// Constant zero.
  Expression();

  /// Throws ParseError (syntax, unknown identifier, arity) with a byte offset.
  static Expression parse(std::string_view source);
  static Expression constant(double value);

  double operator()(double x) const;
  double evaluate(double x) const { return (*this)(x); }

  /// Canonical text form; parse(to_string()) evaluates bit-identically.
  std::string to_string() const;

  /// True when the tree does not reference `x`.
  bool is_constant() const;

  struct Impl;

 private:
  explicit Expression(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

}  // namespace funcdet
