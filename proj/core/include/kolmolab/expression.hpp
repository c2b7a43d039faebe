#pragma once

#include <string>
#include <vector>

#include "kolmolab/numerics.hpp"

namespace kolmolab {

/// Compiled arithmetic expression over x1..xN and t.
///
/// Grammar: numbers, x1..xN, t, pi, + - * / ^ (right associative), unary
/// minus, parentheses, and the functions sin cos exp abs sqrt min max.
class Expression {
 public:
  Expression() = default;
  static Expression parse(const std::string& text, int dim);
  static Expression constant(double value);

  double operator()(const Vec& x, double t) const;

  const std::string& text() const noexcept { return text_; }
  /// True when the expression does not reference any variable.
  bool is_constant() const noexcept;
  /// True when the expression does not reference x1..xN.
  bool is_spatially_constant() const noexcept;
  /// True when the expression references t.
  bool depends_on_time() const noexcept;

  enum class Op { Const, Var, Time, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Abs, Sqrt, Min, Max };
  struct Instr {
    Op op;
    double value = 0.0;
    int index = 0;
  };

 private:
  std::string text_;
  std::vector<Instr> code_;
};

}  // namespace kolmolab
