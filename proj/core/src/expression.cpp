#include "kolmolab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string_view>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

constexpr int kMaxStack = 64;

using Op = Expression::Op;
using Instr = Expression::Instr;

class Parser {
 public:
  Parser(std::string_view text, int dim, std::vector<Instr>& out) : s_(text), dim_(dim), out_(out) {}

  void run() {
    sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError,
                "expression '" + std::string(s_) + "' at column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void sum() {
    product();
    for (;;) {
      if (eat('+')) {
        product();
        out_.push_back({Op::Add});
      } else if (eat('-')) {
        product();
        out_.push_back({Op::Sub});
      } else {
        return;
      }
    }
  }

  void product() {
    unary();
    for (;;) {
      if (eat('*')) {
        unary();
        out_.push_back({Op::Mul});
      } else if (eat('/')) {
        unary();
        out_.push_back({Op::Div});
      } else {
        return;
      }
    }
  }

  void unary() {
    if (eat('-')) {
      unary();
      out_.push_back({Op::Neg});
    } else if (eat('+')) {
      unary();
    } else {
      power();
    }
  }

  void power() {
    atom();
    if (eat('^')) {
      unary();
      out_.push_back({Op::Pow});
    }
  }

  void atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      sum();
      if (!eat(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(s_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      out_.push_back({Op::Const, v});
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t begin = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name(s_.substr(begin, pos_ - begin));
      if (name == "t") {
        out_.push_back({Op::Time});
        return;
      }
      if (name == "pi") {
        out_.push_back({Op::Const, std::numbers::pi});
        return;
      }
      if (name.size() > 1 && name[0] == 'x' &&
          name.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int idx = std::stoi(name.substr(1));
        if (idx < 1 || idx > dim_) {
          pos_ = begin;
          fail("variable " + name + " outside x1..x" + std::to_string(dim_));
        }
        out_.push_back({Op::Var, 0.0, idx - 1});
        return;
      }
      function(name, begin);
      return;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  void function(const std::string& name, std::size_t begin) {
    struct Entry {
      const char* name;
      Op op;
      int arity;
    };
    static constexpr Entry kTable[] = {{"sin", Op::Sin, 1},   {"cos", Op::Cos, 1}, {"exp", Op::Exp, 1},
                                       {"abs", Op::Abs, 1},   {"sqrt", Op::Sqrt, 1}, {"min", Op::Min, 2},
                                       {"max", Op::Max, 2}};
    for (const auto& e : kTable) {
      if (name != e.name) continue;
      if (!eat('(')) fail("expected '(' after " + name);
      sum();
      for (int k = 1; k < e.arity; ++k) {
        if (!eat(',')) fail("expected ',' in " + name);
        sum();
      }
      if (!eat(')')) fail("expected ')' after arguments of " + name);
      out_.push_back({e.op});
      return;
    }
    pos_ = begin;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view s_;
  int dim_;
  std::vector<Instr>& out_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
  Expression e;
  e.text_ = text;
  Parser(text, dim, e.code_).run();
  int depth = 0;
  int peak = 0;
  for (const auto& in : e.code_) {
    switch (in.op) {
      case Op::Const: case Op::Var: case Op::Time: ++depth; break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: case Op::Min: case Op::Max:
        --depth;
        break;
      default: break;
    }
    peak = std::max(peak, depth);
  }
  if (peak > kMaxStack) throw Error(ErrorCode::ParseError, "expression '" + text + "' is nested too deeply");
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  e.text_ = std::to_string(value);
  e.code_.push_back({Op::Const, value});
  return e;
}

bool Expression::is_constant() const noexcept {
  for (const auto& i : code_) {
    if (i.op == Op::Var || i.op == Op::Time) return false;
  }
  return true;
}

bool Expression::is_spatially_constant() const noexcept {
  for (const auto& i : code_) {
    if (i.op == Op::Var) return false;
  }
  return true;
}

bool Expression::depends_on_time() const noexcept {
  for (const auto& i : code_) {
    if (i.op == Op::Time) return true;
  }
  return false;
}

double Expression::operator()(const Vec& x, double t) const {
  double stack[kMaxStack];
  int top = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::Const: stack[top++] = in.value; break;
      case Op::Var: stack[top++] = x(in.index); break;
      case Op::Time: stack[top++] = t; break;
      case Op::Add: --top; stack[top - 1] += stack[top]; break;
      case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
      case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
      case Op::Div: --top; stack[top - 1] /= stack[top]; break;
      case Op::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
      case Op::Min: --top; stack[top - 1] = std::min(stack[top - 1], stack[top]); break;
      case Op::Max: --top; stack[top - 1] = std::max(stack[top - 1], stack[top]); break;
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Op::Abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      case Op::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
    }
  }
  return top == 1 ? stack[0] : 0.0;
}

}  // namespace kolmolab
