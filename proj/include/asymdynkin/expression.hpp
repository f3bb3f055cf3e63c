#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace asymdynkin {

/// Small arithmetic expression in the variables x and t, compiled to a
/// postfix program. Grammar: numbers, x, t, + - * / ^, unary minus,
/// parentheses, and the functions tanh, exp, log, sqrt, sin, cos, abs,
/// min(a, b), max(a, b).
class Expression {
 public:
  Expression() : Expression(0.0) {}
  explicit Expression(double c) : source_(format(c)) {
    code_.push_back({Op::Const, c});
    fold_constant();
  }
  explicit Expression(std::string src) : source_(std::move(src)) {
    Parser p{source_, 0, code_};
    p.parse_sum();
    p.skip();
    if (p.pos != source_.size()) p.fail("unexpected character");
    check_stack();
    fold_constant();
  }

  double operator()(double x, double t = 0.0) const {
    if (is_const_) return const_value_;
    double stack[kMaxStack];
    int sp = 0;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::Const: stack[sp++] = ins.value; break;
        case Op::X: stack[sp++] = x; break;
        case Op::T: stack[sp++] = t; break;
        case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
        case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
        case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
        case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
        case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
        case Op::Min: --sp; stack[sp - 1] = std::min(stack[sp - 1], stack[sp]); break;
        case Op::Max: --sp; stack[sp - 1] = std::max(stack[sp - 1], stack[sp]); break;
        case Op::Tanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
        case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
        case Op::Log: stack[sp - 1] = std::log(stack[sp - 1]); break;
        case Op::Sqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
        case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
        case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
        case Op::Abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
      }
    }
    return stack[0];
  }

  const std::string& source() const noexcept { return source_; }
  bool is_constant() const noexcept { return is_const_; }
  bool depends_on_t() const {
    for (const auto& ins : code_)
      if (ins.op == Op::T) return true;
    return false;
  }

 private:
  enum class Op { Const, X, T, Neg, Add, Sub, Mul, Div, Pow, Min, Max, Tanh, Exp, Log, Sqrt, Sin, Cos, Abs };
  struct Instr {
    Op op;
    double value = 0.0;
  };

  struct Parser {
    const std::string& s;
    std::size_t pos;
    std::vector<Instr>& out;
    int depth = 0;

    [[noreturn]] void fail(const std::string& what) const {
      throw Error(ErrorCode::ParseError, what + " at position " + std::to_string(pos) + " in '" + s + "'");
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void need_stack() {
      if (++depth > 30) fail("expression too deeply nested");
    }
    void parse_sum() {
      parse_product();
      for (;;) {
        if (eat('+')) {
          parse_product();
          out.push_back({Op::Add});
        } else if (eat('-')) {
          parse_product();
          out.push_back({Op::Sub});
        } else {
          return;
        }
      }
    }
    void parse_product() {
      parse_unary();
      for (;;) {
        if (eat('*')) {
          parse_unary();
          out.push_back({Op::Mul});
        } else if (eat('/')) {
          parse_unary();
          out.push_back({Op::Div});
        } else {
          return;
        }
      }
    }
    void parse_unary() {
      if (eat('-')) {
        parse_unary();
        out.push_back({Op::Neg});
        return;
      }
      if (eat('+')) {
        parse_unary();
        return;
      }
      parse_power();
    }
    void parse_power() {
      parse_atom();
      if (eat('^')) {
        parse_unary();
        out.push_back({Op::Pow});
      }
    }
    void parse_atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end of expression");
      char c = s[pos];
      if (c == '(') {
        ++pos;
        need_stack();
        parse_sum();
        --depth;
        if (!eat(')')) fail("expected ')'");
        return;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos += static_cast<std::size_t>(end - begin);
        out.push_back({Op::Const, v});
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        std::string name = s.substr(start, pos - start);
        if (name == "x") return out.push_back({Op::X});
        if (name == "t") return out.push_back({Op::T});
        static const std::pair<const char*, Op> unary[] = {{"tanh", Op::Tanh}, {"exp", Op::Exp}, {"log", Op::Log},
                                                           {"sqrt", Op::Sqrt}, {"sin", Op::Sin}, {"cos", Op::Cos},
                                                           {"abs", Op::Abs}};
        for (const auto& [nm, op] : unary)
          if (name == nm) {
            if (!eat('(')) fail("expected '(' after " + name);
            need_stack();
            parse_sum();
            --depth;
            if (!eat(')')) fail("expected ')'");
            out.push_back({op});
            return;
          }
        if (name == "min" || name == "max") {
          if (!eat('(')) fail("expected '(' after " + name);
          need_stack();
          parse_sum();
          if (!eat(',')) fail("expected ','");
          parse_sum();
          --depth;
          if (!eat(')')) fail("expected ')'");
          out.push_back({name == "min" ? Op::Min : Op::Max});
          return;
        }
        pos = start;
        fail("unknown identifier '" + name + "'");
      }
      fail("unexpected character");
    }
  };

  static std::string format(double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", c);
    return buf;
  }

  static constexpr int kMaxStack = 64;

  void check_stack() const {
    int sp = 0, peak = 0;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::Const: case Op::X: case Op::T: ++sp; break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: case Op::Min: case Op::Max: --sp; break;
        default: break;
      }
      peak = std::max(peak, sp);
    }
    if (peak > kMaxStack) throw Error(ErrorCode::ParseError, "expression needs too deep an evaluation stack");
  }

  void fold_constant() {
    for (const auto& ins : code_)
      if (ins.op == Op::X || ins.op == Op::T) return;
    is_const_ = false;
    const_value_ = (*this)(0.0, 0.0);
    is_const_ = true;
  }

  std::string source_;
  std::vector<Instr> code_;
  bool is_const_ = false;
  double const_value_ = 0.0;
};

}  // namespace asymdynkin
