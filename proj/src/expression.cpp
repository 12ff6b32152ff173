#include "funcdet/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "funcdet/error.hpp"

namespace funcdet {

namespace {

enum class Op { Number, Variable, Pi, Euler, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Tan, Exp, Log, Sinh, Cosh, Tanh, Sqrt, Abs };

struct FuncEntry {
  std::string_view name;
  Func func;
};

constexpr std::array<FuncEntry, 10> kFunctions{{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"tan", Func::Tan},
    {"exp", Func::Exp},
    {"log", Func::Log},
    {"sinh", Func::Sinh},
    {"cosh", Func::Cosh},
    {"tanh", Func::Tanh},
    {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
}};

std::string_view func_name(Func f) {
  for (const auto& e : kFunctions)
    if (e.func == f) return e.name;
  return "?";
}

struct Node {
  Op op = Op::Number;
  double value = 0.0;
  Func func = Func::Sin;
  int lhs = -1;
  int rhs = -1;
};

double apply(Func f, double v) {
  switch (f) {
    case Func::Sin: return std::sin(v);
    case Func::Cos: return std::cos(v);
    case Func::Tan: return std::tan(v);
    case Func::Exp: return std::exp(v);
    case Func::Log: return std::log(v);
    case Func::Sinh: return std::sinh(v);
    case Func::Cosh: return std::cosh(v);
    case Func::Tanh: return std::tanh(v);
    case Func::Sqrt: return std::sqrt(v);
    case Func::Abs: return std::fabs(v);
  }
  return 0.0;
}

}  // namespace

struct Expression::Impl {
  std::vector<Node> nodes;
  int root = -1;

  double eval(int i, double x) const {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::Number: return n.value;
      case Op::Variable: return x;
      case Op::Pi: return std::numbers::pi;
      case Op::Euler: return std::numbers::e;
      case Op::Neg: return -eval(n.lhs, x);
      case Op::Add: return eval(n.lhs, x) + eval(n.rhs, x);
      case Op::Sub: return eval(n.lhs, x) - eval(n.rhs, x);
      case Op::Mul: return eval(n.lhs, x) * eval(n.rhs, x);
      case Op::Div: return eval(n.lhs, x) / eval(n.rhs, x);
      case Op::Pow: return std::pow(eval(n.lhs, x), eval(n.rhs, x));
      case Op::Call: return apply(n.func, eval(n.lhs, x));
    }
    return 0.0;
  }

  bool uses_x(int i) const {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    if (n.op == Op::Variable) return true;
    return (n.lhs >= 0 && uses_x(n.lhs)) || (n.rhs >= 0 && uses_x(n.rhs));
  }

  // Binding strength used when printing: larger binds tighter.
  static int precedence(Op op) {
    switch (op) {
      case Op::Add:
      case Op::Sub: return 1;
      case Op::Mul:
      case Op::Div: return 2;
      case Op::Neg: return 3;
      case Op::Pow: return 4;
      default: return 5;
    }
  }

  std::string print(int i) const {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::Number: {
        std::array<char, 64> buf{};
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), n.value);
        return std::string(buf.data(), res.ptr);
      }
      case Op::Variable: return "x";
      case Op::Pi: return "pi";
      case Op::Euler: return "e";
      case Op::Call: return std::string(func_name(n.func)) + "(" + print(n.lhs) + ")";
      case Op::Neg: {
        const int p = precedence(nodes[static_cast<std::size_t>(n.lhs)].op);
        std::string inner = print(n.lhs);
        return p < precedence(Op::Neg) ? "-(" + inner + ")" : "-" + inner;
      }
      case Op::Pow: {
        const Op lop = nodes[static_cast<std::size_t>(n.lhs)].op;
        const Op rop = nodes[static_cast<std::size_t>(n.rhs)].op;
        std::string base = print(n.lhs);
        std::string expo = print(n.rhs);
        if (precedence(lop) <= precedence(Op::Pow)) base = "(" + base + ")";
        if (precedence(rop) < precedence(Op::Pow)) expo = "(" + expo + ")";
        return base + "^" + expo;
      }
      default: {
        const int p = precedence(n.op);
        const int pl = precedence(nodes[static_cast<std::size_t>(n.lhs)].op);
        const int pr = precedence(nodes[static_cast<std::size_t>(n.rhs)].op);
        std::string l = print(n.lhs);
        std::string r = print(n.rhs);
        if (pl < p) l = "(" + l + ")";
        // Left-associative: an equal-precedence right operand needs parentheses.
        if (pr <= p) r = "(" + r + ")";
        const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
        return l + sym + r;
      }
    }
  }
};

namespace {

class Parser {
 public:
  Parser(std::string_view src, Expression::Impl& out) : src_(src), out_(out) {}

  int parse_all() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    int root = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return root;
  }

 private:
  int add(Node n) {
    out_.nodes.push_back(n);
    return static_cast<int>(out_.nodes.size()) - 1;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = add({Op::Add, 0.0, Func::Sin, lhs, parse_term()});
      } else if (accept('-')) {
        lhs = add({Op::Sub, 0.0, Func::Sin, lhs, parse_term()});
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = add({Op::Mul, 0.0, Func::Sin, lhs, parse_unary()});
      } else if (accept('/')) {
        lhs = add({Op::Div, 0.0, Func::Sin, lhs, parse_unary()});
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return add({Op::Neg, 0.0, Func::Sin, parse_unary(), -1});
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (accept('^')) return add({Op::Pow, 0.0, Func::Sin, base, parse_unary()});
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  int parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    // Exponent only when followed by digits, so "2e" is not swallowed.
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
      if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
        pos_ = q;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return add({Op::Number, value, Func::Sin, -1, -1});
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return add({Op::Variable, 0.0, Func::Sin, -1, -1});
    if (name == "pi") return add({Op::Pi, 0.0, Func::Sin, -1, -1});
    if (name == "e") return add({Op::Euler, 0.0, Func::Sin, -1, -1});
    for (const auto& entry : kFunctions) {
      if (entry.name != name) continue;
      if (!accept('(')) throw ParseError("expected '(' after function " + std::string(name), pos_);
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == ')')
        throw ParseError("function " + std::string(name) + " expects 1 argument, got 0", pos_);
      int arg = parse_expr();
      if (accept(','))
        throw ParseError("function " + std::string(name) + " expects 1 argument, got more", pos_ - 1);
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return add({Op::Call, 0.0, entry.func, arg, -1});
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view src_;
  Expression::Impl& out_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Expression Expression::parse(std::string_view source) {
  auto impl = std::make_shared<Impl>();
  Parser parser(source, *impl);
  impl->root = parser.parse_all();
  return Expression(std::move(impl));
}

Expression Expression::constant(double value) {
  auto impl = std::make_shared<Impl>();
  if (value < 0.0 || std::signbit(value)) {
    impl->nodes.push_back({Op::Number, -value, Func::Sin, -1, -1});
    impl->nodes.push_back({Op::Neg, 0.0, Func::Sin, 0, -1});
  } else {
    impl->nodes.push_back({Op::Number, value, Func::Sin, -1, -1});
  }
  impl->root = static_cast<int>(impl->nodes.size()) - 1;
  return Expression(std::move(impl));
}

double Expression::operator()(double x) const { return impl_->eval(impl_->root, x); }

std::string Expression::to_string() const { return impl_->print(impl_->root); }

bool Expression::is_constant() const { return !impl_->uses_x(impl_->root); }

}  // namespace funcdet
