#include "aobs/plant/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace aobs::plant {

struct Expr::Node {
  enum class Kind { Const, Y, U, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos };
  Kind kind = Kind::Const;
  double value = 0.0;
  std::size_t index = 0;
  int exponent = 0;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, std::size_t outputs, std::size_t inputs)
      : text_(text), outputs_(outputs), inputs_(inputs) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression '" + std::string(text_) + "': " + what + " at offset " +
                                std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+'))
        n = make(Node::Kind::Add, n, term());
      else if (accept('-'))
        n = make(Node::Kind::Sub, n, term());
      else
        return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*'))
        n = make(Node::Kind::Mul, n, unary());
      else if (accept('/'))
        n = make(Node::Kind::Div, n, unary());
      else
        return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (!accept('^')) return base;
    skip_ws();
    int e = 0;
    auto [p, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), e);
    if (ec != std::errc{} || e < 0) fail("exponent must be a non-negative integer");
    pos_ = static_cast<std::size_t>(p - text_.data());
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Pow;
    n->lhs = std::move(base);
    n->exponent = e;
    return n;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc{}) fail("bad number");
    pos_ = static_cast<std::size_t>(p - text_.data());
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word == "sin" || word == "cos") {
      if (!accept('(')) fail("expected '(' after " + std::string(word));
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(word == "sin" ? Node::Kind::Sin : Node::Kind::Cos, arg);
    }
    if (word != "y" && word != "u") fail("unknown identifier '" + std::string(word) + "'");
    std::size_t index = 1;
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      auto [p, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), index);
      if (ec != std::errc{} || index == 0) fail("bad variable index");
      pos_ = static_cast<std::size_t>(p - text_.data());
    }
    const std::size_t limit = word == "y" ? outputs_ : inputs_;
    if (index > limit)
      fail(std::string(word) + std::to_string(index) + " out of range (have " + std::to_string(limit) + ")");
    auto n = std::make_shared<Node>();
    n->kind = word == "y" ? Node::Kind::Y : Node::Kind::U;
    n->index = index - 1;
    return n;
  }

  std::string_view text_;
  std::size_t outputs_;
  std::size_t inputs_;
  std::size_t pos_ = 0;
};

double evaluate(const Node& n, std::span<const double> y, std::span<const double> u) {
  switch (n.kind) {
    case Node::Kind::Const: return n.value;
    case Node::Kind::Y: return y[n.index];
    case Node::Kind::U: return u[n.index];
    case Node::Kind::Neg: return -evaluate(*n.lhs, y, u);
    case Node::Kind::Add: return evaluate(*n.lhs, y, u) + evaluate(*n.rhs, y, u);
    case Node::Kind::Sub: return evaluate(*n.lhs, y, u) - evaluate(*n.rhs, y, u);
    case Node::Kind::Mul: return evaluate(*n.lhs, y, u) * evaluate(*n.rhs, y, u);
    case Node::Kind::Div: return evaluate(*n.lhs, y, u) / evaluate(*n.rhs, y, u);
    case Node::Kind::Pow: {
      const double b = evaluate(*n.lhs, y, u);
      double r = 1.0;
      for (int i = 0; i < n.exponent; ++i) r *= b;
      return r;
    }
    case Node::Kind::Sin: return std::sin(evaluate(*n.lhs, y, u));
    case Node::Kind::Cos: return std::cos(evaluate(*n.lhs, y, u));
  }
  return 0.0;
}

}  // namespace

Expr::Expr() : root_(std::make_shared<Node>()), source_("0") {}

Expr Expr::parse(std::string_view text, std::size_t outputs, std::size_t inputs) {
  Expr e;
  e.root_ = Parser(text, outputs, inputs).parse();
  e.source_ = std::string(text);
  return e;
}

Expr Expr::constant(double v) {
  Expr e;
  auto n = std::make_shared<Node>();
  n->value = v;
  e.root_ = n;
  e.source_ = std::to_string(v);
  return e;
}

double Expr::eval(std::span<const double> y, std::span<const double> u) const { return evaluate(*root_, y, u); }

bool Expr::is_zero() const noexcept { return root_->kind == Node::Kind::Const && root_->value == 0.0; }

}  // namespace aobs::plant
