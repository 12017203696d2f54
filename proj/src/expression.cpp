#include "bda/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "bda/error.hpp"

namespace bda {

struct Expression::Node {
  enum class Op { number, variable, neg, notop, add, sub, mul, div, exp, log, lt, le, gt, ge, eq, ne, andop, orop };
  Op op = Op::number;
  double number = 0.0;
  std::size_t variable = 0;
  std::shared_ptr<const Node> a, b;

  bool boolean() const {
    switch (op) {
      case Op::notop: case Op::lt: case Op::le: case Op::gt: case Op::ge:
      case Op::eq: case Op::ne: case Op::andop: case Op::orop:
        return true;
      default:
        return false;
    }
  }

  double eval(std::span<const double> v) const {
    switch (op) {
      case Op::number: return number;
      case Op::variable: return v[variable];
      case Op::neg: return -a->eval(v);
      case Op::notop: return a->eval(v) != 0.0 ? 0.0 : 1.0;
      case Op::add: return a->eval(v) + b->eval(v);
      case Op::sub: return a->eval(v) - b->eval(v);
      case Op::mul: return a->eval(v) * b->eval(v);
      case Op::div: return a->eval(v) / b->eval(v);
      case Op::exp: return std::exp(a->eval(v));
      case Op::log: return std::log(a->eval(v));
      case Op::lt: return a->eval(v) < b->eval(v) ? 1.0 : 0.0;
      case Op::le: return a->eval(v) <= b->eval(v) ? 1.0 : 0.0;
      case Op::gt: return a->eval(v) > b->eval(v) ? 1.0 : 0.0;
      case Op::ge: return a->eval(v) >= b->eval(v) ? 1.0 : 0.0;
      case Op::eq: return a->eval(v) == b->eval(v) ? 1.0 : 0.0;
      case Op::ne: return a->eval(v) != b->eval(v) ? 1.0 : 0.0;
      case Op::andop: return (a->eval(v) != 0.0 && b->eval(v) != 0.0) ? 1.0 : 0.0;
      case Op::orop: return (a->eval(v) != 0.0 || b->eval(v) != 0.0) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;
using Op = Node::Op;

NodePtr binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr parse() {
    auto n = parse_or();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(s_.substr(pos_, 1)) + "'");
    return n;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::parse, "expression '" + std::string(s_) + "': " + msg + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip();
    if (s_.substr(pos_, tok.size()) != tok) return false;
    pos_ += tok.size();
    return true;
  }

  // Accepts a single-character operator only when it is not the prefix of a
  // two-character one.
  bool accept_single(char c, char not_followed_by) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c && !(pos_ + 1 < s_.size() && s_[pos_ + 1] == not_followed_by)) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_or() {
    auto n = parse_and();
    while (accept("||")) n = binary(Op::orop, n, parse_and());
    return n;
  }

  NodePtr parse_and() {
    auto n = parse_not();
    while (accept("&&")) n = binary(Op::andop, n, parse_not());
    return n;
  }

  NodePtr parse_not() {
    if (accept_single('!', '=')) return binary(Op::notop, parse_not(), nullptr);
    return parse_cmp();
  }

  NodePtr parse_cmp() {
    auto n = parse_sum();
    if (accept("<=")) return binary(Op::le, n, parse_sum());
    if (accept(">=")) return binary(Op::ge, n, parse_sum());
    if (accept("==")) return binary(Op::eq, n, parse_sum());
    if (accept("!=")) return binary(Op::ne, n, parse_sum());
    if (accept("<")) return binary(Op::lt, n, parse_sum());
    if (accept(">")) return binary(Op::gt, n, parse_sum());
    return n;
  }

  NodePtr parse_sum() {
    auto n = parse_term();
    for (;;) {
      if (accept("+")) n = binary(Op::add, n, parse_term());
      else if (accept("-")) n = binary(Op::sub, n, parse_term());
      else return n;
    }
  }

  NodePtr parse_term() {
    auto n = parse_unary();
    for (;;) {
      if (accept("*")) n = binary(Op::mul, n, parse_unary());
      else if (accept("/")) n = binary(Op::div, n, parse_unary());
      else return n;
    }
  }

  NodePtr parse_unary() {
    if (accept("-")) return binary(Op::neg, parse_unary(), nullptr);
    if (accept("+")) return parse_unary();
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end");
    if (accept("(")) {
      auto n = parse_or();
      if (!accept(")")) error("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), x);
      if (ec != std::errc()) error("bad number");
      pos_ = static_cast<std::size_t>(ptr - s_.data());
      auto n = std::make_shared<Node>();
      n->number = x;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.'))
        ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      if (pos_ < s_.size() && s_[pos_] == '[') {
        const auto close = s_.find(']', pos_);
        if (close == std::string_view::npos) error("unterminated '['");
        name += s_.substr(pos_, close - pos_ + 1);
        pos_ = close + 1;
      } else if (name == "exp" || name == "log") {
        if (!accept("(")) error("expected '(' after " + name);
        auto arg = parse_or();
        if (!accept(")")) error("expected ')'");
        return binary(name == "exp" ? Op::exp : Op::log, arg, nullptr);
      }
      auto n = std::make_shared<Node>();
      n->op = Op::variable;
      auto it = std::find(vars_.begin(), vars_.end(), name);
      n->variable = static_cast<std::size_t>(it - vars_.begin());
      if (it == vars_.end()) vars_.push_back(name);
      return n;
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  Parser parser(e.text_, e.variables_);
  e.root_ = parser.parse();
  return e;
}

bool Expression::is_predicate() const noexcept { return root_ && root_->boolean(); }

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() != variables_.size()) fail(ErrorKind::spec, "expression needs one value per variable");
  return root_->eval(values);
}

}  // namespace bda
