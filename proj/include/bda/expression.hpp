#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bda {

/// Arithmetic/boolean expression over named parameters.
///
///   or     := and ("||" and)*
///   and    := not ("&&" not)*
///   not    := "!" not | cmp
///   cmp    := sum (("<" | "<=" | ">" | ">=" | "==" | "!=") sum)?
///   sum    := term (("+" | "-") term)*
///   term   := unary (("*" | "/") unary)*
///   unary  := "-" unary | primary
///   primary:= number | ("exp" | "log") "(" or ")" | name | "(" or ")"
///
/// Names are identifiers optionally followed by a bracketed label, e.g.
/// beta[Enquiry] or alpha_group[A]. Booleans evaluate to 1 or 0.
class Expression {
 public:
  /// Throws ErrorKind::parse.
  static Expression parse(std::string_view text);

  const std::string& text() const noexcept { return text_; }
  /// Distinct names in order of first appearance.
  const std::vector<std::string>& variables() const noexcept { return variables_; }
  bool is_predicate() const noexcept;
  /// values[i] is the value of variables()[i].
  double evaluate(std::span<const double> values) const;

  struct Node;

 private:
  std::string text_;
  std::vector<std::string> variables_;
  std::shared_ptr<const Node> root_;
};

}  // namespace bda
