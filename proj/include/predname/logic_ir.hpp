#pragma once

// Abstract syntax for the Prolog subset found in learned theories: facts,
// rules, comparisons, `is` arithmetic, if-then-else, negation, cut, lists
// and ordinary calls. There are no evaluation semantics anywhere.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace predname {

/// Heap-allocated value with deep-copy semantics; breaks the recursion
/// between Goal and the compound goals that contain goal lists.
template <class T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(implicit)
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a == *b; }

 private:
  std::unique_ptr<T> ptr_;
};

/// (name, arity): the identity of a predicate. Capitalised names are legal in
/// functor position.
struct PredicateSymbol {
  std::string name;
  std::size_t arity = 0;

  auto operator<=>(const PredicateSymbol&) const = default;
  std::string to_string() const { return name + "/" + std::to_string(arity); }
};

struct Term {
  enum class Kind : std::uint8_t {
    Variable,
    Atom,
    Number,
    Compound,  // functor(args...)
    Operator,  // infix (2 args) or prefix (1 arg) arithmetic operator
    List,      // [a,b|T]; when has_tail the last arg is the tail
  };

  Kind kind = Kind::Atom;
  std::string name;  // variable/atom name, number lexeme, functor or operator symbol
  std::vector<Term> args;
  bool has_tail = false;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name), {}, false}; }
  static Term atom(std::string name) { return {Kind::Atom, std::move(name), {}, false}; }
  static Term number(std::string lexeme) { return {Kind::Number, std::move(lexeme), {}, false}; }
  static Term compound(std::string functor, std::vector<Term> args) {
    return {Kind::Compound, std::move(functor), std::move(args), false};
  }
  static Term binary(std::string op, Term lhs, Term rhs) {
    std::vector<Term> operands;
    operands.push_back(std::move(lhs));
    operands.push_back(std::move(rhs));
    return {Kind::Operator, std::move(op), std::move(operands), false};
  }
  static Term unary(std::string op, Term operand) {
    std::vector<Term> operands;
    operands.push_back(std::move(operand));
    return {Kind::Operator, std::move(op), std::move(operands), false};
  }
  static Term list(std::vector<Term> elements, std::optional<Term> tail = std::nullopt) {
    Term t{Kind::List, {}, std::move(elements), false};
    if (tail) {
      t.args.push_back(std::move(*tail));
      t.has_tail = true;
    }
    return t;
  }

  bool operator==(const Term&) const = default;
};

/// A predicate call: the only body element that names a predicate.
struct Literal {
  std::string functor;
  std::vector<Term> args;

  std::size_t arity() const noexcept { return args.size(); }
  PredicateSymbol symbol() const { return {functor, args.size()}; }
  bool operator==(const Literal&) const = default;
};

/// `lhs op rhs` with op one of > >= < =< <= = \= == \== @< @> @=< @>= =:= =\=
struct Comparison {
  std::string op;
  Term lhs;
  Term rhs;
  bool operator==(const Comparison&) const = default;
};

/// `result is expression`
struct ArithmeticEval {
  Term result;
  Term expression;
  bool operator==(const ArithmeticEval&) const = default;
};

struct Cut {
  bool operator==(const Cut&) const = default;
};

struct IfThenElse;
struct Negation;

using Goal = std::variant<Literal, Comparison, ArithmeticEval, Cut, Box<IfThenElse>, Box<Negation>>;

/// `( Cond -> Then ; Else )`, else branch optional.
struct IfThenElse {
  std::vector<Goal> condition;
  std::vector<Goal> then_branch;
  std::optional<std::vector<Goal>> else_branch;
  bool operator==(const IfThenElse&) const = default;
};

enum class NegationStyle : std::uint8_t { Backslash, Not };  // `\+ G` or `not G`

struct Negation {
  NegationStyle style = NegationStyle::Backslash;
  std::vector<Goal> goals;  // conjunction under the negation
  bool operator==(const Negation&) const = default;
};

struct Rule {
  Literal head;
  std::vector<Goal> body;  // empty for facts

  // Source span, used only to re-attach comments in faithful rendering.
  int first_line = 0;
  int last_line = 0;

  bool is_fact() const noexcept { return body.empty(); }
  bool operator==(const Rule& other) const { return head == other.head && body == other.body; }
};

struct Comment {
  int line = 0;
  std::string text;  // includes the leading '#' or '%'
  bool operator==(const Comment&) const = default;
};

/// Equality is structural over rules only; comments are retained for
/// faithful rendering but carry no meaning.
struct LogicProgram {
  std::vector<Rule> rules;
  std::vector<Comment> source_comments;

  bool operator==(const LogicProgram& other) const { return rules == other.rules; }
};

enum class RenderMode : std::uint8_t { Canonical, Faithful };

LogicProgram parse_program(std::string_view text);

/// Canonical: one clause per line, no comments, byte-stable. Faithful: the same
/// clause text with retained comments re-attached. No trailing newline.
std::string render_program(const LogicProgram& program, RenderMode mode = RenderMode::Canonical);

std::string render_rule(const Rule& rule);
std::string render_goal(const Goal& goal);
std::string render_term(const Term& term);

/// Calls every visitor on each literal of the rule (head first, then body in
/// source order, descending into if-then-else and negation).
template <class Fn>
void for_each_literal(const Rule& rule, Fn&& fn);
template <class Fn>
void for_each_body_literal(const std::vector<Goal>& goals, Fn&& fn);
template <class Fn>
void for_each_body_literal_mut(std::vector<Goal>& goals, Fn&& fn);

// ---------------------------------------------------------------------------

template <class Fn>
void for_each_body_literal(const std::vector<Goal>& goals, Fn&& fn) {
  for (const Goal& goal : goals) {
    if (const auto* lit = std::get_if<Literal>(&goal)) {
      fn(*lit);
    } else if (const auto* ite = std::get_if<Box<IfThenElse>>(&goal)) {
      for_each_body_literal((*ite)->condition, fn);
      for_each_body_literal((*ite)->then_branch, fn);
      if ((*ite)->else_branch) for_each_body_literal(*(*ite)->else_branch, fn);
    } else if (const auto* neg = std::get_if<Box<Negation>>(&goal)) {
      for_each_body_literal((*neg)->goals, fn);
    }
  }
}

template <class Fn>
void for_each_body_literal_mut(std::vector<Goal>& goals, Fn&& fn) {
  for (Goal& goal : goals) {
    if (auto* lit = std::get_if<Literal>(&goal)) {
      fn(*lit);
    } else if (auto* ite = std::get_if<Box<IfThenElse>>(&goal)) {
      for_each_body_literal_mut((*ite)->condition, fn);
      for_each_body_literal_mut((*ite)->then_branch, fn);
      if ((*ite)->else_branch) for_each_body_literal_mut(*(*ite)->else_branch, fn);
    } else if (auto* neg = std::get_if<Box<Negation>>(&goal)) {
      for_each_body_literal_mut((*neg)->goals, fn);
    }
  }
}

template <class Fn>
void for_each_literal(const Rule& rule, Fn&& fn) {
  fn(rule.head);
  for_each_body_literal(rule.body, fn);
}

/// True when `name` is written without quotes in functor position:
/// a letter or underscore followed by letters, digits or underscores.
bool is_plain_identifier(std::string_view name) noexcept;

}  // namespace predname
