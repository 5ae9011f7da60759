#include <set>
#include <string>
#include <utility>

#include "logic_ir/lexer.hpp"
#include "predname/errors.hpp"
#include "predname/logic_ir.hpp"

namespace predname {
namespace {

using detail::Token;

const std::set<std::string, std::less<>> kComparisonOps = {
    "=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=", "=:=", "=\\=", "<", ">", "=<", ">=", "<="};

class Parser {
 public:
  explicit Parser(detail::LexResult lexed) : tokens_(std::move(lexed.tokens)) {
    program_.source_comments = std::move(lexed.comments);
  }

  LogicProgram run() {
    while (peek().kind != Token::Kind::Eof) program_.rules.push_back(clause());
    return std::move(program_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }

  const Token& take() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& at, const std::string& detail) const {
    if (at.kind == Token::Kind::Eof) throw UnterminatedClause(clause_line_, clause_column_);
    throw SyntaxError(at.line, at.column, at.text, detail);
  }

  void expect_punct(std::string_view p) {
    if (!peek().is_punct(p)) fail(peek(), "expected '" + std::string(p) + "'");
    take();
  }

  Rule clause() {
    const Token& first = peek();
    clause_line_ = first.line;
    clause_column_ = first.column;

    Rule rule;
    rule.first_line = first.line;
    rule.head = head_literal();
    if (peek().is_symbol(":-")) {
      take();
      rule.body = conjunction();
    }
    const Token& end = peek();
    if (end.kind != Token::Kind::End) fail(end, "expected ',' or '.'");
    rule.last_line = end.line;
    take();
    return rule;
  }

  Literal head_literal() {
    const Token& t = peek();
    if ((t.kind == Token::Kind::Name || t.kind == Token::Kind::Variable ||
         t.kind == Token::Kind::Quoted) &&
        t.functional) {
      return call();
    }
    if (t.kind == Token::Kind::Name || t.kind == Token::Kind::Quoted) {
      take();
      return Literal{t.text, {}};
    }
    fail(t, "a clause head must be a predicate");
  }

  // Functor followed by a parenthesised argument list. The token kind does
  // not matter: capitalised names are predicate symbols in functor position.
  Literal call() {
    Literal lit;
    lit.functor = take().text;
    lit.args = arguments();
    return lit;
  }

  std::vector<Term> arguments() {
    expect_punct("(");
    std::vector<Term> args;
    args.push_back(expression());
    while (peek().is_punct(",")) {
      take();
      args.push_back(expression());
    }
    expect_punct(")");
    return args;
  }

  std::vector<Goal> conjunction() {
    std::vector<Goal> goals;
    goals.push_back(goal());
    while (peek().is_punct(",")) {
      take();
      goals.push_back(goal());
    }
    return goals;
  }

  Goal goal() {
    const Token& t = peek();
    if (t.is_symbol("!")) {
      take();
      return Cut{};
    }
    if (t.is_symbol("\\+")) {
      take();
      return negation(NegationStyle::Backslash);
    }
    if (t.is_name("not") && !peek(1).is_punct(",") && peek(1).kind != Token::Kind::End &&
        !peek(1).is_symbol("->") && !peek(1).is_symbol(";") && !peek(1).is_punct(")")) {
      take();
      return negation(NegationStyle::Not);
    }
    if (t.is_punct("(")) {
      // Either an if-then-else or a comparison whose left operand is
      // parenthesised, as in (X + 1) > Y.
      const std::size_t start = pos_;
      const Token& open = t;
      try {
        auto group = parenthesised();
        if (auto* ite = std::get_if<Box<IfThenElse>>(&group)) return std::move(*ite);
      } catch (const Error&) {
      }
      pos_ = start;
      try {
        Goal g = comparison_or_call(peek());
        if (!std::holds_alternative<Literal>(g)) return g;
      } catch (const Error&) {
      }
      pos_ = start;
      auto group = parenthesised();
      if (auto* ite = std::get_if<Box<IfThenElse>>(&group)) return std::move(*ite);
      fail(open, "parenthesised conjunction without '->' is not supported");
    }
    return comparison_or_call(t);
  }

  Goal comparison_or_call(const Token& t) {

    Term lhs = expression();
    const Token& op = peek();
    if (op.kind == Token::Kind::Symbol && kComparisonOps.contains(op.text)) {
      take();
      return Comparison{op.text, std::move(lhs), expression()};
    }
    if (op.is_name("is")) {
      take();
      return ArithmeticEval{std::move(lhs), expression()};
    }
    if (lhs.kind == Term::Kind::Compound) return Literal{std::move(lhs.name), std::move(lhs.args)};
    if (lhs.kind == Term::Kind::Atom) return Literal{std::move(lhs.name), {}};
    fail(t, "expected a goal");
  }

  Goal negation(NegationStyle style) {
    auto neg = Negation{style, {}};
    if (peek().is_punct("(")) {
      auto group = parenthesised();
      if (auto* goals = std::get_if<std::vector<Goal>>(&group)) {
        neg.goals = std::move(*goals);
      } else {
        neg.goals.push_back(std::move(std::get<Box<IfThenElse>>(group)));
      }
    } else {
      neg.goals.push_back(goal());
    }
    return Box<Negation>(std::move(neg));
  }

  // '(' Conj [ '->' Conj [ ';' Conj ] ] ')'
  std::variant<std::vector<Goal>, Box<IfThenElse>> parenthesised() {
    expect_punct("(");
    std::vector<Goal> first = conjunction();
    if (peek().is_symbol("->")) {
      take();
      IfThenElse ite;
      ite.condition = std::move(first);
      ite.then_branch = conjunction();
      if (peek().is_symbol(";")) {
        take();
        ite.else_branch = conjunction();
      }
      expect_punct(")");
      return Box<IfThenElse>(std::move(ite));
    }
    if (peek().is_symbol(";")) fail(peek(), "disjunction without '->' is not supported");
    expect_punct(")");
    return first;
  }

  // Arithmetic precedence: additive (500, yfx) < multiplicative (400, yfx) <
  // prefix minus (200, fy) < power (200, xfx) < primary.
  Term expression() { return additive(); }

  Term additive() {
    Term lhs = multiplicative();
    while (peek().is_symbol("+") || peek().is_symbol("-")) {
      std::string op = take().text;
      lhs = Term::binary(std::move(op), std::move(lhs), multiplicative());
    }
    return lhs;
  }

  static bool is_multiplicative(const Token& t) {
    return t.is_symbol("*") || t.is_symbol("/") || t.is_symbol("//") ||
           (t.kind == Token::Kind::Name && !t.functional &&
            (t.text == "mod" || t.text == "rem" || t.text == "div"));
  }

  Term multiplicative() {
    Term lhs = unary();
    while (is_multiplicative(peek())) {
      std::string op = take().text;
      lhs = Term::binary(std::move(op), std::move(lhs), unary());
    }
    return lhs;
  }

  Term unary() {
    if (peek().is_symbol("-")) {
      take();
      return Term::unary("-", unary());
    }
    Term base = primary();
    if (peek().is_symbol("**") || peek().is_symbol("^")) {
      std::string op = take().text;
      return Term::binary(std::move(op), std::move(base), unary());
    }
    return base;
  }

  Term primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::Number:
        take();
        return Term::number(t.text);
      case Token::Kind::Variable:
        if (t.functional) {
          std::string functor = take().text;
          return Term::compound(std::move(functor), arguments());
        }
        take();
        return Term::variable(t.text);
      case Token::Kind::Name:
      case Token::Kind::Quoted:
        if (t.functional) {
          std::string functor = take().text;
          return Term::compound(std::move(functor), arguments());
        }
        take();
        return Term::atom(t.text);
      case Token::Kind::Punct:
        if (t.text == "[") return list();
        if (t.text == "(") {
          take();
          Term inner = expression();
          expect_punct(")");
          return inner;
        }
        break;
      default:
        break;
    }
    fail(t, "expected a term");
  }

  Term list() {
    expect_punct("[");
    if (peek().is_punct("]")) {
      take();
      return Term::list({});
    }
    std::vector<Term> elements;
    elements.push_back(expression());
    while (peek().is_punct(",")) {
      take();
      elements.push_back(expression());
    }
    std::optional<Term> tail;
    if (peek().is_punct("|")) {
      take();
      tail = expression();
    }
    expect_punct("]");
    return Term::list(std::move(elements), std::move(tail));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  LogicProgram program_;
  int clause_line_ = 1;
  int clause_column_ = 1;
};

}  // namespace

LogicProgram parse_program(std::string_view text) { return Parser(detail::lex(text)).run(); }

}  // namespace predname
