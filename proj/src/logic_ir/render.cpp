#include <cctype>
#include <string>

#include "predname/logic_ir.hpp"

namespace predname {
namespace {

enum class Assoc { Yfx, Xfx, Xfy, Fy };

struct OpInfo {
  int precedence = 0;
  Assoc assoc = Assoc::Yfx;
};

OpInfo operator_info(const Term& t) {
  if (t.kind != Term::Kind::Operator) return {0, Assoc::Yfx};
  if (t.args.size() == 1) return {200, Assoc::Fy};
  const std::string& op = t.name;
  if (op == "+" || op == "-") return {500, Assoc::Yfx};
  if (op == "**") return {200, Assoc::Xfx};
  if (op == "^") return {200, Assoc::Xfy};
  return {400, Assoc::Yfx};  // * / // mod rem div
}

bool is_lower_identifier(std::string_view name) {
  return !name.empty() && std::islower(static_cast<unsigned char>(name.front())) &&
         is_plain_identifier(name);
}

std::string quote(std::string_view name) {
  std::string out = "'";
  for (char c : name) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::string render_functor(std::string_view name) {
  return is_plain_identifier(name) ? std::string(name) : quote(name);
}

std::string render_expr(const Term& t, int max_precedence);

std::string render_args(const std::vector<Term>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out.push_back(',');
    out += render_expr(args[i], 999);
  }
  return out;
}

std::string render_expr(const Term& t, int max_precedence) {
  switch (t.kind) {
    case Term::Kind::Variable:
    case Term::Kind::Number:
      return t.name;
    case Term::Kind::Atom:
      return is_lower_identifier(t.name) ? t.name : quote(t.name);
    case Term::Kind::Compound:
      return render_functor(t.name) + "(" + render_args(t.args) + ")";
    case Term::Kind::List: {
      std::string out = "[";
      const std::size_t n = t.has_tail ? t.args.size() - 1 : t.args.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (i) out.push_back(',');
        out += render_expr(t.args[i], 999);
      }
      if (t.has_tail) out += "|" + render_expr(t.args.back(), 999);
      return out + "]";
    }
    case Term::Kind::Operator: {
      const OpInfo info = operator_info(t);
      std::string out;
      if (t.args.size() == 1) {
        out = t.name + render_expr(t.args[0], info.precedence);
      } else {
        const int p = info.precedence;
        const int left_max = info.assoc == Assoc::Yfx ? p : p - 1;
        const int right_max = info.assoc == Assoc::Xfy ? p : p - 1;
        out = render_expr(t.args[0], left_max) + " " + t.name + " " +
              render_expr(t.args[1], right_max);
      }
      if (info.precedence > max_precedence) return "(" + out + ")";
      return out;
    }
  }
  return {};
}

std::string render_conjunction(const std::vector<Goal>& goals) {
  std::string out;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (i) out += ", ";
    out += render_goal(goals[i]);
  }
  return out;
}

struct GoalRenderer {
  std::string operator()(const Literal& lit) const {
    if (lit.args.empty()) return render_functor(lit.functor);
    return render_functor(lit.functor) + "(" + render_args(lit.args) + ")";
  }
  std::string operator()(const Comparison& c) const {
    return render_expr(c.lhs, 699) + " " + c.op + " " + render_expr(c.rhs, 699);
  }
  std::string operator()(const ArithmeticEval& e) const {
    return render_expr(e.result, 699) + " is " + render_expr(e.expression, 699);
  }
  std::string operator()(const Cut&) const { return "!"; }
  std::string operator()(const Box<IfThenElse>& ite) const {
    std::string out = "(" + render_conjunction(ite->condition) + " -> " +
                      render_conjunction(ite->then_branch);
    if (ite->else_branch) out += " ; " + render_conjunction(*ite->else_branch);
    return out + ")";
  }
  std::string operator()(const Box<Negation>& neg) const {
    std::string prefix = neg->style == NegationStyle::Backslash ? "\\+ " : "not ";
    const Goal& only = neg->goals.front();
    if (neg->goals.size() == 1 && !std::holds_alternative<Comparison>(only) &&
        !std::holds_alternative<ArithmeticEval>(only)) {
      return prefix + render_goal(only);
    }
    return prefix + "(" + render_conjunction(neg->goals) + ")";
  }
};

}  // namespace

bool is_plain_identifier(std::string_view name) noexcept {
  if (name.empty()) return false;
  const auto front = static_cast<unsigned char>(name.front());
  if (!std::isalpha(front) && front != '_') return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

std::string render_term(const Term& term) { return render_expr(term, 999); }

std::string render_goal(const Goal& goal) { return std::visit(GoalRenderer{}, goal); }

std::string render_rule(const Rule& rule) {
  std::string out = GoalRenderer{}(rule.head);
  if (!rule.body.empty()) out += " :- " + render_conjunction(rule.body);
  return out + ".";
}

std::string render_program(const LogicProgram& program, RenderMode mode) {
  std::string out;
  auto emit_line = [&out](const std::string& line) {
    if (!out.empty()) out.push_back('\n');
    out += line;
  };

  if (mode == RenderMode::Canonical) {
    for (const Rule& rule : program.rules) emit_line(render_rule(rule));
    return out;
  }

  // Faithful: comments that precede a clause go on their own lines before it.
  // The first comment inside a clause's source span trails the clause; any
  // further ones follow on their own lines, since a comment runs to the end
  // of its line.
  const auto& comments = program.source_comments;
  std::size_t next = 0;
  for (const Rule& rule : program.rules) {
    while (next < comments.size() && comments[next].line < rule.first_line) {
      emit_line(comments[next++].text);
    }
    std::string line = render_rule(rule);
    if (next < comments.size() && comments[next].line <= rule.last_line) line += " " + comments[next++].text;
    emit_line(line);
    while (next < comments.size() && comments[next].line <= rule.last_line) emit_line(comments[next++].text);
  }
  while (next < comments.size()) emit_line(comments[next++].text);
  return out;
}

}  // namespace predname
