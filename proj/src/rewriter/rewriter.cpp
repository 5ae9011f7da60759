#include "predname/rewriter.hpp"

#include <cctype>
#include <map>
#include <set>

#include "predname/candidates.hpp"
#include "predname/errors.hpp"

namespace predname {
namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Positions of `word` in `text` that are not part of a longer identifier.
std::vector<std::size_t> word_positions(const std::string& text, const std::string& word) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string::npos) {
    const bool left = pos == 0 || !is_ident_char(text[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right = end >= text.size() || !is_ident_char(text[end]);
    if (left && right) out.push_back(pos);
    pos = end;
  }
  return out;
}

std::map<PredicateSymbol, std::set<std::size_t>> all_symbols(const LogicProgram& program) {
  std::map<PredicateSymbol, std::set<std::size_t>> out;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    for_each_literal(program.rules[i], [&](const Literal& lit) { out[lit.symbol()].insert(i); });
  }
  return out;
}

}  // namespace

const Assignment* RenamingPlan::find(const PredicateSymbol& placeholder) const {
  for (const auto& a : assignments) {
    if (a.placeholder == placeholder) return &a;
  }
  return nullptr;
}

nlohmann::ordered_json RenamingPlan::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["assignments"] = nlohmann::ordered_json::array();
  for (const auto& a : assignments) {
    nlohmann::ordered_json item;
    item["placeholder"] = a.placeholder.name;
    item["arity"] = a.placeholder.arity;
    item["name"] = a.name;
    item["aggregate"] = a.aggregate ? nlohmann::ordered_json(a.aggregate->to_string()) : nlohmann::ordered_json(nullptr);
    item["tie"] = a.tie;
    item["lexicographic_fallback"] = a.lexicographic_fallback;
    item["source_models"] = a.source_models;
    j["assignments"].push_back(std::move(item));
  }
  return j;
}

RenamingPlan RenamingPlan::from_json(const nlohmann::json& j, const LogicProgram* program) {
  RenamingPlan plan;
  try {
    if (j.contains("assignments")) {
      for (const auto& item : j.at("assignments")) {
        Assignment a;
        a.placeholder = {item.at("placeholder").get<std::string>(), item.at("arity").get<std::size_t>()};
        a.name = item.at("name").get<std::string>();
        if (item.contains("aggregate") && !item["aggregate"].is_null()) {
          a.aggregate = Rational::parse(item["aggregate"].get<std::string>());
        }
        a.tie = item.value("tie", false);
        a.lexicographic_fallback = item.value("lexicographic_fallback", false);
        if (item.contains("source_models")) {
          a.source_models = item["source_models"].get<std::vector<std::string>>();
        }
        plan.assignments.push_back(std::move(a));
      }
      return plan;
    }
    if (!j.is_object()) throw Error("a plan must be a JSON object");
    if (program == nullptr) throw Error("a plan without arities needs the program");
    const auto symbols = all_symbols(*program);
    for (const auto& [placeholder, name] : j.items()) {
      std::optional<PredicateSymbol> found;
      for (const auto& [sym, rules] : symbols) {
        if (sym.name != placeholder) continue;
        if (found) throw Error("plan entry '" + placeholder + "' is ambiguous: several arities");
        found = sym;
      }
      if (!found) throw Error("plan entry '" + placeholder + "' does not occur in the program");
      plan.assignments.push_back({*found, name.get<std::string>(), std::nullopt, false, false, {}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

std::string_view to_string(Collision::Kind kind) noexcept {
  switch (kind) {
    case Collision::Kind::ExistingPredicate: return "existing_predicate";
    case Collision::Kind::DuplicateAssignment: return "duplicate_assignment";
    case Collision::Kind::DifferentArity: return "different_arity";
  }
  return "existing_predicate";
}

std::optional<CommentPolicy> comment_policy_from_string(std::string_view text) noexcept {
  if (text == "keep") return CommentPolicy::Keep;
  if (text == "update") return CommentPolicy::Update;
  if (text == "drop") return CommentPolicy::Drop;
  return std::nullopt;
}

CollisionCheck check_collisions(const LogicProgram& program, const RenamingPlan& plan) {
  CollisionCheck check;
  std::set<PredicateSymbol> renamed;
  for (const auto& a : plan.assignments) renamed.insert(a.placeholder);

  std::set<PredicateSymbol> remaining;
  for (const auto& [sym, rules] : all_symbols(program)) {
    if (!renamed.contains(sym)) remaining.insert(sym);
  }

  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    const Assignment& a = plan.assignments[i];
    const PredicateSymbol target{a.name, a.placeholder.arity};
    if (remaining.contains(target)) {
      check.collisions.push_back({Collision::Kind::ExistingPredicate, a.placeholder, a.name,
                                  "program already defines or uses " + target.to_string()});
    }
    for (const auto& sym : remaining) {
      if (sym.name == a.name && sym.arity != a.placeholder.arity) {
        check.warnings.push_back({Collision::Kind::DifferentArity, a.placeholder, a.name,
                                  "program also has " + sym.to_string()});
      }
    }
    for (std::size_t j = 0; j < plan.assignments.size(); ++j) {
      if (i == j) continue;
      const Assignment& b = plan.assignments[j];
      if (b.name != a.name) continue;
      if (b.placeholder.arity == a.placeholder.arity) {
        check.collisions.push_back({Collision::Kind::DuplicateAssignment, a.placeholder, a.name,
                                    b.placeholder.to_string() + " is assigned the same name"});
      } else {
        check.warnings.push_back({Collision::Kind::DifferentArity, a.placeholder, a.name,
                                  b.placeholder.to_string() + " gets the same name at another arity"});
      }
    }
  }
  return check;
}

LogicProgram apply(const LogicProgram& program, const RenamingPlan& plan, const ApplyOptions& options) {
  for (const auto& a : plan.assignments) {
    const Validity v = validate_name(a.name);
    if (!v.valid) throw InvalidName(a.name, v.reason);
  }
  if (!options.force) {
    const auto check = check_collisions(program, plan);
    if (!check.clean()) {
      const Collision& c = check.collisions.front();
      throw CollisionError(c.placeholder.to_string() + " -> " + c.name + ": " + c.detail);
    }
  }

  std::map<PredicateSymbol, std::string> renames;
  for (const auto& a : plan.assignments) renames.emplace(a.placeholder, a.name);
  auto rename = [&renames](Literal& lit) {
    if (auto it = renames.find(lit.symbol()); it != renames.end()) lit.functor = it->second;
  };

  LogicProgram out = program;
  for (auto& rule : out.rules) {
    rename(rule.head);
    for_each_body_literal_mut(rule.body, rename);
  }

  if (options.comments == CommentPolicy::Keep) return out;
  std::vector<Comment> comments;
  for (Comment comment : out.source_comments) {
    bool mentions = false;
    for (const auto& a : plan.assignments) {
      auto positions = word_positions(comment.text, a.placeholder.name);
      if (positions.empty()) continue;
      mentions = true;
      if (options.comments == CommentPolicy::Update) {
        for (auto it = positions.rbegin(); it != positions.rend(); ++it) {
          comment.text.replace(*it, a.placeholder.name.size(), a.name);
        }
      }
    }
    if (options.comments == CommentPolicy::Drop && mentions) continue;
    comments.push_back(std::move(comment));
  }
  out.source_comments = std::move(comments);
  return out;
}

}  // namespace predname
