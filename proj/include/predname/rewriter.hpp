#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "predname/judging.hpp"
#include "predname/logic_ir.hpp"

namespace predname {

struct Assignment {
  PredicateSymbol placeholder;
  std::string name;

  // Provenance, carried into reports.
  std::optional<Rational> aggregate;
  bool tie = false;
  bool lexicographic_fallback = false;
  std::vector<std::string> source_models;

  bool operator==(const Assignment&) const = default;
};

struct RenamingPlan {
  std::vector<Assignment> assignments;

  bool empty() const noexcept { return assignments.empty(); }
  const Assignment* find(const PredicateSymbol& placeholder) const;

  nlohmann::ordered_json to_json() const;
  /// Accepts the to_json form, or a bare {"h0": "parent"} object whose
  /// arities are looked up in `program` (required for that form).
  static RenamingPlan from_json(const nlohmann::json& j, const LogicProgram* program = nullptr);

  bool operator==(const RenamingPlan&) const = default;
};

struct Collision {
  enum class Kind { ExistingPredicate, DuplicateAssignment, DifferentArity };

  Kind kind;
  PredicateSymbol placeholder;
  std::string name;
  std::string detail;

  bool operator==(const Collision&) const = default;
};

std::string_view to_string(Collision::Kind kind) noexcept;

struct CollisionCheck {
  std::vector<Collision> collisions;
  std::vector<Collision> warnings;  // same name at a different arity

  bool clean() const noexcept { return collisions.empty(); }
};

CollisionCheck check_collisions(const LogicProgram& program, const RenamingPlan& plan);

enum class CommentPolicy { Keep, Update, Drop };

std::optional<CommentPolicy> comment_policy_from_string(std::string_view text) noexcept;

struct ApplyOptions {
  bool force = false;  // rename despite collisions
  CommentPolicy comments = CommentPolicy::Update;
};

/// Renames every head and body occurrence of each planned placeholder at its
/// arity. Throws InvalidName for a name that fails validate_name, and
/// CollisionError when check_collisions finds a collision and force is off.
LogicProgram apply(const LogicProgram& program, const RenamingPlan& plan,
                   const ApplyOptions& options = {});

}  // namespace predname
