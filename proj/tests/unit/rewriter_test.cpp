#include <doctest.h>

#include <cctype>
#include <map>
#include <tuple>

#include "predname/placeholders.hpp"
#include "predname/rewriter.hpp"
#include "support.hpp"

using namespace predname;
using test::Gen;

namespace {

RenamingPlan plan_of(std::vector<std::tuple<std::string, std::size_t, std::string>> rows) {
  RenamingPlan plan;
  for (auto& [ph, arity, name] : rows) plan.assignments.push_back({{ph, arity}, name, std::nullopt, false, false, {}});
  return plan;
}

RenamingPlan family_plan() {
  return plan_of({{"h0", 2, "parent"},
                  {"h1", 2, "grandparent"},
                  {"h2", 3, "commonAncestor"},
                  {"h3", 2, "sibling"},
                  {"h4", 2, "cousin"}});
}

// Splits rendered text into identifier runs and single other characters.
std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (word(text[i])) {
      std::size_t j = i;
      while (j < text.size() && word(text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
    } else {
      out.push_back(std::string(1, text[i++]));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("renaming the family program touches only functor tokens") {
  const auto program = test::corpus_program("family");
  const auto renamed = apply(program, family_plan());
  CHECK(detect(renamed).empty());

  const auto before = tokens(render_program(program));
  const auto after = tokens(render_program(renamed));
  REQUIRE(before.size() == after.size());
  const std::map<std::string, std::string> expected{
      {"h0", "parent"}, {"h1", "grandparent"}, {"h2", "commonAncestor"}, {"h3", "sibling"}, {"h4", "cousin"}};
  int changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i] == after[i]) continue;
    ++changed;
    CAPTURE(i);
    REQUIRE(expected.count(before[i]) == 1);
    CHECK(after[i] == expected.at(before[i]));
    CHECK(before[i + 1] == "(");
  }
  // 2 + 1 + 1 + 4 + 1 heads and 2 + 2 + 3 body uses.
  CHECK(changed == 16);
}

TEST_CASE("renaming to an existing predicate is a collision") {
  const auto program = test::corpus_program("family");
  const auto plan = plan_of({{"h0", 2, "ancestor"}});
  const auto check = check_collisions(program, plan);
  REQUIRE(check.collisions.size() == 1);
  CHECK(check.collisions[0].kind == Collision::Kind::ExistingPredicate);
  CHECK(check.collisions[0].name == "ancestor");
  CHECK_THROWS_AS(apply(program, plan), CollisionError);

  ApplyOptions force;
  force.force = true;
  const auto merged = apply(program, plan, force);
  CHECK(merged.rules[0].head.functor == "ancestor");
}

TEST_CASE("two placeholders with one name") {
  const auto program = test::corpus_program("family");
  const auto same_arity = check_collisions(program, plan_of({{"h0", 2, "rel"}, {"h1", 2, "rel"}}));
  CHECK(same_arity.collisions.size() == 2);
  CHECK(same_arity.collisions[0].kind == Collision::Kind::DuplicateAssignment);

  const auto other_arity = check_collisions(program, plan_of({{"h0", 2, "rel"}, {"h2", 3, "rel"}}));
  CHECK(other_arity.clean());
  CHECK(other_arity.warnings.size() == 2);
  CHECK(other_arity.warnings[0].kind == Collision::Kind::DifferentArity);
}

TEST_CASE("a name used at another arity is a warning") {
  const auto program = parse_program("h0(X) :- q(X).\nfoo(X, Y) :- h0(X), h0(Y).\n");
  const auto check = check_collisions(program, plan_of({{"h0", 1, "foo"}}));
  CHECK(check.clean());
  REQUIRE(check.warnings.size() == 1);
  CHECK(check.warnings[0].detail == "program also has foo/2");
  CHECK(apply(program, plan_of({{"h0", 1, "foo"}})).rules[1].head.functor == "foo");
}

TEST_CASE("swapping two placeholders is not a collision") {
  const auto program = parse_program("h0(X) :- h1(X).\nh1(X) :- q(X).\n");
  const auto swap = plan_of({{"h0", 1, "h1"}, {"h1", 1, "h0"}});
  CHECK(check_collisions(program, swap).clean());
  CHECK(render_program(apply(program, swap)) == "h1(X) :- h0(X).\nh0(X) :- q(X).");
}

TEST_CASE("invalid names are refused even with force") {
  const auto program = test::corpus_program("reachability");
  ApplyOptions force;
  force.force = true;
  CHECK_THROWS_AS(apply(program, plan_of({{"inv1", 2, "can reach"}}), force), InvalidName);
  CHECK_THROWS_AS(apply(program, plan_of({{"inv1", 2, "Reach"}})), InvalidName);
}

TEST_CASE("only the planned arity is renamed") {
  const auto program = parse_program("h0(X) :- a(X).\nh0(X, Y) :- b(X, Y).\nc :- h0(1), h0(1, 2).\n");
  const auto out = apply(program, plan_of({{"h0", 1, "unary"}}));
  CHECK(render_program(out) == "unary(X) :- a(X).\nh0(X,Y) :- b(X,Y).\nc :- unary(1), h0(1,2).");
}

TEST_CASE("renaming reaches nested goals") {
  const auto program = parse_program("p(X) :- ( h0(X) -> \\+ h0(X) ; not(h0(X)) ), h0(X).\n");
  const auto out = apply(program, plan_of({{"h0", 1, "q"}}));
  CHECK(render_program(out).find("h0") == std::string::npos);
  CHECK(detect(out).empty());
}

TEST_CASE("comment policies") {
  const auto program = test::corpus_program("family");
  const auto plan = family_plan();
  auto text = [](const LogicProgram& p) {
    std::string all;
    for (const auto& c : p.source_comments) all += c.text + "\n";
    return all;
  };

  ApplyOptions keep;
  keep.comments = CommentPolicy::Keep;
  CHECK(text(apply(program, plan, keep)) == text(program));

  const auto updated = text(apply(program, plan));
  CHECK(updated.find("# parent = parent") != std::string::npos);
  CHECK(updated.find("h0") == std::string::npos);

  ApplyOptions drop;
  drop.comments = CommentPolicy::Drop;
  CHECK(apply(program, plan, drop).source_comments.empty());

  CHECK(comment_policy_from_string("update") == CommentPolicy::Update);
  CHECK_FALSE(comment_policy_from_string("erase"));
}

TEST_CASE("comment updates respect word boundaries") {
  const auto program = parse_program("h1(X) :- q(X). % h1 and h10 and xh1\n");
  const auto out = apply(program, plan_of({{"h1", 1, "big"}}));
  REQUIRE(out.source_comments.size() == 1);
  CHECK(out.source_comments[0].text == "% big and h10 and xh1");
}

TEST_CASE("plan json round trip") {
  auto plan = family_plan();
  plan.assignments[0].aggregate = Rational(1);
  plan.assignments[0].source_models = {"gpt-4o", "gemini-1.5-flash"};
  plan.assignments[1].tie = true;
  plan.assignments[1].lexicographic_fallback = true;
  plan.assignments[2].aggregate = Rational(5, 6);
  const auto j = plan.to_json();
  CHECK(j["schema_version"] == 1);
  CHECK(j["assignments"][2]["aggregate"] == "5/6");
  CHECK(RenamingPlan::from_json(nlohmann::json::parse(j.dump())) == plan);
}

TEST_CASE("bare plans take arities from the program") {
  const auto program = test::corpus_program("family");
  const auto plan = RenamingPlan::from_json(nlohmann::json{{"h2", "commonAncestor"}, {"h0", "parent"}}, &program);
  REQUIRE(plan.find({"h2", 3}));
  CHECK(plan.find({"h2", 3})->name == "commonAncestor");
  CHECK(plan.find({"h0", 2})->name == "parent");
  CHECK_THROWS_AS(RenamingPlan::from_json(nlohmann::json{{"h0", "parent"}}), Error);
  CHECK_THROWS_AS(RenamingPlan::from_json(nlohmann::json{{"h9", "x"}}, &program), Error);
  const auto two = parse_program("h0(X) :- a(X).\nh0(X, Y) :- b(X, Y).\n");
  CHECK_THROWS_AS(RenamingPlan::from_json(nlohmann::json{{"h0", "x"}}, &two), Error);
  CHECK_THROWS_AS(RenamingPlan::from_json(nlohmann::json::parse(R"({"assignments":[{"name":"x"}]})")), Error);
}

TEST_CASE("property: renaming then renaming back restores the program") {
  Gen g(0x5e7);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int n = g.range(1, 5);
    for (int r = g.range(1, 8); r > 0; --r) {
      text += "h" + std::to_string(g.range(0, n - 1)) + "(X) :- ";
      const int calls = g.range(1, 3);
      for (int c = 0; c < calls; ++c) {
        text += c ? ", " : "";
        text += g.chance(0.5) ? "h" + std::to_string(g.range(0, n - 1)) + "(X)" : "base(X)";
      }
      text += ".\n";
    }
    CAPTURE(text);
    const auto program = parse_program(text);
    const auto inv = detect(program);
    RenamingPlan forward;
    RenamingPlan back;
    for (const auto& e : inv.entries) {
      const std::string fresh = "name" + e.symbol.name;
      forward.assignments.push_back({e.symbol, fresh, std::nullopt, false, false, {}});
      back.assignments.push_back({{fresh, e.symbol.arity}, e.symbol.name, std::nullopt, false, false, {}});
    }
    REQUIRE(check_collisions(program, forward).clean());
    const auto renamed = apply(program, forward);
    CHECK(detect(renamed).empty());
    CHECK(apply(renamed, back) == program);
  }
}
