#include <doctest.h>

#include <algorithm>
#include <regex>

#include "predname/pipeline.hpp"
#include "support.hpp"

using namespace predname;
using test::FakeBackend;

namespace {

const char* kProgram = "h0(X,Y) :- mother(X,Y).\nh1(X,Y) :- h0(X,Z), h0(Z,Y).\n";

RunConfig two_by_two() {
  RunConfig c;
  c.suggesters = {test::endpoint("a"), test::endpoint("b")};
  c.judges = {test::endpoint("j1"), test::endpoint("j2")};
  c.k = 2;
  c.workers = 2;
  return c;
}

// Two suggesters agree on parent/grandparent and offer one alternative each.
std::shared_ptr<FakeBackend> scripted() {
  auto fake = std::make_shared<FakeBackend>();
  fake->set("a", PromptPurpose::Suggest, 0, "h0: parent\nh1: grandparent");
  fake->set("a", PromptPurpose::Suggest, 1, "h0: parent\nh1: grandparent");
  fake->set("b", PromptPurpose::Suggest, 0, "h0: parent\nh1: grand_parent");
  fake->set("b", PromptPurpose::Suggest, 1, "h0: mother_of\nh1: grandparent");
  fake->set("a", PromptPurpose::Choose, 0, "h0: parent\nh1: grandparent");
  fake->set("b", PromptPurpose::Choose, 0, "h0: progenitor\nh1: grand_parent");
  const std::string verdict = "h0:\n- parent: 1\n- motherOf: 0.5\nh1:\n- grandparent: 1\n- grandParent: 0.5\n";
  fake->set("j1", PromptPurpose::Judge, 0, verdict);
  fake->set("j2", PromptPurpose::Judge, 0, verdict);
  return fake;
}

int count_stage(const RunReport& r, const std::string& stage) {
  return static_cast<int>(std::count_if(r.exchanges.begin(), r.exchanges.end(),
                                        [&](const ExchangeRecord& e) { return e.stage == stage; }));
}

bool has_anomaly(const RunReport& r, const std::string& kind, const std::string& subject = "") {
  return std::any_of(r.anomalies.begin(), r.anomalies.end(), [&](const Anomaly& a) {
    return a.kind == kind && (subject.empty() || a.subject == subject);
  });
}

const Resolution* resolution(const RunReport& r, const std::string& ph) {
  for (const auto& rec : r.resolutions) {
    if (rec.resolution.placeholder == ph) return &rec.resolution;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("a full run over two suggesters and two judges") {
  const auto program = parse_program(kProgram);
  auto gateway = test::live_gateway(scripted());
  const auto result = run(program, two_by_two(), gateway);
  const auto& report = result.report;

  CHECK(report.failures.empty());
  CHECK(count_stage(report, "suggest") == 4);
  CHECK(count_stage(report, "choose") == 2);
  CHECK(count_stage(report, "judge") == 2);
  CHECK(report.suggestions.size() == 8);
  CHECK(report.candidates.find("h0")->candidates.size() == 2);
  CHECK(report.candidates.find("h1", "grandParent") != nullptr);

  REQUIRE(result.plan.assignments.size() == 2);
  CHECK(result.plan.assignments[0].name == "parent");
  CHECK(result.plan.assignments[0].aggregate == Rational(1));
  CHECK(result.plan.assignments[0].source_models == std::vector<std::string>{"a", "b"});
  CHECK(result.plan.assignments[1].name == "grandparent");
  REQUIRE(result.renamed);
  CHECK(render_program(*result.renamed) == "parent(X,Y) :- mother(X,Y).\ngrandparent(X,Y) :- parent(X,Z), parent(Z,Y).");
  CHECK(report.renamed_program_sha256 == sha256_hex(render_program(*result.renamed)));

  // Self-choice is reported without pruning the pool.
  REQUIRE(report.self_choice.size() == 2);
  CHECK(report.self_choice[0].choices[0].in_own_suggestions);
  CHECK(report.self_choice[1].choices[0].choice == "progenitor");
  CHECK_FALSE(report.self_choice[1].choices[0].in_own_suggestions);
  CHECK(report.candidates.find("h0", "progenitor") == nullptr);
}

TEST_CASE("a failing suggester does not stop the run") {
  auto fake = scripted();
  auto failing = std::make_shared<FakeBackend>([fake](const ModelEndpoint& e, const CompletionRequest& r) {
    if (e.model_id == "b") throw TransportError("connection refused");
    return fake->complete(e, r);
  });
  auto gateway = test::live_gateway(failing);
  const auto result = run(parse_program(kProgram), two_by_two(), gateway);
  CHECK(has_anomaly(result.report, "suggester_failed", "b"));
  CHECK(has_anomaly(result.report, "no_usable_answer", "b"));
  CHECK(result.report.self_choice[1].error == "no usable suggestions");
  CHECK(result.plan.assignments.size() == 2);
}

TEST_CASE("a failing judge leaves the other judge's scores") {
  auto fake = scripted();
  auto failing = std::make_shared<FakeBackend>([fake](const ModelEndpoint& e, const CompletionRequest& r) {
    if (e.model_id == "j2") throw TransportError("HTTP 500");
    return fake->complete(e, r);
  });
  auto gateway = test::live_gateway(failing);
  const auto result = run(parse_program(kProgram), two_by_two(), gateway);
  CHECK(has_anomaly(result.report, "judge_failed", "j2"));
  CHECK(result.report.scores.get("h0", "parent", "j1"));
  CHECK_FALSE(result.report.scores.get("h0", "parent", "j2"));
  CHECK(result.plan.assignments.size() == 2);
}

TEST_CASE("a placeholder without candidates fails alone") {
  auto fake = std::make_shared<FakeBackend>();
  for (const char* m : {"a", "b"}) {
    fake->set_all_rounds(m, PromptPurpose::Suggest, 2, "h0: parent\nh1: I am not sure about this one at all");
    fake->set(m, PromptPurpose::Choose, 0, "h0: parent");
  }
  for (const char* j : {"j1", "j2"}) fake->set(j, PromptPurpose::Judge, 0, "h0:\n- parent: 1\n");
  auto gateway = test::live_gateway(fake);
  const auto result = run(parse_program(kProgram), two_by_two(), gateway);
  REQUIRE(result.report.failures.size() == 1);
  CHECK(result.report.failures[0].placeholder == "h1");
  CHECK(result.report.failures[0].stage == "suggest");
  REQUIRE(result.plan.assignments.size() == 1);
  CHECK(result.plan.assignments[0].name == "parent");
}

TEST_CASE("an unreadable judge answer is asked again at the next round index") {
  auto fake = scripted();
  fake->set("j1", PromptPurpose::Judge, 0, "These all look fine to me.");
  fake->set("j1", PromptPurpose::Judge, 1, "h0:\n- parent: 1\n- motherOf: 0\nh1:\n- grandparent: 1\n- grandParent: 0\n");
  auto gateway = test::live_gateway(fake);
  const auto result = run(parse_program(kProgram), two_by_two(), gateway);
  CHECK(has_anomaly(result.report, "judge_format", "j1"));
  CHECK(count_stage(result.report, "judge") == 3);
  CHECK(result.report.scores.get("h0", "motherOf", "j1") == Score::from_half_units(0));

  RunConfig no_reask = two_by_two();
  no_reask.judge_reask = 0;
  auto gateway2 = test::live_gateway(fake);
  const auto second = run(parse_program(kProgram), no_reask, gateway2);
  CHECK(count_stage(second.report, "judge") == 2);
  CHECK_FALSE(second.report.scores.get("h0", "parent", "j1"));
}

TEST_CASE("off-rubric answers are asked again and kept when the retry is no better") {
  auto fake = scripted();
  const std::string bad = "h0:\n- parent: 0.8\n- motherOf: 0.5\nh1:\n- grandparent: 1\n- grandParent: 0.5\n";
  fake->set("j1", PromptPurpose::Judge, 0, bad);
  fake->set("j1", PromptPurpose::Judge, 1, bad);
  auto gateway = test::live_gateway(fake);
  const auto result = run(parse_program(kProgram), two_by_two(), gateway);
  CHECK(count_stage(result.report, "judge") == 3);
  CHECK(has_anomaly(result.report, "off_rubric", "j1"));
  CHECK_FALSE(result.report.scores.get("h0", "parent", "j1"));
  CHECK(result.report.scores.get("h0", "motherOf", "j1") == Score::from_half_units(1));
}

TEST_CASE("ties are judged again among the tied names") {
  auto fake = scripted();
  const std::string tied = "h0:\n- parent: 1\n- motherOf: 1\nh1:\n- grandparent: 1\n- grandParent: 0.5\n";
  fake->set("j1", PromptPurpose::Judge, 0, tied);
  fake->set("j2", PromptPurpose::Judge, 0, tied);
  fake->set("j1", PromptPurpose::Judge, 10, "h0:\n- parent: 1\n- motherOf: 0.5\n");
  fake->set("j2", PromptPurpose::Judge, 10, "h0:\n- parent: 1\n- motherOf: 1\n");
  auto gateway = test::live_gateway(fake);
  const auto result = run(parse_program(kProgram), two_by_two(), gateway);
  const auto& report = result.report;
  REQUIRE(report.rejudge.size() == 1);
  CHECK(report.rejudge[0].placeholder == "h0");
  CHECK(report.rejudge[0].outcome == "resolved");
  CHECK(report.rejudge[0].tied == std::vector<std::string>{"parent", "motherOf"});
  CHECK(count_stage(report, "rejudge") == 2);
  const auto* res = resolution(report, "h0");
  REQUIRE(res);
  CHECK(res->winner == "parent");
  CHECK(res->tie);
  // The winner's aggregate is the one from the first judging.
  CHECK(result.plan.find({"h0", 2})->aggregate == Rational(1));

  // The rejudge prompt shows only the tied names for the tied placeholder.
  for (const auto& r : fake->requests()) {
    if (r.round_index == 10) CHECK(r.placeholders == std::vector<std::string>{"h0"});
  }
}

TEST_CASE("a tie that survives every rejudge round is deferred") {
  auto fake = scripted();
  const std::string tied = "h0:\n- parent: 1\n- motherOf: 1\n";
  for (const char* j : {"j1", "j2"}) {
    fake->set(j, PromptPurpose::Judge, 0, tied + "h1:\n- grandparent: 1\n- grandParent: 0.5\n");
    fake->set(j, PromptPurpose::Judge, 10, tied);
    fake->set(j, PromptPurpose::Judge, 20, tied);
  }
  RunConfig config = two_by_two();
  config.rejudge_rounds = 2;
  auto gateway = test::live_gateway(fake);
  const auto result = run(parse_program(kProgram), config, gateway);
  CHECK(result.report.rejudge.size() == 2);
  CHECK(resolution(result.report, "h0")->status == ResolutionStatus::Deferred);
  CHECK_FALSE(result.plan.find({"h0", 2}));
  CHECK(result.plan.find({"h1", 2}));

  config.tie_policy = TiePolicy::Lexicographic;
  auto gateway2 = test::live_gateway(fake);
  const auto lex = run(parse_program(kProgram), config, gateway2);
  CHECK(lex.report.rejudge.empty());
  CHECK(lex.plan.find({"h0", 2})->name == "motherOf");
  CHECK(lex.plan.find({"h0", 2})->lexicographic_fallback);
}

TEST_CASE("stage limits") {
  const auto program = parse_program(kProgram);
  auto fake = scripted();
  auto at = [&](RunStage stage) {
    auto gateway = test::live_gateway(fake);
    return run(program, two_by_two(), gateway, stage);
  };
  const auto suggest = at(RunStage::Suggest);
  CHECK(suggest.report.stage == "suggest");
  CHECK(count_stage(suggest.report, "choose") == 0);
  CHECK_FALSE(suggest.report.candidates.empty());

  const auto judge = at(RunStage::Judge);
  CHECK(count_stage(judge.report, "judge") == 2);
  CHECK(judge.report.ranking.per_placeholder.empty());

  const auto rank = at(RunStage::Rank);
  CHECK(rank.plan.assignments.size() == 2);
  CHECK_FALSE(rank.renamed);
  CHECK_FALSE(rank.report.renamed_program_sha256);
}

TEST_CASE("a winner that collides is excluded unless forced") {
  const auto program = parse_program("h0(X,Y) :- mother(X,Y).\nancestor(X,Y) :- h0(X,Y).\n");
  auto fake = std::make_shared<FakeBackend>();
  RunConfig config = two_by_two();
  config.k = 1;
  for (const char* m : {"a", "b"}) {
    fake->set(m, PromptPurpose::Suggest, 0, "h0: ancestor");
    fake->set(m, PromptPurpose::Choose, 0, "h0: ancestor");
  }
  for (const char* j : {"j1", "j2"}) fake->set(j, PromptPurpose::Judge, 0, "h0:\n- ancestor: 1\n");
  auto gateway = test::live_gateway(fake);
  const auto result = run(program, config, gateway);
  CHECK(result.plan.empty());
  REQUIRE(result.report.excluded.size() == 1);
  CHECK(result.report.collisions.size() == 1);
  CHECK(*result.renamed == program);

  config.force = true;
  auto gateway2 = test::live_gateway(fake);
  const auto forced = run(program, config, gateway2);
  CHECK(forced.report.forced);
  CHECK(forced.renamed->rules[0].head.functor == "ancestor");
}

TEST_CASE("a program without placeholders is a no-op") {
  auto fake = std::make_shared<FakeBackend>();
  auto gateway = test::live_gateway(fake);
  const auto program = parse_program("a(X) :- b(X).\n");
  const auto result = run(program, two_by_two(), gateway);
  CHECK(result.plan.empty());
  CHECK(result.report.notes == std::vector<std::string>{"inventory empty: no placeholders detected"});
  CHECK(*result.renamed == program);
  CHECK(fake->requests().empty());
}

TEST_CASE("configuration checks") {
  auto fake = std::make_shared<FakeBackend>();
  auto gateway = test::live_gateway(fake);
  const auto program = parse_program(kProgram);
  auto bad = [&](auto mutate) {
    RunConfig c = two_by_two();
    mutate(c);
    CHECK_THROWS_AS(run(program, c, gateway), ConfigError);
  };
  bad([](RunConfig& c) { c.suggesters.clear(); });
  bad([](RunConfig& c) { c.judges.clear(); });
  bad([](RunConfig& c) { c.k = 0; });
  bad([](RunConfig& c) { c.workers = 0; });
  bad([](RunConfig& c) { c.rejudge_rounds = -1; });
  bad([](RunConfig& c) { c.judges.push_back(test::endpoint("j1")); });
}

TEST_CASE("recorded runs replay to the same report") {
  const auto program = parse_program(kProgram);
  auto store = std::make_shared<FixtureStore>();
  Gateway recorder(GatewayMode::Record, scripted(), store, [] { return std::string("2025-01-01T00:00:00Z"); });
  const auto recorded = run(program, two_by_two(), recorder);
  CHECK(store->size() == 8);

  Gateway replay1(GatewayMode::Replay, nullptr, store);
  Gateway replay2(GatewayMode::Replay, nullptr, store);
  const auto a = run(program, two_by_two(), replay1);
  const auto b = run(program, two_by_two(), replay2);
  CHECK(a.plan == recorded.plan);
  CHECK(emit_report(a.report, ReportFormat::Machine) == emit_report(b.report, ReportFormat::Machine));
  CHECK_FALSE(a.report.total_ms);
  for (const auto& e : a.report.exchanges) {
    CHECK(e.backend == "replay");
    CHECK_FALSE(e.latency_ms);
  }

  Gateway empty(GatewayMode::Replay, nullptr, std::make_shared<FixtureStore>());
  const auto missed = run(program, two_by_two(), empty);
  CHECK(missed.plan.empty());
  CHECK(has_anomaly(missed.report, "suggester_failed"));
}

TEST_CASE("report json round trip") {
  auto fake = scripted();
  const std::string tied = "h0:\n- parent: 1\n- motherOf: 1\nh1:\n- grandparent: 1\n- grandParent: 0.5\n- bogus: 1\n";
  fake->set("j1", PromptPurpose::Judge, 0, tied);
  fake->set("j1", PromptPurpose::Judge, 10, "h0:\n- parent: 1\n- motherOf: 0\n");
  fake->set("j2", PromptPurpose::Judge, 10, "h0:\n- parent: 1\n- motherOf: 0.5\n");
  auto gateway = test::live_gateway(fake);
  const auto report = run(parse_program(kProgram), two_by_two(), gateway).report;
  const auto text = emit_report(report, ReportFormat::Machine);
  CHECK(text.back() == '\n');
  const auto back = parse_report(text);
  CHECK(back == report);
  CHECK(emit_report(back, ReportFormat::Machine) == text);
  CHECK_THROWS_AS(parse_report("{\"schema_version\": 99}"), Error);
  CHECK_THROWS_AS(parse_report("not json"), Error);
}

TEST_CASE("table output") {
  auto gateway = test::live_gateway(scripted());
  const auto report = run(parse_program(kProgram), two_by_two(), gateway).report;
  const auto table = emit_report(report, ReportFormat::Table);
  CHECK(table.rfind("Placeholder  Candidate    j1   j2   Score  Note\n", 0) == 0);
  CHECK(std::regex_search(table, std::regex("h0 +parent +1 +1 +1\\.000 +winner")));
  CHECK(std::regex_search(table, std::regex("h0 +motherOf +0\\.5 +0\\.5 +0\\.500 *\n")));
  CHECK(report_format_from_string("table") == ReportFormat::Table);
  CHECK_FALSE(report_format_from_string("xml"));
}

// ---------------------------------------------------------------------------
// Few-shot

namespace {

const char* kChain = "A(X) :- integer(X).\nP(X,Y) :- A(X), A(Y), X > Y.\nQ(X) :- P(X, 0).\n";

std::string target_of(const std::string& prompt) {
  std::smatch m;
  static const std::regex re("find a meaningful name for ([A-Za-z0-9_]+)\\.");
  return std::regex_search(prompt, m, re) ? m[1].str() : "";
}

}  // namespace

TEST_CASE("few-shot names one placeholder at a time in dependency order") {
  const std::map<std::string, std::string> names{{"A", "is_number"}, {"P", "is_greater"}, {"Q", "is_positive"}};
  std::vector<std::string> prompts;
  std::mutex mutex;
  auto fake = std::make_shared<FakeBackend>([&](const ModelEndpoint&, const CompletionRequest& r) {
    std::lock_guard lock(mutex);
    prompts.push_back(r.prompt_text);
    const auto t = target_of(r.prompt_text);
    return t + ": " + names.at(t);
  });
  RunConfig config = two_by_two();
  config.suggesters = {test::endpoint("a")};
  config.mode = RunMode::FewShot;
  auto gateway = test::live_gateway(fake);
  const auto result = run_fewshot(parse_program(kChain), config, gateway);
  const auto& steps = result.report.fewshot_steps;
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].target.name == "A");
  CHECK(steps[1].target.name == "P");
  CHECK(steps[2].target.name == "Q");
  CHECK(steps[0].substituted == "is_number");
  CHECK(steps[0].resolved == "isNumber");
  CHECK(steps[1].status == "renamed");
  CHECK(result.report.mode == "few_shot");
  CHECK(result.report.k == 1);

  // Later prompts see the earlier names in place.
  REQUIRE(prompts.size() == 3);
  CHECK(prompts[1].find("is_number(X)") != std::string::npos);
  CHECK(prompts[1].find("A(X)") == std::string::npos);

  REQUIRE(result.renamed);
  CHECK(render_program(*result.renamed) ==
        "isNumber(X) :- integer(X).\nisGreater(X,Y) :- isNumber(X), isNumber(Y), X > Y.\nisPositive(X) :- isGreater(X,0).");
}

TEST_CASE("few-shot step failures and collisions are recorded per step") {
  auto fake = std::make_shared<FakeBackend>([](const ModelEndpoint&, const CompletionRequest& r) -> std::string {
    const auto t = target_of(r.prompt_text);
    if (t == "A") return "A(X) :- integer(X).";  // echo: nothing usable
    if (t == "P") return "P: integer";           // already used at arity 1, not 2
    return "Q: integer";                        // integer/1 exists
  });
  RunConfig config = two_by_two();
  config.suggesters = {test::endpoint("a")};
  auto gateway = test::live_gateway(fake);
  const auto result = run_fewshot(parse_program(kChain), config, gateway);
  const auto& steps = result.report.fewshot_steps;
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].status == "failed");
  CHECK(steps[1].status == "renamed");
  CHECK(steps[2].status == "collision");
  CHECK(result.report.failures.size() == 1);
  CHECK(result.report.collisions.size() == 1);
  CHECK(result.report.collision_warnings.size() >= 1);
}

TEST_CASE("few-shot with several models takes the majority and judges ties") {
  auto fake = std::make_shared<FakeBackend>([](const ModelEndpoint& e, const CompletionRequest& r) -> std::string {
    if (r.purpose == PromptPurpose::Judge) return "P:\n- bigger: 1\n- greater: 0.5\n";
    const auto t = target_of(r.prompt_text);
    if (t == "A") return e.model_id == "c" ? "A: numeric" : "A: number";
    if (t == "P") return e.model_id == "a" ? "P: bigger" : e.model_id == "b" ? "P: greater" : "P: ???";
    return "Q: positive";
  });
  RunConfig config = two_by_two();
  config.suggesters = {test::endpoint("a"), test::endpoint("b"), test::endpoint("c")};
  auto gateway = test::live_gateway(fake);
  const auto result = run_fewshot(parse_program(kChain), config, gateway);
  const auto& steps = result.report.fewshot_steps;
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].resolved == "number");
  CHECK(steps[1].resolved == "bigger");
  CHECK(result.plan.find({"P", 2})->tie);
  REQUIRE(result.report.rejudge.size() == 1);
  CHECK(result.report.rejudge[0].tied == std::vector<std::string>{"bigger", "greater"});
  CHECK(count_stage(result.report, "fewshot_judge") == 2);
  CHECK(result.report.notes.size() == 1);
}
