#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "predname/judging.hpp"
#include "support.hpp"

using namespace predname;
using test::Gen;

namespace {

CandidateSet shown(std::vector<std::pair<std::string, std::vector<std::string>>> rows) {
  std::vector<RawSuggestion> raw;
  for (const auto& [ph, names] : rows) {
    for (const auto& n : names) raw.push_back({ph, n, {"m", 0}, Extraction::Structured});
  }
  return merge(raw);
}

Score half(int h) { return *Score::from_half_units(h); }

// rows: candidate -> per-judge half units (-1 for no score).
ScoreMatrix matrix_of(const std::string& ph, const std::vector<std::string>& judges,
                      const std::vector<std::pair<std::string, std::vector<int>>>& rows) {
  ScoreMatrix m;
  for (const auto& j : judges) m.add_judge(j);
  for (const auto& [cand, halves] : rows) {
    for (std::size_t j = 0; j < judges.size(); ++j) {
      m.set(ph, cand, judges[j], halves[j] < 0 ? std::nullopt : std::optional<Score>(half(halves[j])));
    }
  }
  return m;
}

// Mean of half-unit scores as a reduced fraction, computed with std::gcd.
std::pair<long, long> mean_fraction(const std::vector<int>& halves) {
  long num = std::accumulate(halves.begin(), halves.end(), 0L);
  long den = 2L * static_cast<long>(halves.size());
  const long g = std::gcd(num, den);
  return {num / g, den / g};
}

std::string display_of(const PlaceholderRanking& r, const std::string& cand) {
  for (const auto& e : r.entries) {
    if (e.candidate == cand) return e.aggregate.to_fixed(3);
  }
  return "absent";
}

const std::vector<std::string> kJudges{"chatgpt-4o", "chatgpt-o3mini", "gemini-1.5-flash", "command-r-plus"};

}  // namespace

TEST_CASE("rational arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK(Rational(-1, 2).denominator() == 2);
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(3, 2) / 3 == Rational(1, 2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational(5, 6) > Rational(4, 5));
  CHECK_THROWS_AS(Rational(1, 0), Error);
  CHECK(Rational(7, 8).to_string() == "7/8");
  CHECK(Rational(4, 2).to_string() == "2");
  CHECK(Rational::parse("5/6") == Rational(5, 6));
  CHECK(Rational::parse("-3") == Rational(-3));
  CHECK_THROWS_AS(Rational::parse("1/"), Error);
}

TEST_CASE("fixed-point display rounds halves away from zero") {
  CHECK(Rational(5, 6).to_fixed(3) == "0.833");
  CHECK(Rational(1, 28).to_fixed(3) == "0.036");
  CHECK(Rational(1, 8).to_fixed(3) == "0.125");
  CHECK(Rational(1, 16).to_fixed(3) == "0.063");
  CHECK(Rational(-1, 16).to_fixed(3) == "-0.063");
  CHECK(Rational(1, 3).to_fixed(0) == "0");
  CHECK(Rational(1, 2).to_fixed(0) == "1");
  CHECK(Rational(2).to_fixed(2) == "2.00");
  CHECK(Rational(0).to_fixed(3) == "0.000");
}

TEST_CASE("property: to_fixed agrees with long double rounding away from exact halves") {
  Gen g(0x7f1);
  for (int i = 0; i < 5000; ++i) {
    const int den = g.range(1, 400);
    const int num = g.range(0, 3 * den);
    const Rational r(num, den);
    const long double scaled = static_cast<long double>(num) * 1000 / den;
    const long double frac = scaled - std::floor(scaled);
    if (std::abs(frac - 0.5L) < 1e-9L) continue;  // exact halves are pinned above
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3Lf", static_cast<long double>(num) / den);
    CAPTURE(num);
    CAPTURE(den);
    CHECK(r.to_fixed(3) == buf);
  }
}

TEST_CASE("rubric scores") {
  CHECK(Score::parse("1")->half_units() == 2);
  CHECK(Score::parse("1.0")->half_units() == 2);
  CHECK(Score::parse("0.5")->half_units() == 1);
  CHECK(Score::parse("0,5")->half_units() == 1);
  CHECK(Score::parse(".5")->half_units() == 1);
  CHECK(Score::parse("0.50")->half_units() == 1);
  CHECK(Score::parse("0")->half_units() == 0);
  for (auto bad : {"0.7", "2", "-1", "", "half", "1/2", "0.55"}) {
    CAPTURE(std::string(bad));
    CHECK_FALSE(Score::parse(bad));
  }
  CHECK_FALSE(Score::from_half_units(3));
  CHECK(half(1).to_string() == "0.5");
  CHECK(half(1).value() == Rational(1, 2));
}

TEST_CASE("judge answers in four layouts") {
  const auto set = shown({{"h0", {"parent", "ancestor"}}, {"h4", {"cousin", "h3"}}});
  const std::vector<std::string> answers{
      "h0:\n- parent: 1\n- ancestor: 0.5\n\nh4:\n- cousin: 1\n- h3: 0\n",
      "### h0\n1. parent - 1\n2. ancestor - 0.5\n### h4\n1. cousin - 1\n2. h3 - 0\n",
      "h0: parent: 1, ancestor: 0.5\nh4: cousin: 1, h3: 0\n",
      "**h0:**\n* parent: 1\n* ancestor: 0,5\n**h4:**\n* cousin: 1\n* h3: 0\n",
  };
  for (const auto& text : answers) {
    CAPTURE(text);
    const auto parsed = parse_judge_scores(text, set, "j");
    CHECK(parsed.anomalies.empty());
    CHECK(parsed.pairs == 4);
    CHECK(parsed.scores.judge_ids == std::vector<std::string>{"j"});
    CHECK(parsed.scores.get("h0", "parent", "j") == half(2));
    CHECK(parsed.scores.get("h0", "ancestor", "j") == half(1));
    CHECK(parsed.scores.get("h4", "cousin", "j") == half(2));
    CHECK(parsed.scores.get("h4", "h3", "j") == half(0));
  }
}

TEST_CASE("judge names are matched loosely") {
  const auto set = shown({{"inv1", {"can reach", "is_connected"}}, {"P", {"co_authored_paper"}}});
  const auto parsed = parse_judge_scores(
      "inv1:\n- Can Reach: 0.5\n- is_connected: 1\nP:\n- co-authored-paper: 1\n", set, "j");
  CHECK(parsed.anomalies.empty());
  CHECK(parsed.scores.get("inv1", "can reach", "j") == half(1));
  CHECK(parsed.scores.get("inv1", "isConnected", "j") == half(2));
  CHECK(parsed.scores.get("P", "coAuthoredPaper", "j") == half(2));
}

TEST_CASE("judge anomalies") {
  const auto set = shown({{"h0", {"parent", "ancestor"}}});
  const auto parsed = parse_judge_scores("h0:\n- parent: 0.7\n- mother: 1\n- ancestor: 1\n- ancestor: 0\n", set, "j");
  std::vector<std::string> kinds;
  for (const auto& a : parsed.anomalies) kinds.push_back(a.kind);
  CHECK(std::count(kinds.begin(), kinds.end(), "off_rubric") == 1);
  CHECK(std::count(kinds.begin(), kinds.end(), "unknown_candidate") == 1);
  CHECK(std::count(kinds.begin(), kinds.end(), "duplicate_score") == 1);
  CHECK_FALSE(parsed.scores.get("h0", "parent", "j"));
  CHECK(parsed.scores.get("h0", "ancestor", "j") == half(2));
  CHECK_THROWS_AS(parse_judge_scores("I cannot score these.", set, "j"), JudgeFormatError);
}

TEST_CASE("aggregation matches an independent mean") {
  Gen g(0xa66);
  for (int trial = 0; trial < 1000; ++trial) {
    const int judges = g.range(1, 14);
    std::vector<std::string> ids;
    for (int j = 0; j < judges; ++j) ids.push_back("j" + std::to_string(j));
    std::vector<std::pair<std::string, std::vector<int>>> rows;
    for (int c = g.range(1, 6); c > 0; --c) {
      std::vector<int> halves;
      for (int j = 0; j < judges; ++j) halves.push_back(g.range(0, 2));
      rows.push_back({"c" + std::to_string(c), halves});
    }
    const auto m = matrix_of("P", ids, rows);
    const auto ranking = aggregate_placeholder(*m.find("P"), nullptr, nullptr);
    for (const auto& [cand, halves] : rows) {
      const auto it = std::find_if(ranking.entries.begin(), ranking.entries.end(),
                                   [&](const auto& e) { return e.candidate == cand; });
      REQUIRE(it != ranking.entries.end());
      const auto [num, den] = mean_fraction(halves);
      CHECK(it->aggregate.numerator() == num);
      CHECK(it->aggregate.denominator() == den);
      CHECK(it->n_scores == halves.size());
      CHECK(it->sum == Rational(std::accumulate(halves.begin(), halves.end(), 0L), 2));
    }
    for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
      CHECK(ranking.entries[i - 1].aggregate >= ranking.entries[i].aggregate);
    }
  }
}

TEST_CASE("family scores from four judges") {
  const auto h0 = matrix_of("h0", kJudges, {{"parent", {2, 2, 2, 2}}, {"ancestor", {1, 0, 1, 1}}});
  const auto r0 = aggregate_placeholder(*h0.find("h0"), nullptr, nullptr);
  CHECK(display_of(r0, "parent") == "1.000");
  CHECK(display_of(r0, "ancestor") == "0.375");
  const auto h4 = matrix_of("h4", kJudges,
                            {{"cousin", {2, 2, 2, 1}}, {"cousins", {2, 2, 1, 1}}, {"h3", {0, 0, 0, 0}}});
  const auto r4 = aggregate_placeholder(*h4.find("h4"), nullptr, nullptr);
  CHECK(display_of(r4, "cousin") == "0.875");
  CHECK(display_of(r4, "h3") == "0.000");
  CHECK(r4.entries.front().candidate == "cousin");
  CHECK_FALSE(r4.tie);
}

TEST_CASE("single-rule scores from four judges") {
  const auto gp = matrix_of("h0", kJudges, {{"parent", {2, 2, 2, 2}}, {"renameH0", {0, 0, 0, 1}}});
  CHECK(display_of(aggregate_placeholder(*gp.find("h0"), nullptr, nullptr), "renameH0") == "0.125");
  const auto cz = matrix_of("h3", kJudges, {{"siblings", {2, 2, 2, 0}}, {"sibling", {2, 2, 0, 0}}});
  CHECK(display_of(aggregate_placeholder(*cz.find("h3"), nullptr, nullptr), "siblings") == "0.750");
}

TEST_CASE("a three-way tie and an invalid candidate") {
  const auto set = shown({{"inv1", {"directly_connected", "direct_connection", "is_connected", "can reach"}}});
  const auto m = matrix_of("inv1", {"chatgpt-5", "gemini-1.5-flash", "command-r-plus"},
                           {{"directlyConnected", {2, 2, 1}},
                            {"directConnection", {2, 2, 1}},
                            {"isConnected", {2, 1, 2}},
                            {"can reach", {0, 1, 1}}});
  const auto r = aggregate_placeholder(*m.find("inv1"), &set, nullptr);
  CHECK(r.tie);
  CHECK(display_of(r, "directConnection") == "0.833");
  CHECK(display_of(r, "isConnected") == "0.833");
  CHECK(display_of(r, "can reach") == "0.333");
  CHECK(r.entries.back().candidate == "can reach");
  CHECK_FALSE(r.entries.back().valid);

  const auto lex = rank_and_resolve(r, TiePolicy::Lexicographic);
  CHECK(lex.status == ResolutionStatus::Winner);
  CHECK(lex.winner == "directConnection");
  CHECK(lex.lexicographic_fallback);
  CHECK(lex.tied == std::vector<std::string>{"directlyConnected", "directConnection", "isConnected"});

  const auto defer = rank_and_resolve(r, TiePolicy::Defer);
  CHECK(defer.status == ResolutionStatus::Deferred);
  CHECK_FALSE(defer.winner);
  CHECK(defer.tie);

  CHECK(rank_and_resolve(r, TiePolicy::Rejudge).status == ResolutionStatus::NeedsRejudge);
}

TEST_CASE("invalid candidates never win") {
  const auto set = shown({{"inv1", {"can reach", "linked"}}});
  const auto m = matrix_of("inv1", {"a"}, {{"can reach", {2}}, {"linked", {1}}});
  const auto r = aggregate_placeholder(*m.find("inv1"), &set, nullptr);
  const auto res = rank_and_resolve(r, TiePolicy::Defer);
  CHECK(res.winner == "linked");
  CHECK_FALSE(res.tie);

  const auto only_bad = shown({{"inv1", {"can reach"}}});
  const auto m2 = matrix_of("inv1", {"a"}, {{"can reach", {2}}});
  CHECK_THROWS_AS(rank_and_resolve(aggregate_placeholder(*m2.find("inv1"), &only_bad, nullptr), TiePolicy::Defer),
                  AllInvalid);
}

TEST_CASE("unscored candidates are left out and reported") {
  const auto m = matrix_of("P", {"a", "b"}, {{"x", {2, 1}}, {"y", {-1, -1}}, {"z", {-1, 0}}});
  std::vector<Anomaly> anomalies;
  const auto r = aggregate_placeholder(*m.find("P"), nullptr, &anomalies);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[1].candidate == "z");
  CHECK(r.entries[1].n_scores == 1);
  REQUIRE(anomalies.size() == 1);
  CHECK(anomalies[0].kind == "unscored_candidate");
  CHECK(anomalies[0].subject == "y");

  const auto empty = matrix_of("Q", {"a"}, {{"x", {-1}}});
  CHECK_THROWS_AS(aggregate_placeholder(*empty.find("Q"), nullptr, nullptr), NoScores);
  CHECK_THROWS_AS(aggregate(empty), NoScores);
}

TEST_CASE("property: ranking ignores judge column order and candidate order") {
  Gen g(0x0d3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> ids{"a", "b", "c", "d"};
    std::vector<std::pair<std::string, std::vector<int>>> rows;
    for (int c = g.range(2, 6); c > 0; --c) {
      rows.push_back({"n" + std::to_string(c), {g.range(0, 2), g.range(0, 2), g.range(0, 2), g.range(0, 2)}});
    }
    const auto base = aggregate_placeholder(*matrix_of("P", ids, rows).find("P"), nullptr, nullptr);

    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), g.engine());
    std::vector<std::string> ids2;
    for (auto p : perm) ids2.push_back(ids[p]);
    auto rows2 = rows;
    for (auto& [c, h] : rows2) {
      std::vector<int> moved;
      for (auto p : perm) moved.push_back(h[p]);
      h = moved;
    }
    std::shuffle(rows2.begin(), rows2.end(), g.engine());
    const auto shuffled = aggregate_placeholder(*matrix_of("P", ids2, rows2).find("P"), nullptr, nullptr);

    CHECK(base.tie == shuffled.tie);
    CHECK(rank_and_resolve(base, TiePolicy::Lexicographic).winner ==
          rank_and_resolve(shuffled, TiePolicy::Lexicographic).winner);
    for (const auto& e : base.entries) {
      CHECK(display_of(shuffled, e.candidate) == e.aggregate.to_fixed(3));
    }
  }
}

TEST_CASE("fourteen human judges") {
  const auto set = shown({{"h0", {"parent", "rename_h0"}}});
  std::string csv = "placeholder,candidate,judge_id,score\n";
  for (int j = 1; j <= 14; ++j) {
    csv += "h0,parent,human" + std::to_string(j) + ",1\n";
    csv += "h0,renameH0,human" + std::to_string(j) + "," + (j == 1 ? "0.5" : "0") + "\n";
  }
  const auto m = import_external_scores(csv, set);
  CHECK(m.judge_ids.size() == 14);
  const auto r = aggregate_placeholder(*m.find("h0"), &set, nullptr);
  CHECK(display_of(r, "renameH0") == "0.036");
  CHECK(r.entries[1].aggregate == Rational(1, 28));
  CHECK(display_of(r, "parent") == "1.000");
}

TEST_CASE("score file errors") {
  const auto set = shown({{"h0", {"parent"}}});
  CHECK_THROWS_AS(import_external_scores("a,b,c\n", set), ScoreFileError);
  CHECK_THROWS_AS(import_external_scores("placeholder,candidate,judge_id,score\n", set), NoScores);
  CHECK_THROWS_AS(import_external_scores("placeholder,candidate,judge_id,score\nh0,mother,x,1\n", set),
                  UnknownCandidate);
  CHECK_THROWS_AS(import_external_scores("placeholder,candidate,judge_id,score\nh9,parent,x,1\n", set),
                  UnknownCandidate);
  CHECK_THROWS_AS(import_external_scores("placeholder,candidate,judge_id,score\nh0,parent,x,0.7\n", set),
                  OffRubricScore);
  CHECK_THROWS_AS(import_external_scores("placeholder,candidate,judge_id,score\nh0,parent,x,1\nh0,parent,x,0\n", set),
                  ScoreFileError);
  CHECK_THROWS_AS(import_external_scores("placeholder,candidate,judge_id,score\nh0,parent,1\n", set), ScoreFileError);
  // Quoted fields, CRLF line ends and a byte-order mark are fine.
  const auto m = import_external_scores("\xEF\xBB\xBFplaceholder,candidate,judge_id,score\r\n\"h0\",\"parent\",\"x,y\",1\r\n", set);
  CHECK(m.get("h0", "parent", "x,y") == half(2));
}

TEST_CASE("merging score matrices adds judge columns") {
  auto a = matrix_of("h0", {"j1"}, {{"parent", {2}}});
  const auto b = matrix_of("h0", {"j2"}, {{"parent", {1}}});
  a.merge(b);
  CHECK(a.judge_ids == std::vector<std::string>{"j1", "j2"});
  CHECK(a.get("h0", "parent", "j2") == half(1));
  CHECK_THROWS_AS(a.merge(b), ScoreFileError);
}

TEST_CASE("empty matrix keeps every shown candidate") {
  const auto set = shown({{"h0", {"a", "b"}}, {"h1", {"c"}}});
  const auto m = empty_matrix(set);
  REQUIRE(m.per_placeholder.size() == 2);
  CHECK(m.per_placeholder[0].candidates.size() == 2);
  CHECK(m.per_placeholder[0].candidates[0].by_judge.empty());
}

TEST_CASE("policy and status names") {
  for (auto p : {TiePolicy::Rejudge, TiePolicy::Defer, TiePolicy::Lexicographic}) {
    CHECK(tie_policy_from_string(to_string(p)) == p);
  }
  CHECK(to_string(TiePolicy::Lexicographic) == "lex");
  CHECK(to_string(ResolutionStatus::NeedsRejudge) == "needs_rejudge");
}
