#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "predname/candidates.hpp"

namespace predname {

/// Exact non-negative-or-negative fraction with a positive, reduced denominator.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t numerator, std::int64_t denominator = 1);  // NOLINT(implicit)

  std::int64_t numerator() const noexcept { return num_; }
  std::int64_t denominator() const noexcept { return den_; }

  Rational operator+(const Rational& other) const;
  Rational operator/(std::int64_t divisor) const;
  bool operator==(const Rational& other) const = default;
  std::strong_ordering operator<=>(const Rational& other) const;

  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  /// Fixed-point text with `places` decimals, halves rounded away from zero.
  std::string to_fixed(int places = 3) const;
  /// "3/8", or "1" for whole numbers.
  std::string to_string() const;
  static Rational parse(std::string_view text);  // inverse of to_string

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// A rubric score: 0, 0.5 or 1, stored in half units.
class Score {
 public:
  static std::optional<Score> from_half_units(int halves);
  /// Accepts "1", "0.5", "0,5", ".5", "1.0", "0.50". Anything else is off-rubric.
  static std::optional<Score> parse(std::string_view text);

  int half_units() const noexcept { return halves_; }
  Rational value() const { return Rational(halves_, 2); }
  std::string to_string() const;  // "0", "0.5", "1"

  bool operator==(const Score&) const = default;

 private:
  explicit Score(int halves) : halves_(halves) {}
  int halves_ = 0;
};

struct Anomaly {
  std::string kind;         // off_rubric, unknown_candidate, duplicate_score, unscored_candidate, ...
  std::string placeholder;  // may be empty
  std::string subject;      // judge, model or candidate concerned
  std::string detail;

  bool operator==(const Anomaly&) const = default;
};

struct CandidateScores {
  std::string candidate;               // normalized form
  std::map<std::string, Score> by_judge;

  bool operator==(const CandidateScores&) const = default;
};

struct PlaceholderScores {
  std::string placeholder;
  std::vector<CandidateScores> candidates;  // first-appearance order

  bool operator==(const PlaceholderScores&) const = default;
};

struct ScoreMatrix {
  std::vector<std::string> judge_ids;  // column order
  std::vector<PlaceholderScores> per_placeholder;

  void add_judge(const std::string& judge_id);
  /// Adds the row if needed; the score may be absent (row only).
  void set(const std::string& placeholder, const std::string& candidate, const std::string& judge_id,
           std::optional<Score> score);
  std::optional<Score> get(std::string_view placeholder, std::string_view candidate,
                           std::string_view judge_id) const;
  const PlaceholderScores* find(std::string_view placeholder) const;
  /// Appends the other matrix's judges as extra columns. Throws ScoreFileError
  /// when a judge id is already present.
  void merge(const ScoreMatrix& other);

  bool operator==(const ScoreMatrix&) const = default;
};

/// A matrix with one empty row per shown candidate, so unscored names stay visible.
ScoreMatrix empty_matrix(const CandidateSet& candidates);

struct JudgeParse {
  ScoreMatrix scores;  // one judge column
  std::vector<Anomaly> anomalies;
  std::size_t pairs = 0;  // name/score pairs recognized, rubric-valid or not
};

/// Reads "name: score" pairs under per-placeholder headers. Off-rubric values
/// and names that were not shown become anomalies. Throws JudgeFormatError
/// when no pair at all can be read.
JudgeParse parse_judge_scores(std::string_view response_text, const CandidateSet& candidates,
                              const std::string& judge_id);

struct RankedCandidate {
  std::string candidate;
  Rational aggregate;  // mean over the judges that scored it
  Rational sum;
  std::size_t n_scores = 0;
  bool valid = true;

  bool operator==(const RankedCandidate&) const = default;
};

struct PlaceholderRanking {
  std::string placeholder;
  std::vector<RankedCandidate> entries;  // aggregate descending, then first appearance
  bool tie = false;                      // two or more entries share the top aggregate

  bool operator==(const PlaceholderRanking&) const = default;
};

struct Ranking {
  std::vector<PlaceholderRanking> per_placeholder;
  std::vector<Anomaly> anomalies;

  const PlaceholderRanking* find(std::string_view placeholder) const;
  bool operator==(const Ranking&) const = default;
};

/// Ranking of one placeholder. Candidates without any score are left out and
/// reported as anomalies. Validity comes from `candidates` when given.
/// Throws NoScores when nothing was scored.
PlaceholderRanking aggregate_placeholder(const PlaceholderScores& scores,
                                         const CandidateSet* candidates,
                                         std::vector<Anomaly>* anomalies);

/// Throws NoScores naming the first placeholder without any score.
Ranking aggregate(const ScoreMatrix& matrix, const CandidateSet* candidates = nullptr);

enum class TiePolicy { Rejudge, Defer, Lexicographic };

std::string_view to_string(TiePolicy policy) noexcept;
std::optional<TiePolicy> tie_policy_from_string(std::string_view text) noexcept;

enum class ResolutionStatus { Winner, Deferred, NeedsRejudge };

std::string_view to_string(ResolutionStatus status) noexcept;

struct Resolution {
  std::string placeholder;
  ResolutionStatus status = ResolutionStatus::Winner;
  std::optional<std::string> winner;
  std::optional<Rational> winner_aggregate;
  std::vector<std::string> tied;  // valid candidates sharing the top aggregate
  bool tie = false;
  bool lexicographic_fallback = false;

  bool operator==(const Resolution&) const = default;
};

/// Picks the winner among valid candidates. On a tie the policy decides:
/// Rejudge asks for another round, Defer leaves the choice open, and
/// Lexicographic takes the smallest name by byte order. Throws AllInvalid.
Resolution rank_and_resolve(const PlaceholderRanking& ranking, TiePolicy policy);

/// CSV with header placeholder,candidate,judge_id,score. Throws
/// UnknownCandidate, OffRubricScore, ScoreFileError or NoScores.
ScoreMatrix import_external_scores(std::string_view csv_text, const CandidateSet& candidates);

}  // namespace predname
