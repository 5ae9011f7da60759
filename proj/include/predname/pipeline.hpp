#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "predname/candidates.hpp"
#include "predname/gateway.hpp"
#include "predname/judging.hpp"
#include "predname/logic_ir.hpp"
#include "predname/placeholders.hpp"
#include "predname/prompts.hpp"
#include "predname/rewriter.hpp"

namespace predname {

enum class RunMode { ZeroShot, FewShot };

std::string_view to_string(RunMode mode) noexcept;
std::optional<RunMode> run_mode_from_string(std::string_view text) noexcept;

struct RunConfig {
  std::vector<ModelEndpoint> suggesters;  // n
  std::vector<ModelEndpoint> judges;      // j
  int k = 3;
  RunMode mode = RunMode::ZeroShot;
  TiePolicy tie_policy = TiePolicy::Rejudge;
  int rejudge_rounds = 1;  // tiebreak rounds before deferring
  int judge_reask = 1;     // re-asks after an unreadable or off-rubric judge answer
  bool force = false;      // keep colliding assignments
  std::vector<PlaceholderPattern> patterns = default_patterns();
  FewshotSlice fewshot_slice = FewshotSlice::Dependencies;
  std::shared_ptr<const TemplateSet> templates;  // builtin when null
  int workers = 4;

  /// Throws ConfigError.
  void validate() const;
};

/// Where a stage-limited run stops.
enum class RunStage { Suggest, Choose, Judge, Rank, Full };

// ---------------------------------------------------------------------------
// Report

struct ExchangeRecord {
  std::string stage;  // suggest, choose, judge, rejudge, fewshot, fewshot_judge
  std::string model_id;
  int round_index = 0;
  std::string digest;
  std::string backend;  // live | replay
  std::optional<double> latency_ms;
  std::optional<std::string> placeholder;
  std::optional<std::string> error;

  bool operator==(const ExchangeRecord&) const = default;
};

struct SelfChoice {
  std::string placeholder;
  std::optional<std::string> choice;  // normalized
  bool in_own_suggestions = false;

  bool operator==(const SelfChoice&) const = default;
};

struct ModelSelfChoice {
  std::string model_id;
  std::vector<SelfChoice> choices;
  std::optional<std::string> error;

  bool operator==(const ModelSelfChoice&) const = default;
};

struct RejudgeRecord {
  std::string placeholder;
  int round = 1;
  std::vector<std::string> tied;
  ScoreMatrix scores;
  std::optional<PlaceholderRanking> ranking;
  std::string outcome;  // resolved | still_tied | failed

  bool operator==(const RejudgeRecord&) const = default;
};

struct ResolutionRecord {
  Resolution resolution;
  std::string policy;
  bool rejudged = false;

  bool operator==(const ResolutionRecord&) const = default;
};

struct FewshotAnswer {
  std::string model_id;
  std::string raw;  // extracted text, empty when nothing usable came back
  std::optional<std::string> normalized;
  std::string extraction;
  std::optional<std::string> error;

  bool operator==(const FewshotAnswer&) const = default;
};

struct FewshotStep {
  int step = 0;
  PredicateSymbol target;
  std::vector<FewshotAnswer> answers;
  std::optional<std::string> resolved;     // normalized name entering the plan
  std::optional<std::string> substituted;  // name written into later prompts
  std::string status;  // renamed | collision | failed
  std::optional<std::string> detail;

  bool operator==(const FewshotStep&) const = default;
};

struct Failure {
  std::string placeholder;  // empty for run-wide failures
  std::string stage;
  std::string error;

  bool operator==(const Failure&) const = default;
};

struct RunReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string mode = "zero_shot";
  std::string gateway_mode = "replay";
  std::string stage = "full";
  std::string program_sha256;
  int k = 0;
  std::string tie_policy;
  std::vector<std::string> suggesters;
  std::vector<std::string> judges;

  PlaceholderInventory inventory;
  std::vector<ExchangeRecord> exchanges;
  std::vector<RawSuggestion> suggestions;  // before deduplication
  CandidateSet candidates;                 // pooled, deduplicated
  std::vector<ModelSelfChoice> self_choice;
  ScoreMatrix scores;
  Ranking ranking;  // anomalies live in `anomalies`
  std::vector<RejudgeRecord> rejudge;
  std::vector<ResolutionRecord> resolutions;
  std::vector<FewshotStep> fewshot_steps;
  RenamingPlan plan;
  std::vector<Collision> collisions;
  std::vector<Collision> collision_warnings;
  std::vector<Assignment> excluded;  // winners dropped by the rewrite precheck
  bool forced = false;
  std::optional<std::string> renamed_program_sha256;
  std::optional<double> total_ms;  // unset for replayed runs
  std::vector<Anomaly> anomalies;
  std::vector<Failure> failures;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
  static RunReport from_json(const nlohmann::json& j);

  bool operator==(const RunReport&) const = default;
};

enum class ReportFormat { Machine, Table };

std::optional<ReportFormat> report_format_from_string(std::string_view text) noexcept;

/// Machine: the JSON document (2-space indent, trailing newline). Table:
/// per-placeholder candidate x judge grids sorted by aggregate.
std::string emit_report(const RunReport& report, ReportFormat format);
RunReport parse_report(std::string_view machine_text);

// ---------------------------------------------------------------------------
// Orchestration

struct RunResult {
  RenamingPlan plan;
  RunReport report;
  std::optional<LogicProgram> renamed;  // set when the plan was applied
};

/// Suggestion fan-out, per-model self-choice, judging of the pooled
/// candidates, aggregation, tie resolution and the rewrite precheck. Errors
/// tied to one placeholder are recorded in the report and do not stop the
/// others.
RunResult run(const LogicProgram& program, const RunConfig& config, Gateway& gateway,
              RunStage stop_after = RunStage::Full);

/// One placeholder at a time in dependency order, feeding each resolved name
/// into the prompts of later steps.
RunResult run_fewshot(const LogicProgram& program, const RunConfig& config, Gateway& gateway);

}  // namespace predname
