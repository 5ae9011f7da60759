#include <algorithm>
#include <chrono>
#include <map>
#include <regex>
#include <set>

#include "predname/errors.hpp"
#include "predname/pipeline.hpp"

namespace predname {

void RunConfig::validate() const {
  if (suggesters.empty()) throw ConfigError("suggesters", "at least one model is required");
  if (judges.empty()) throw ConfigError("judges", "at least one model is required");
  if (k < 1) throw ConfigError("k", "must be at least 1");
  if (rejudge_rounds < 0) throw ConfigError("rejudge_rounds", "must not be negative");
  if (judge_reask < 0) throw ConfigError("judge_reask", "must not be negative");
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  auto check_unique = [](const std::vector<ModelEndpoint>& models, const char* field) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const std::string path = std::string(field) + "[" + std::to_string(i) + "]";
      if (models[i].model_id.empty()) throw ConfigError(path + ".id", "must not be empty");
      if (!seen.insert(models[i].model_id).second) {
        throw ConfigError(path + ".id", "duplicate model id '" + models[i].model_id + "'");
      }
    }
  };
  check_unique(suggesters, "suggesters");
  check_unique(judges, "judges");
}

namespace {

using Clock = std::chrono::steady_clock;

std::string program_hash(const LogicProgram& program) {
  return sha256_hex(render_program(program, RenderMode::Canonical));
}

void record_exchange(RunReport& report, const std::string& stage, const CompletionExchange& exchange,
                     std::optional<std::string> placeholder = std::nullopt) {
  report.exchanges.push_back({stage, exchange.request.model_id, exchange.request.round_index,
                              exchange.digest, std::string(to_string(exchange.backend)),
                              exchange.latency_ms, std::move(placeholder), exchange.error});
}

bool has_off_rubric(const JudgeParse& parse) {
  return std::any_of(parse.anomalies.begin(), parse.anomalies.end(),
                     [](const Anomaly& a) { return a.kind == "off_rubric"; });
}

/// One judging round over `shown`. Each judge gets `judge_reask` extra
/// attempts after an unreadable or off-rubric answer; attempt a of a round
/// based at `base_round` uses round index base_round + a.
ScoreMatrix judge_round(const LogicProgram& program, const CandidateSet& shown, const RunConfig& config,
                        Gateway& gateway, const PromptOptions& options, int base_round,
                        const std::string& stage, const std::optional<std::string>& placeholder,
                        RunReport& report) {
  const RenderedPrompt prompt = render_judge(program, shown, options);
  ScoreMatrix matrix = empty_matrix(shown);
  for (const auto& judge : config.judges) matrix.add_judge(judge.model_id);

  std::map<std::size_t, JudgeParse> accepted;
  std::map<std::size_t, JudgeParse> fallback;  // readable but off-rubric
  std::vector<std::size_t> pending(config.judges.size());
  for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

  for (int attempt = 0; attempt <= config.judge_reask && !pending.empty(); ++attempt) {
    std::vector<Gateway::Job> jobs;
    for (std::size_t i : pending) jobs.push_back({&config.judges[i], prompt, base_round + attempt});
    const auto results = gateway.complete_batch(jobs, config.workers);

    std::vector<std::size_t> again;
    for (std::size_t n = 0; n < results.size(); ++n) {
      const std::size_t i = pending[n];
      const auto& exchange = results[n];
      const std::string& judge_id = config.judges[i].model_id;
      record_exchange(report, stage, exchange, placeholder);
      if (!exchange.ok()) {
        report.anomalies.push_back({"judge_failed", placeholder.value_or(""), judge_id, *exchange.error});
        continue;
      }
      try {
        JudgeParse parse = parse_judge_scores(exchange.response_text, shown, judge_id);
        report.anomalies.insert(report.anomalies.end(), parse.anomalies.begin(), parse.anomalies.end());
        if (has_off_rubric(parse) && attempt < config.judge_reask) {
          fallback[i] = std::move(parse);
          again.push_back(i);
        } else {
          fallback.erase(i);
          accepted[i] = std::move(parse);
        }
      } catch (const JudgeFormatError& e) {
        report.anomalies.push_back({"judge_format", placeholder.value_or(""), judge_id, e.what()});
        again.push_back(i);
      }
    }
    pending = std::move(again);
  }
  for (auto& [i, parse] : fallback) accepted.emplace(i, std::move(parse));

  for (const auto& [i, parse] : accepted) {
    const std::string& judge_id = config.judges[i].model_id;
    for (const auto& row : parse.scores.per_placeholder) {
      for (const auto& c : row.candidates) {
        if (auto it = c.by_judge.find(judge_id); it != c.by_judge.end()) {
          matrix.set(row.placeholder, c.candidate, judge_id, it->second);
        }
      }
    }
  }
  return matrix;
}

std::vector<std::string> source_models(const CandidateName* candidate, const RunConfig& config) {
  std::vector<std::string> out;
  if (candidate == nullptr) return out;
  for (const auto& model : config.suggesters) {
    bool found = std::any_of(candidate->sources.begin(), candidate->sources.end(),
                             [&](const SuggestionSource& s) { return s.model_id == model.model_id; });
    if (found) out.push_back(model.model_id);
  }
  return out;
}

std::optional<Rational> aggregate_of(const PlaceholderRanking& ranking, const std::string& candidate) {
  for (const auto& e : ranking.entries) {
    if (e.candidate == candidate) return e.aggregate;
  }
  return std::nullopt;
}

void init_report(RunReport& report, const LogicProgram& program, const RunConfig& config,
                 const Gateway& gateway) {
  report.mode = std::string(to_string(config.mode));
  report.gateway_mode = std::string(to_string(gateway.mode()));
  report.program_sha256 = program_hash(program);
  report.k = config.k;
  report.tie_policy = std::string(to_string(config.tie_policy));
  for (const auto& m : config.suggesters) report.suggesters.push_back(m.model_id);
  for (const auto& m : config.judges) report.judges.push_back(m.model_id);
}

/// Drops colliding assignments unless forced, then renames.
void finish(const LogicProgram& program, const RunConfig& config, RunResult& result) {
  RunReport& report = result.report;
  const CollisionCheck check = check_collisions(program, result.plan);
  report.collisions = check.collisions;
  report.collision_warnings = check.warnings;
  if (!check.clean()) {
    if (config.force) {
      report.forced = true;
    } else {
      std::set<PredicateSymbol> colliding;
      for (const auto& c : check.collisions) colliding.insert(c.placeholder);
      std::vector<Assignment> kept;
      for (auto& a : result.plan.assignments) {
        (colliding.count(a.placeholder) ? report.excluded : kept).push_back(std::move(a));
      }
      result.plan.assignments = std::move(kept);
    }
  }
  ApplyOptions options;
  options.force = config.force;
  result.renamed = apply(program, result.plan, options);
  report.renamed_program_sha256 = program_hash(*result.renamed);
  report.plan = result.plan;
}

const char* stage_name(RunStage stage) {
  switch (stage) {
    case RunStage::Suggest: return "suggest";
    case RunStage::Choose: return "choose";
    case RunStage::Judge: return "judge";
    case RunStage::Rank: return "rank";
    case RunStage::Full: return "full";
  }
  return "full";
}

}  // namespace

RunResult run(const LogicProgram& program, const RunConfig& config, Gateway& gateway, RunStage stop_after) {
  config.validate();
  const auto started = Clock::now();
  RunResult result;
  RunReport& report = result.report;
  init_report(report, program, config, gateway);
  report.stage = stage_name(stop_after);

  auto stamp = [&] {
    if (gateway.mode() != GatewayMode::Replay) {
      report.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
    }
  };

  report.inventory = detect(program, config.patterns);
  if (report.inventory.empty()) {
    report.notes.push_back("inventory empty: no placeholders detected");
    if (stop_after == RunStage::Full) finish(program, config, result);
    stamp();
    return result;
  }
  const auto names = report.inventory.names();
  PromptOptions options{config.templates.get(), config.fewshot_slice};

  // 1. Suggestions: n models x k rounds of the same prompt.
  const RenderedPrompt suggest_prompt = render_suggest(program, report.inventory, options);
  const auto exchanges = gateway.complete_all(
      config.suggesters, [&](const ModelEndpoint&) { return suggest_prompt; }, config.k, config.workers);
  std::map<std::string, std::vector<RawSuggestion>> by_model;
  for (const auto& exchange : exchanges) {
    record_exchange(report, "suggest", exchange);
    const std::string& model = exchange.request.model_id;
    if (!exchange.ok()) {
      report.anomalies.push_back({"suggester_failed", "", model, *exchange.error});
      continue;
    }
    auto found = extract_suggestions(exchange.response_text, names, {model, exchange.request.round_index});
    by_model[model].insert(by_model[model].end(), found.begin(), found.end());
    report.suggestions.insert(report.suggestions.end(), found.begin(), found.end());
  }
  for (const auto& model : config.suggesters) {
    const auto& mine = by_model[model.model_id];
    for (const auto& ph : names) {
      bool usable = std::any_of(mine.begin(), mine.end(), [&](const RawSuggestion& s) {
        return s.placeholder == ph && s.extraction != Extraction::None;
      });
      if (!usable) report.anomalies.push_back({"no_usable_answer", ph, model.model_id, "no round produced a name"});
    }
  }
  report.candidates = merge(report.suggestions, names);
  if (stop_after == RunStage::Suggest) {
    stamp();
    return result;
  }

  // 2. Self-choice over each model's own suggestions; reported, never pruning.
  {
    std::vector<Gateway::Job> jobs;
    std::vector<std::size_t> asked;
    std::vector<CandidateSet> own(config.suggesters.size());
    report.self_choice.resize(config.suggesters.size());
    for (std::size_t i = 0; i < config.suggesters.size(); ++i) {
      const auto& model = config.suggesters[i];
      report.self_choice[i].model_id = model.model_id;
      own[i] = merge(by_model[model.model_id], names);
      if (own[i].empty()) {
        report.self_choice[i].error = "no usable suggestions";
        continue;
      }
      jobs.push_back({&model, render_choose(program, own[i], options), 0});
      asked.push_back(i);
    }
    const auto results = gateway.complete_batch(jobs, config.workers);
    for (std::size_t n = 0; n < results.size(); ++n) {
      const std::size_t i = asked[n];
      const auto& exchange = results[n];
      record_exchange(report, "choose", exchange);
      ModelSelfChoice& entry = report.self_choice[i];
      if (!exchange.ok()) {
        entry.error = exchange.error;
        continue;
      }
      std::vector<std::string> addressed;
      for (const auto& p : own[i].per_placeholder) addressed.push_back(p.placeholder);
      for (const auto& s : extract_suggestions(exchange.response_text, addressed, {entry.model_id, 0})) {
        SelfChoice choice{s.placeholder, std::nullopt, false};
        if (s.extraction != Extraction::None) {
          try {
            choice.choice = normalize_name(s.text);
            choice.in_own_suggestions = own[i].find(s.placeholder, *choice.choice) != nullptr;
          } catch (const UnnormalizableName&) {
            choice.choice = s.text;
          }
        }
        entry.choices.push_back(std::move(choice));
      }
    }
  }
  if (stop_after == RunStage::Choose) {
    stamp();
    return result;
  }

  // 3. Judging of the pooled candidates.
  for (const auto& ph : names) {
    const auto* pc = report.candidates.find(ph);
    if (pc == nullptr || pc->candidates.empty()) {
      report.failures.push_back({ph, "suggest", EmptyCandidates(ph).what()});
    }
  }
  if (report.candidates.empty()) {
    stamp();
    return result;
  }
  report.scores = judge_round(program, report.candidates, config, gateway, options, 0, "judge",
                              std::nullopt, report);
  if (stop_after == RunStage::Judge) {
    stamp();
    return result;
  }

  // 4. Aggregation and tie resolution, one placeholder at a time.
  for (const auto& ph : names) {
    if (report.candidates.find(ph) == nullptr) continue;
    PlaceholderRanking ranking;
    try {
      const auto* row = report.scores.find(ph);
      if (row == nullptr) throw NoScores(ph);
      ranking = aggregate_placeholder(*row, &report.candidates, &report.anomalies);
    } catch (const Error& e) {
      report.failures.push_back({ph, "rank", e.what()});
      continue;
    }
    report.ranking.per_placeholder.push_back(ranking);

    ResolutionRecord record;
    record.policy = std::string(to_string(config.tie_policy));
    try {
      record.resolution = rank_and_resolve(ranking, config.tie_policy);
    } catch (const Error& e) {
      report.failures.push_back({ph, "rank", e.what()});
      continue;
    }

    Resolution& res = record.resolution;
    if (res.status == ResolutionStatus::NeedsRejudge) {
      record.rejudged = true;
      std::vector<std::string> tied = res.tied;
      for (int r = 0; r < config.rejudge_rounds; ++r) {
        RejudgeRecord rj{ph, r + 1, tied, {}, std::nullopt, "still_tied"};
        try {
          const CandidateSet shown = report.candidates.restricted(ph, tied);
          rj.scores = judge_round(program, shown, config, gateway, options, (r + 1) * 10, "rejudge", ph, report);
          const auto* row = rj.scores.find(ph);
          if (row == nullptr) throw NoScores(ph);
          rj.ranking = aggregate_placeholder(*row, &report.candidates, &report.anomalies);
          const Resolution again = rank_and_resolve(*rj.ranking, TiePolicy::Rejudge);
          if (again.status == ResolutionStatus::Winner) {
            rj.outcome = "resolved";
            res.status = ResolutionStatus::Winner;
            res.winner = again.winner;
          } else {
            tied = again.tied;
          }
        } catch (const Error& e) {
          rj.outcome = "failed";
          report.anomalies.push_back({"rejudge_failed", ph, "", e.what()});
        }
        const std::string outcome = rj.outcome;
        report.rejudge.push_back(std::move(rj));
        if (outcome != "still_tied") break;
      }
      if (res.status != ResolutionStatus::Winner) {
        res.status = ResolutionStatus::Deferred;
        res.winner.reset();
        res.winner_aggregate.reset();
      } else {
        res.winner_aggregate = aggregate_of(ranking, *res.winner);
      }
    }
    report.resolutions.push_back(std::move(record));
  }

  // 5. Plan from the winners.
  for (const auto& record : report.resolutions) {
    const Resolution& res = record.resolution;
    if (res.status != ResolutionStatus::Winner || !res.winner) continue;
    const auto* entry = report.inventory.find(res.placeholder);
    Assignment a;
    a.placeholder = entry->symbol;
    a.name = *res.winner;
    a.aggregate = res.winner_aggregate;
    a.tie = res.tie;
    a.lexicographic_fallback = res.lexicographic_fallback;
    a.source_models = source_models(report.candidates.find(res.placeholder, *res.winner), config);
    result.plan.assignments.push_back(std::move(a));
  }
  report.plan = result.plan;
  if (stop_after == RunStage::Full) finish(program, config, result);
  stamp();
  return result;
}

namespace {

const std::regex& verbatim_identifier() {
  static const std::regex re("^[a-z][A-Za-z0-9_]*$");
  return re;
}

bool defines_or_uses(const LogicProgram& program, const PredicateSymbol& symbol) {
  bool found = false;
  for (const auto& rule : program.rules) {
    for_each_literal(rule, [&](const Literal& lit) { found = found || lit.symbol() == symbol; });
    if (found) return true;
  }
  return false;
}

void substitute(LogicProgram& program, const PredicateSymbol& from, const std::string& to) {
  auto rename = [&](Literal& lit) {
    if (lit.symbol() == from) lit.functor = to;
  };
  for (auto& rule : program.rules) {
    rename(rule.head);
    for_each_body_literal_mut(rule.body, rename);
  }
}

}  // namespace

RunResult run_fewshot(const LogicProgram& program, const RunConfig& config, Gateway& gateway) {
  config.validate();
  const auto started = Clock::now();
  RunResult result;
  RunReport& report = result.report;
  init_report(report, program, config, gateway);
  report.mode = std::string(to_string(RunMode::FewShot));
  report.k = 1;

  report.inventory = detect(program, config.patterns);
  if (report.inventory.empty()) report.notes.push_back("inventory empty: no placeholders detected");
  if (config.suggesters.size() > 1) {
    report.notes.push_back("multi-model few-shot: step answers resolved by majority, ties judged");
  }
  PromptOptions options{config.templates.get(), config.fewshot_slice};

  LogicProgram current = program;
  int step_no = 0;
  for (const auto& target : dependency_order(report.inventory, program)) {
    FewshotStep step;
    step.step = ++step_no;
    step.target = target;
    try {
      const RenderedPrompt prompt = render_fewshot_step(current, target, options);
      std::vector<Gateway::Job> jobs;
      for (const auto& model : config.suggesters) jobs.push_back({&model, prompt, 0});
      const auto results = gateway.complete_batch(jobs, config.workers);

      std::vector<RawSuggestion> usable;
      for (const auto& exchange : results) {
        record_exchange(report, "fewshot", exchange, target.name);
        FewshotAnswer answer;
        answer.model_id = exchange.request.model_id;
        if (!exchange.ok()) {
          answer.extraction = std::string(to_string(Extraction::None));
          answer.error = exchange.error;
          step.answers.push_back(std::move(answer));
          continue;
        }
        auto s = extract_suggestions(exchange.response_text, {target.name}, {answer.model_id, 0}).front();
        report.suggestions.push_back(s);
        answer.raw = s.text;
        answer.extraction = std::string(to_string(s.extraction));
        if (s.extraction != Extraction::None) {
          try {
            answer.normalized = normalize_name(s.text);
            const Validity v = validate_name(*answer.normalized);
            if (v.valid) {
              usable.push_back(s);
            } else {
              answer.error = v.reason;
            }
          } catch (const UnnormalizableName& e) {
            answer.error = e.what();
          }
        }
        step.answers.push_back(std::move(answer));
      }
      if (usable.empty()) throw StepFailure(target.name, "no usable answer");

      // Majority over normalized answers; ties go to the judges.
      const CandidateSet pool = merge(usable, {target.name});
      const auto& names = pool.per_placeholder.front().candidates;
      std::size_t best = 0;
      for (const auto& c : names) best = std::max(best, c.sources.size());
      std::vector<std::string> top;
      for (const auto& c : names) {
        if (c.sources.size() == best) top.push_back(c.normalized);
      }

      bool tie = false;
      bool lexicographic = false;
      if (top.size() == 1) {
        step.resolved = top.front();
      } else {
        tie = true;
        const CandidateSet shown = pool.restricted(target.name, top);
        RejudgeRecord rj{target.name, 0, top, {}, std::nullopt, "failed"};
        rj.scores = judge_round(current, shown, config, gateway, options, 0, "fewshot_judge", target.name, report);
        const auto* row = rj.scores.find(target.name);
        if (row == nullptr) throw NoScores(target.name);
        rj.ranking = aggregate_placeholder(*row, &shown, &report.anomalies);
        const TiePolicy policy = config.tie_policy == TiePolicy::Rejudge ? TiePolicy::Defer : config.tie_policy;
        const Resolution res = rank_and_resolve(*rj.ranking, policy);
        rj.outcome = res.status == ResolutionStatus::Winner ? "resolved" : "still_tied";
        report.rejudge.push_back(rj);
        if (res.status != ResolutionStatus::Winner) throw StepFailure(target.name, "tie left open by the judges");
        step.resolved = res.winner;
        lexicographic = res.lexicographic_fallback;
      }

      const CandidateName* chosen = pool.find(target.name, *step.resolved);
      const std::string& verbatim = chosen->originals.front();
      const std::string in_context = std::regex_match(verbatim, verbatim_identifier()) ? verbatim : *step.resolved;
      const PredicateSymbol renamed{in_context, target.arity};
      if (defines_or_uses(current, renamed)) {
        step.status = "collision";
        step.detail = renamed.to_string() + " already exists";
        report.collisions.push_back({Collision::Kind::ExistingPredicate, target, in_context,
                                     renamed.to_string() + " already exists"});
      } else {
        substitute(current, target, in_context);
        step.substituted = in_context;
        step.status = "renamed";
        Assignment a;
        a.placeholder = target;
        a.name = *step.resolved;
        a.tie = tie;
        a.lexicographic_fallback = lexicographic;
        a.source_models = source_models(chosen, config);
        result.plan.assignments.push_back(std::move(a));
      }
    } catch (const Error& e) {
      step.status = "failed";
      step.detail = e.what();
      report.failures.push_back({target.name, "fewshot", e.what()});
    }
    report.fewshot_steps.push_back(std::move(step));
  }

  const auto step_collisions = report.collisions;
  finish(program, config, result);
  report.collisions.insert(report.collisions.begin(), step_collisions.begin(), step_collisions.end());
  if (gateway.mode() != GatewayMode::Replay) {
    report.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  }
  return result;
}

}  // namespace predname
