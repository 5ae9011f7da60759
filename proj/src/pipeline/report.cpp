#include <cmath>

#include "predname/errors.hpp"
#include "predname/pipeline.hpp"

namespace predname {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

template <class T>
ojson optional_json(const std::optional<T>& value) {
  return value ? ojson(*value) : ojson(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

ojson score_json(const Score& s) {
  switch (s.half_units()) {
    case 0: return 0;
    case 1: return 0.5;
    default: return 1;
  }
}

Score score_from(const json& j) {
  const double v = j.get<double>();
  auto s = Score::from_half_units(static_cast<int>(std::lround(v * 2)));
  if (!s || std::abs(v * 2 - std::round(v * 2)) > 1e-9) throw Error("report holds an off-rubric score");
  return *s;
}

// inventory

ojson inventory_json(const PlaceholderInventory& inv) {
  ojson out = ojson::array();
  for (const auto& e : inv.entries) {
    out.push_back({{"name", e.symbol.name},
                   {"arity", e.symbol.arity},
                   {"occurrence", std::string(to_string(e.occurrence))},
                   {"def_sites", e.def_sites},
                   {"use_sites", e.use_sites}});
  }
  return out;
}

PlaceholderInventory inventory_from(const json& j) {
  PlaceholderInventory inv;
  for (const auto& e : j) {
    PlaceholderEntry entry;
    entry.symbol = {e.at("name").get<std::string>(), e.at("arity").get<std::size_t>()};
    auto occ = occurrence_from_string(e.at("occurrence").get<std::string>());
    if (!occ) throw Error("unknown occurrence in report");
    entry.occurrence = *occ;
    entry.def_sites = e.at("def_sites").get<std::vector<std::size_t>>();
    entry.use_sites = e.at("use_sites").get<std::vector<std::size_t>>();
    inv.entries.push_back(std::move(entry));
  }
  return inv;
}

// candidates

ojson source_json(const SuggestionSource& s) {
  return {{"model_id", s.model_id}, {"round_index", s.round_index}};
}

SuggestionSource source_from(const json& j) {
  return {j.at("model_id").get<std::string>(), j.at("round_index").get<int>()};
}

Extraction extraction_from(const std::string& text) {
  if (text == "structured") return Extraction::Structured;
  if (text == "prose_fallback") return Extraction::ProseFallback;
  return Extraction::None;
}

ojson candidates_json(const CandidateSet& set) {
  ojson out = ojson::array();
  for (const auto& p : set.per_placeholder) {
    ojson list = ojson::array();
    for (const auto& c : p.candidates) {
      ojson sources = ojson::array();
      for (const auto& s : c.sources) sources.push_back(source_json(s));
      list.push_back({{"normalized", c.normalized},
                      {"originals", c.originals},
                      {"sources", sources},
                      {"valid", c.valid},
                      {"invalid_reason", c.valid ? ojson(nullptr) : ojson(c.invalid_reason)}});
    }
    out.push_back({{"placeholder", p.placeholder}, {"candidates", list}});
  }
  return out;
}

CandidateSet candidates_from(const json& j) {
  CandidateSet set;
  for (const auto& p : j) {
    PlaceholderCandidates pc{p.at("placeholder").get<std::string>(), {}};
    for (const auto& c : p.at("candidates")) {
      CandidateName name;
      name.normalized = c.at("normalized").get<std::string>();
      name.originals = c.at("originals").get<std::vector<std::string>>();
      for (const auto& s : c.at("sources")) name.sources.push_back(source_from(s));
      name.valid = c.at("valid").get<bool>();
      name.invalid_reason = optional_from<std::string>(c, "invalid_reason").value_or("");
      pc.candidates.push_back(std::move(name));
    }
    set.per_placeholder.push_back(std::move(pc));
  }
  return set;
}

// scores and ranking

ojson matrix_json(const ScoreMatrix& m) {
  ojson per = ojson::array();
  for (const auto& p : m.per_placeholder) {
    ojson rows = ojson::array();
    for (const auto& c : p.candidates) {
      ojson scores = ojson::object();
      for (const auto& judge : m.judge_ids) {
        if (auto it = c.by_judge.find(judge); it != c.by_judge.end()) scores[judge] = score_json(it->second);
      }
      rows.push_back({{"candidate", c.candidate}, {"scores", scores}});
    }
    per.push_back({{"placeholder", p.placeholder}, {"candidates", rows}});
  }
  return {{"judge_ids", m.judge_ids}, {"per_placeholder", per}};
}

ScoreMatrix matrix_from(const json& j) {
  ScoreMatrix m;
  m.judge_ids = j.at("judge_ids").get<std::vector<std::string>>();
  for (const auto& p : j.at("per_placeholder")) {
    PlaceholderScores ps{p.at("placeholder").get<std::string>(), {}};
    for (const auto& c : p.at("candidates")) {
      CandidateScores cs{c.at("candidate").get<std::string>(), {}};
      for (const auto& [judge, value] : c.at("scores").items()) cs.by_judge.emplace(judge, score_from(value));
      ps.candidates.push_back(std::move(cs));
    }
    m.per_placeholder.push_back(std::move(ps));
  }
  return m;
}

ojson placeholder_ranking_json(const PlaceholderRanking& r) {
  ojson entries = ojson::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"candidate", e.candidate},
                       {"aggregate", e.aggregate.to_string()},
                       {"display", e.aggregate.to_fixed(3)},
                       {"sum", e.sum.to_string()},
                       {"n_scores", e.n_scores},
                       {"valid", e.valid}});
  }
  return {{"placeholder", r.placeholder}, {"tie", r.tie}, {"entries", entries}};
}

PlaceholderRanking placeholder_ranking_from(const json& j) {
  PlaceholderRanking r;
  r.placeholder = j.at("placeholder").get<std::string>();
  r.tie = j.at("tie").get<bool>();
  for (const auto& e : j.at("entries")) {
    RankedCandidate c;
    c.candidate = e.at("candidate").get<std::string>();
    c.aggregate = Rational::parse(e.at("aggregate").get<std::string>());
    c.sum = Rational::parse(e.at("sum").get<std::string>());
    c.n_scores = e.at("n_scores").get<std::size_t>();
    c.valid = e.at("valid").get<bool>();
    r.entries.push_back(std::move(c));
  }
  return r;
}

ojson anomaly_json(const Anomaly& a) {
  return {{"kind", a.kind}, {"placeholder", a.placeholder}, {"subject", a.subject}, {"detail", a.detail}};
}

Anomaly anomaly_from(const json& j) {
  return {j.at("kind").get<std::string>(), j.at("placeholder").get<std::string>(),
          j.at("subject").get<std::string>(), j.at("detail").get<std::string>()};
}

ojson resolution_json(const ResolutionRecord& rec) {
  const Resolution& r = rec.resolution;
  return {{"placeholder", r.placeholder},
          {"status", std::string(to_string(r.status))},
          {"winner", optional_json(r.winner)},
          {"winner_aggregate", r.winner_aggregate ? ojson(r.winner_aggregate->to_string()) : ojson(nullptr)},
          {"tied", r.tied},
          {"tie", r.tie},
          {"lexicographic_fallback", r.lexicographic_fallback},
          {"policy", rec.policy},
          {"rejudged", rec.rejudged}};
}

ResolutionRecord resolution_from(const json& j) {
  ResolutionRecord rec;
  Resolution& r = rec.resolution;
  r.placeholder = j.at("placeholder").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  if (status == "winner") {
    r.status = ResolutionStatus::Winner;
  } else if (status == "deferred") {
    r.status = ResolutionStatus::Deferred;
  } else {
    r.status = ResolutionStatus::NeedsRejudge;
  }
  r.winner = optional_from<std::string>(j, "winner");
  if (auto agg = optional_from<std::string>(j, "winner_aggregate")) r.winner_aggregate = Rational::parse(*agg);
  r.tied = j.at("tied").get<std::vector<std::string>>();
  r.tie = j.at("tie").get<bool>();
  r.lexicographic_fallback = j.at("lexicographic_fallback").get<bool>();
  rec.policy = j.at("policy").get<std::string>();
  rec.rejudged = j.at("rejudged").get<bool>();
  return rec;
}

ojson collision_json(const Collision& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"placeholder", c.placeholder.name},
          {"arity", c.placeholder.arity},
          {"name", c.name},
          {"detail", c.detail}};
}

Collision collision_from(const json& j) {
  Collision c{Collision::Kind::ExistingPredicate, {}, {}, {}};
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "duplicate_assignment") c.kind = Collision::Kind::DuplicateAssignment;
  if (kind == "different_arity") c.kind = Collision::Kind::DifferentArity;
  c.placeholder = {j.at("placeholder").get<std::string>(), j.at("arity").get<std::size_t>()};
  c.name = j.at("name").get<std::string>();
  c.detail = j.at("detail").get<std::string>();
  return c;
}

}  // namespace

std::string_view to_string(RunMode mode) noexcept {
  return mode == RunMode::FewShot ? "few_shot" : "zero_shot";
}

std::optional<RunMode> run_mode_from_string(std::string_view text) noexcept {
  if (text == "zero_shot") return RunMode::ZeroShot;
  if (text == "few_shot") return RunMode::FewShot;
  return std::nullopt;
}

std::optional<ReportFormat> report_format_from_string(std::string_view text) noexcept {
  if (text == "machine" || text == "json") return ReportFormat::Machine;
  if (text == "table") return ReportFormat::Table;
  return std::nullopt;
}

nlohmann::ordered_json RunReport::to_json() const {
  ojson j;
  j["schema_version"] = schema_version;
  j["mode"] = mode;
  j["gateway_mode"] = gateway_mode;
  j["stage"] = stage;
  j["program_sha256"] = program_sha256;
  j["config"] = {{"k", k}, {"tie_policy", tie_policy}, {"suggesters", suggesters}, {"judges", judges}};
  j["inventory"] = inventory_json(inventory);

  ojson ex = ojson::array();
  for (const auto& e : exchanges) {
    ex.push_back({{"stage", e.stage},
                  {"model_id", e.model_id},
                  {"round_index", e.round_index},
                  {"digest", e.digest},
                  {"backend", e.backend},
                  {"latency_ms", optional_json(e.latency_ms)},
                  {"placeholder", optional_json(e.placeholder)},
                  {"error", optional_json(e.error)}});
  }
  j["exchanges"] = ex;

  ojson sug = ojson::array();
  for (const auto& s : suggestions) {
    sug.push_back({{"placeholder", s.placeholder},
                   {"text", s.text},
                   {"model_id", s.source.model_id},
                   {"round_index", s.source.round_index},
                   {"extraction", std::string(to_string(s.extraction))}});
  }
  j["suggestions"] = sug;
  j["candidates"] = candidates_json(candidates);

  ojson sc = ojson::array();
  for (const auto& m : self_choice) {
    ojson choices = ojson::array();
    for (const auto& c : m.choices) {
      choices.push_back({{"placeholder", c.placeholder},
                         {"choice", optional_json(c.choice)},
                         {"in_own_suggestions", c.in_own_suggestions}});
    }
    sc.push_back({{"model_id", m.model_id}, {"choices", choices}, {"error", optional_json(m.error)}});
  }
  j["self_choice"] = sc;

  j["scores"] = matrix_json(scores);
  ojson rk = ojson::array();
  for (const auto& r : ranking.per_placeholder) rk.push_back(placeholder_ranking_json(r));
  j["ranking"] = rk;

  ojson rj = ojson::array();
  for (const auto& r : rejudge) {
    rj.push_back({{"placeholder", r.placeholder},
                  {"round", r.round},
                  {"tied", r.tied},
                  {"scores", matrix_json(r.scores)},
                  {"ranking", r.ranking ? placeholder_ranking_json(*r.ranking) : ojson(nullptr)},
                  {"outcome", r.outcome}});
  }
  j["rejudge"] = rj;

  ojson res = ojson::array();
  for (const auto& r : resolutions) res.push_back(resolution_json(r));
  j["resolutions"] = res;

  ojson fs = ojson::array();
  for (const auto& s : fewshot_steps) {
    ojson answers = ojson::array();
    for (const auto& a : s.answers) {
      answers.push_back({{"model_id", a.model_id},
                         {"raw", a.raw},
                         {"normalized", optional_json(a.normalized)},
                         {"extraction", a.extraction},
                         {"error", optional_json(a.error)}});
    }
    fs.push_back({{"step", s.step},
                  {"target", s.target.name},
                  {"arity", s.target.arity},
                  {"answers", answers},
                  {"resolved", optional_json(s.resolved)},
                  {"substituted", optional_json(s.substituted)},
                  {"status", s.status},
                  {"detail", optional_json(s.detail)}});
  }
  j["fewshot_steps"] = fs;

  j["plan"] = plan.to_json();
  ojson col = ojson::array();
  for (const auto& c : collisions) col.push_back(collision_json(c));
  j["collisions"] = col;
  ojson warn = ojson::array();
  for (const auto& c : collision_warnings) warn.push_back(collision_json(c));
  j["collision_warnings"] = warn;
  j["excluded"] = RenamingPlan{excluded}.to_json()["assignments"];
  j["forced"] = forced;
  j["renamed_program_sha256"] = optional_json(renamed_program_sha256);
  j["timing"] = {{"total_ms", optional_json(total_ms)}};

  ojson an = ojson::array();
  for (const auto& a : anomalies) an.push_back(anomaly_json(a));
  j["anomalies"] = an;
  ojson fl = ojson::array();
  for (const auto& f : failures) {
    fl.push_back({{"placeholder", f.placeholder}, {"stage", f.stage}, {"error", f.error}});
  }
  j["failures"] = fl;
  j["notes"] = notes;
  return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
  RunReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kSchemaVersion) {
      throw Error("unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.mode = j.at("mode").get<std::string>();
    r.gateway_mode = j.at("gateway_mode").get<std::string>();
    r.stage = j.at("stage").get<std::string>();
    r.program_sha256 = j.at("program_sha256").get<std::string>();
    const auto& config = j.at("config");
    r.k = config.at("k").get<int>();
    r.tie_policy = config.at("tie_policy").get<std::string>();
    r.suggesters = config.at("suggesters").get<std::vector<std::string>>();
    r.judges = config.at("judges").get<std::vector<std::string>>();
    r.inventory = inventory_from(j.at("inventory"));

    for (const auto& e : j.at("exchanges")) {
      ExchangeRecord rec;
      rec.stage = e.at("stage").get<std::string>();
      rec.model_id = e.at("model_id").get<std::string>();
      rec.round_index = e.at("round_index").get<int>();
      rec.digest = e.at("digest").get<std::string>();
      rec.backend = e.at("backend").get<std::string>();
      rec.latency_ms = optional_from<double>(e, "latency_ms");
      rec.placeholder = optional_from<std::string>(e, "placeholder");
      rec.error = optional_from<std::string>(e, "error");
      r.exchanges.push_back(std::move(rec));
    }
    for (const auto& s : j.at("suggestions")) {
      r.suggestions.push_back({s.at("placeholder").get<std::string>(), s.at("text").get<std::string>(),
                               {s.at("model_id").get<std::string>(), s.at("round_index").get<int>()},
                               extraction_from(s.at("extraction").get<std::string>())});
    }
    r.candidates = candidates_from(j.at("candidates"));
    for (const auto& m : j.at("self_choice")) {
      ModelSelfChoice msc;
      msc.model_id = m.at("model_id").get<std::string>();
      msc.error = optional_from<std::string>(m, "error");
      for (const auto& c : m.at("choices")) {
        msc.choices.push_back({c.at("placeholder").get<std::string>(), optional_from<std::string>(c, "choice"),
                               c.at("in_own_suggestions").get<bool>()});
      }
      r.self_choice.push_back(std::move(msc));
    }
    r.scores = matrix_from(j.at("scores"));
    for (const auto& p : j.at("ranking")) r.ranking.per_placeholder.push_back(placeholder_ranking_from(p));
    for (const auto& x : j.at("rejudge")) {
      RejudgeRecord rec;
      rec.placeholder = x.at("placeholder").get<std::string>();
      rec.round = x.at("round").get<int>();
      rec.tied = x.at("tied").get<std::vector<std::string>>();
      rec.scores = matrix_from(x.at("scores"));
      if (!x.at("ranking").is_null()) rec.ranking = placeholder_ranking_from(x.at("ranking"));
      rec.outcome = x.at("outcome").get<std::string>();
      r.rejudge.push_back(std::move(rec));
    }
    for (const auto& x : j.at("resolutions")) r.resolutions.push_back(resolution_from(x));
    for (const auto& s : j.at("fewshot_steps")) {
      FewshotStep step;
      step.step = s.at("step").get<int>();
      step.target = {s.at("target").get<std::string>(), s.at("arity").get<std::size_t>()};
      for (const auto& a : s.at("answers")) {
        step.answers.push_back({a.at("model_id").get<std::string>(), a.at("raw").get<std::string>(),
                                optional_from<std::string>(a, "normalized"),
                                a.at("extraction").get<std::string>(), optional_from<std::string>(a, "error")});
      }
      step.resolved = optional_from<std::string>(s, "resolved");
      step.substituted = optional_from<std::string>(s, "substituted");
      step.status = s.at("status").get<std::string>();
      step.detail = optional_from<std::string>(s, "detail");
      r.fewshot_steps.push_back(std::move(step));
    }
    r.plan = RenamingPlan::from_json(j.at("plan"));
    for (const auto& c : j.at("collisions")) r.collisions.push_back(collision_from(c));
    for (const auto& c : j.at("collision_warnings")) r.collision_warnings.push_back(collision_from(c));
    r.excluded = RenamingPlan::from_json(json{{"assignments", j.at("excluded")}}).assignments;
    r.forced = j.at("forced").get<bool>();
    r.renamed_program_sha256 = optional_from<std::string>(j, "renamed_program_sha256");
    r.total_ms = optional_from<double>(j.at("timing"), "total_ms");
    for (const auto& a : j.at("anomalies")) r.anomalies.push_back(anomaly_from(a));
    for (const auto& f : j.at("failures")) {
      r.failures.push_back({f.at("placeholder").get<std::string>(), f.at("stage").get<std::string>(),
                            f.at("error").get<std::string>()});
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return r;
}

RunReport parse_report(std::string_view machine_text) {
  json j;
  try {
    j = json::parse(machine_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("report is not valid JSON: ") + e.what());
  }
  return RunReport::from_json(j);
}

}  // namespace predname
