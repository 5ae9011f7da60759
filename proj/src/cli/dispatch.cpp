#include <iostream>

#include <CLI11.hpp>

#include "predname/cli.hpp"
#include "predname/errors.hpp"

namespace predname::cli {
namespace {

struct Options {
  std::string file;
  std::string config;
  std::string replay;
  std::string record;
  std::optional<int> k;
  std::string tie_policy;
  std::string format = "machine";
  std::string comments;
  std::string plan;
  std::string plan_out;
  std::string report;
  std::string output;
  std::string variant;
  std::string corpus_dir;
  std::string scores;
  bool in_place = false;
  bool force = false;
  bool merge = false;
};

ReportFormat format_of(const Options& o) {
  auto f = report_format_from_string(o.format);
  if (!f) throw CLI::ValidationError("--format", "must be machine or table");
  return *f;
}

ConfigOverrides overrides_of(const Options& o) {
  ConfigOverrides ov;
  ov.k = o.k;
  if (!o.tie_policy.empty()) ov.tie_policy = tie_policy_from_string(o.tie_policy);
  if (!o.replay.empty()) ov.replay = o.replay;
  if (!o.record.empty()) ov.record = o.record;
  if (o.force) ov.force = true;
  return ov;
}

LogicProgram load_program(const std::string& path) { return parse_program(read_file(path)); }

std::string program_text(const LogicProgram& program) {
  return render_program(program, RenderMode::Faithful) + "\n";
}

void write_outputs(const RunResult& result, const Options& o, std::ostream& out) {
  if (!o.report.empty()) write_file(o.report, emit_report(result.report, ReportFormat::Machine));
  if (!o.plan_out.empty()) write_file(o.plan_out, result.plan.to_json().dump(2) + "\n");
  if (result.renamed) {
    if (o.in_place) write_file(o.file, program_text(*result.renamed));
    if (!o.output.empty()) write_file(o.output, program_text(*result.renamed));
  }
  out << emit_report(result.report, format_of(o));
}

int cmd_detect(const Options& o, std::ostream& out) {
  const auto inventory = detect(load_program(o.file));
  if (format_of(o) == ReportFormat::Machine) {
    RunReport report;
    report.inventory = inventory;
    out << report.to_json()["inventory"].dump(2) << "\n";
    return 0;
  }
  for (const auto& e : inventory.entries) {
    auto sites = [](const std::vector<std::size_t>& v) {
      std::string s;
      for (std::size_t i : v) s += (s.empty() ? "" : ",") + std::to_string(i + 1);
      return s.empty() ? std::string("-") : s;
    };
    out << e.symbol.to_string() << "  " << to_string(e.occurrence) << "  defined: " << sites(e.def_sites)
        << "  used: " << sites(e.use_sites) << "\n";
  }
  return 0;
}

int cmd_stage(const Options& o, RunStage stage, std::ostream& out) {
  const auto config = load_config(o.config, overrides_of(o));
  auto gateway = make_gateway(config);
  const auto program = load_program(o.file);
  write_outputs(run(program, config.run, *gateway, stage), o, out);
  return 0;
}

int cmd_fewshot(const Options& o, std::ostream& out) {
  const auto config = load_config(o.config, overrides_of(o));
  auto gateway = make_gateway(config);
  write_outputs(run_fewshot(load_program(o.file), config.run, *gateway), o, out);
  return 0;
}

int cmd_rewrite(const Options& o, std::ostream& out) {
  const auto program = load_program(o.file);
  const auto plan = RenamingPlan::from_json(nlohmann::json::parse(read_file(o.plan)), &program);
  ApplyOptions options;
  options.force = o.force;
  if (!o.comments.empty()) {
    auto policy = comment_policy_from_string(o.comments);
    if (!policy) throw CLI::ValidationError("--comments", "must be keep, update or drop");
    options.comments = *policy;
  }
  const auto renamed = apply(program, plan, options);
  if (o.in_place) {
    write_file(o.file, program_text(renamed));
  } else if (!o.output.empty()) {
    write_file(o.output, program_text(renamed));
  } else {
    out << program_text(renamed);
  }
  return 0;
}

int cmd_corpus(const Options& o, std::ostream& out) {
  if (o.file.empty()) {
    for (const auto& name : corpus_names()) out << name << "\n";
    return 0;
  }
  const auto dir = o.corpus_dir.empty() ? default_corpus_dir() : std::filesystem::path(o.corpus_dir);
  const auto entry = corpus_entry(o.file, dir, o.variant);
  auto ov = overrides_of(o);
  if (ov.replay) ov.replay = entry.fixtures;  // --replay takes no directory here
  const auto config = load_config(entry.config, ov);
  auto gateway = make_gateway(config);
  const auto program = load_program(entry.program.string());
  Options quiet = o;
  quiet.in_place = false;
  const auto result = config.run.mode == RunMode::FewShot ? run_fewshot(program, config.run, *gateway)
                                                          : run(program, config.run, *gateway);
  write_outputs(result, quiet, out);
  return 0;
}

int cmd_import_scores(const Options& o, std::ostream& out) {
  RunReport report = parse_report(read_file(o.report));
  ScoreMatrix imported = import_external_scores(read_file(o.scores), report.candidates);
  if (o.merge) {
    report.scores.merge(imported);
  } else {
    report.scores = std::move(imported);
    report.judges = report.scores.judge_ids;
  }
  TiePolicy policy = TiePolicy::Defer;
  if (!o.tie_policy.empty()) policy = *tie_policy_from_string(o.tie_policy);
  if (policy == TiePolicy::Rejudge) policy = TiePolicy::Defer;  // no models to ask
  report.tie_policy = std::string(to_string(policy));
  report.ranking = {};
  report.resolutions.clear();
  report.rejudge.clear();
  report.failures.clear();
  report.notes.push_back("scores imported from " + std::filesystem::path(o.scores).filename().string());
  for (const auto& row : report.scores.per_placeholder) {
    try {
      auto ranking = aggregate_placeholder(row, &report.candidates, &report.anomalies);
      report.resolutions.push_back({rank_and_resolve(ranking, policy), report.tie_policy, false});
      report.ranking.per_placeholder.push_back(std::move(ranking));
    } catch (const Error& e) {
      report.failures.push_back({row.placeholder, "rank", e.what()});
    }
  }
  if (!o.output.empty()) write_file(o.output, emit_report(report, ReportFormat::Machine));
  out << emit_report(report, format_of(o));
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Names invented predicates in logic programs", "predname"};
  app.require_subcommand(1);
  Options o;

  auto tie_check = CLI::IsMember({"rejudge", "defer", "lex"});
  auto format_check = CLI::IsMember({"machine", "table"});
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("file", o.file, "Program file")->required();
    cmd->add_option("--config", o.config, "YAML run configuration")->required();
    cmd->add_option("--replay", o.replay, "Answer from recorded fixtures (file or directory)");
    cmd->add_option("--record", o.record, "Call the models and record fixtures (file or directory)");
    cmd->add_option("--k", o.k, "Suggestion rounds per model")->check(CLI::PositiveNumber);
    cmd->add_option("--tie-policy", o.tie_policy, "rejudge, defer or lex")->check(tie_check);
    cmd->add_option("--format", o.format, "machine or table")->check(format_check);
    cmd->add_option("--report", o.report, "Also write the machine report here");
    cmd->add_option("--plan-out", o.plan_out, "Write the renaming plan here");
    cmd->add_option("--output", o.output, "Write the renamed program here");
    cmd->add_flag("--in-place", o.in_place, "Overwrite the program file with the renamed program");
    cmd->add_flag("--force", o.force, "Keep assignments that collide with existing predicates");
  };

  auto* detect_cmd = app.add_subcommand("detect", "List the placeholder predicates of a program");
  detect_cmd->add_option("file", o.file, "Program file")->required();
  detect_cmd->add_option("--format", o.format, "machine or table")->check(format_check);

  struct StageCommand {
    const char* name;
    const char* help;
    RunStage stage;
  };
  const StageCommand stages[] = {
      {"suggest", "Collect name suggestions", RunStage::Suggest},
      {"choose", "Collect suggestions and each model's own choice", RunStage::Choose},
      {"judge", "Collect suggestions and judge scores", RunStage::Judge},
      {"rank", "Score, aggregate and resolve ties without rewriting", RunStage::Rank},
      {"run", "Full pipeline including the rewrite", RunStage::Full},
  };
  std::vector<std::pair<CLI::App*, RunStage>> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_run_flags(cmd);
    stage_cmds.emplace_back(cmd, s.stage);
  }

  auto* fewshot_cmd = app.add_subcommand("run-fewshot", "Name placeholders one at a time");
  add_run_flags(fewshot_cmd);

  auto* rewrite_cmd = app.add_subcommand("rewrite", "Apply a renaming plan");
  rewrite_cmd->add_option("file", o.file, "Program file")->required();
  rewrite_cmd->add_option("--plan", o.plan, "Plan JSON")->required();
  rewrite_cmd->add_option("--comments", o.comments, "keep, update or drop")
      ->check(CLI::IsMember({"keep", "update", "drop"}));
  rewrite_cmd->add_option("--output", o.output, "Write the renamed program here");
  rewrite_cmd->add_flag("--in-place", o.in_place, "Overwrite the program file");
  rewrite_cmd->add_flag("--force", o.force, "Rename despite collisions");

  auto* corpus_cmd = app.add_subcommand("corpus", "Run a bundled case study, or list them");
  corpus_cmd->add_option("name", o.file, "Corpus name");
  corpus_cmd->add_flag("--replay", [&](std::int64_t) { o.replay = "corpus"; }, "Use the recorded fixtures");
  corpus_cmd->add_option("--record", o.record, "Call the models and record fixtures here");
  corpus_cmd->add_option("--variant", o.variant, "Use config-<variant>.yaml");
  corpus_cmd->add_option("--corpus-dir", o.corpus_dir, "Corpus root directory");
  corpus_cmd->add_option("--k", o.k, "Suggestion rounds per model")->check(CLI::PositiveNumber);
  corpus_cmd->add_option("--tie-policy", o.tie_policy, "rejudge, defer or lex")->check(tie_check);
  corpus_cmd->add_option("--format", o.format, "machine or table")->check(format_check);
  corpus_cmd->add_option("--report", o.report, "Also write the machine report here");
  corpus_cmd->add_option("--plan-out", o.plan_out, "Write the renaming plan here");
  corpus_cmd->add_option("--output", o.output, "Write the renamed program here");
  corpus_cmd->add_flag("--force", o.force, "Keep assignments that collide with existing predicates");

  auto* import_cmd = app.add_subcommand("import-scores", "Re-rank a report with externally collected scores");
  import_cmd->add_option("scores", o.scores, "CSV: placeholder,candidate,judge_id,score")->required();
  import_cmd->add_option("--report", o.report, "Machine report holding the candidates")->required();
  import_cmd->add_flag("--merge", o.merge, "Add the imported judges to the existing scores");
  import_cmd->add_option("--tie-policy", o.tie_policy, "defer or lex")->check(tie_check);
  import_cmd->add_option("--format", o.format, "machine or table")->check(format_check);
  import_cmd->add_option("--output", o.output, "Write the re-ranked machine report here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (detect_cmd->parsed()) return cmd_detect(o, out);
    for (const auto& [cmd, stage] : stage_cmds) {
      if (cmd->parsed()) return cmd_stage(o, stage, out);
    }
    if (fewshot_cmd->parsed()) return cmd_fewshot(o, out);
    if (rewrite_cmd->parsed()) return cmd_rewrite(o, out);
    if (corpus_cmd->parsed()) return cmd_corpus(o, out);
    if (import_cmd->parsed()) return cmd_import_scores(o, out);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  } catch (const Error& e) {
    err << "predname: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "predname: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace predname::cli
