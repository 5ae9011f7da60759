#include <algorithm>
#include <sstream>

#include "predname/pipeline.hpp"

namespace predname {
namespace {

using Row = std::vector<std::string>;

std::string render_rows(const std::vector<Row>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i > 0) line += "  ";
      line += rows[r][i];
      if (i + 1 < rows[r].size()) line.append(widths[i] - rows[r][i].size(), ' ');
    }
    out << line << '\n';
    if (r == 0) {
      std::string rule;
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i > 0) rule += "  ";
        rule.append(widths[i], '-');
      }
      out << rule << '\n';
    }
  }
  return out.str();
}

const ResolutionRecord* find_resolution(const RunReport& report, const std::string& placeholder) {
  for (const auto& r : report.resolutions) {
    if (r.resolution.placeholder == placeholder) return &r;
  }
  return nullptr;
}

std::string note_for(const RankedCandidate& entry, const ResolutionRecord* resolution) {
  if (!entry.valid) return "invalid";
  if (resolution == nullptr) return "";
  const Resolution& r = resolution->resolution;
  if (r.winner && *r.winner == entry.candidate) return "winner";
  if (std::find(r.tied.begin(), r.tied.end(), entry.candidate) != r.tied.end()) return "tied";
  return "";
}

}  // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
  if (format == ReportFormat::Machine) return report.to_json().dump(2) + "\n";

  const auto& judges = report.scores.judge_ids;
  std::vector<Row> rows;
  Row header{"Placeholder", "Candidate"};
  header.insert(header.end(), judges.begin(), judges.end());
  header.push_back("Score");
  header.push_back("Note");
  rows.push_back(header);

  auto cells = [&](const std::string& placeholder, const std::string& candidate) {
    Row out;
    for (const auto& judge : judges) {
      auto s = report.scores.get(placeholder, candidate, judge);
      out.push_back(s ? s->to_string() : "-");
    }
    return out;
  };

  for (const auto& ranking : report.ranking.per_placeholder) {
    const ResolutionRecord* resolution = find_resolution(report, ranking.placeholder);
    for (const auto& entry : ranking.entries) {
      Row row{ranking.placeholder, entry.candidate};
      auto scores = cells(ranking.placeholder, entry.candidate);
      row.insert(row.end(), scores.begin(), scores.end());
      row.push_back(entry.aggregate.to_fixed(3));
      row.push_back(note_for(entry, resolution));
      rows.push_back(std::move(row));
    }
    // Candidates that no judge scored trail the ranked ones.
    if (const auto* scored = report.scores.find(ranking.placeholder)) {
      for (const auto& c : scored->candidates) {
        bool ranked = std::any_of(ranking.entries.begin(), ranking.entries.end(),
                                  [&](const RankedCandidate& e) { return e.candidate == c.candidate; });
        if (ranked) continue;
        Row row{ranking.placeholder, c.candidate};
        auto scores = cells(ranking.placeholder, c.candidate);
        row.insert(row.end(), scores.begin(), scores.end());
        row.push_back("-");
        row.push_back("unscored");
        rows.push_back(std::move(row));
      }
    }
  }
  return render_rows(rows);
}

}  // namespace predname
