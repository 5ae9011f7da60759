#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "predname/candidates.hpp"
#include "predname/logic_ir.hpp"
#include "predname/placeholders.hpp"

namespace predname {

enum class PromptPurpose { Suggest, Choose, Judge, FewshotStep };

std::string_view to_string(PromptPurpose purpose) noexcept;
std::optional<PromptPurpose> purpose_from_string(std::string_view text) noexcept;

struct RenderedPrompt {
  std::string text;
  PromptPurpose purpose = PromptPurpose::Suggest;
  std::vector<std::string> placeholders_addressed;

  bool operator==(const RenderedPrompt&) const = default;
};

/// Plain text with slot markers: {rules}, {placeholders}, {candidates},
/// {skeleton}, {skeleton:SUFFIX} and {target}. Any other lowercase word in
/// braces is a TemplateError (a misspelt slot); other braces are literal text.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string name, std::string text);

  const std::string& name() const noexcept { return name_; }
  const std::string& text() const noexcept { return text_; }
  std::vector<std::string> slots() const;  // distinct slot names, in order of first use

  /// Throws TemplateError if a referenced slot has no value.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  struct Piece {
    bool is_slot = false;
    std::string text;  // literal text, or slot name
    std::string argument;  // after ':' in {skeleton:ARG}
  };
  std::string name_;
  std::string text_;
  std::vector<Piece> pieces_;
};

/// The four templates: suggest, choose, judge, fewshot.
class TemplateSet {
 public:
  /// Templates compiled into the library.
  static TemplateSet builtin();
  /// Files named <name>.txt in `dir` replace the built-in ones; missing files
  /// fall back. One trailing newline is stripped from each file.
  static TemplateSet from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view name) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

enum class FewshotSlice { Dependencies, FullProgram };

struct PromptOptions {
  const TemplateSet* templates = nullptr;  // builtin when null
  FewshotSlice fewshot_slice = FewshotSlice::Dependencies;
};

/// "h0, h1, and h2"; "G and H"; "P".
std::string english_list(const std::vector<std::string>& names);

/// Canonical clauses, comments stripped, with a blank line between runs of
/// clauses that define different predicates.
std::string render_grouped(const std::vector<Rule>& rules);

RenderedPrompt render_suggest(const LogicProgram& program, const PlaceholderInventory& inventory,
                              const PromptOptions& options = {});
RenderedPrompt render_choose(const LogicProgram& program, const CandidateSet& candidates,
                             const PromptOptions& options = {});
RenderedPrompt render_judge(const LogicProgram& program, const CandidateSet& candidates,
                            const PromptOptions& options = {});

/// The clauses shown for one few-shot step: the target's definition plus the
/// definitions of predicates it calls. A target without clauses of its own is
/// shown through the clauses that use it.
std::vector<Rule> fewshot_slice(const LogicProgram& program, const PredicateSymbol& target);

/// Throws TargetAlreadyNamed when `target` does not occur in the program.
RenderedPrompt render_fewshot_step(const LogicProgram& program_so_far, const PredicateSymbol& target,
                                   const PromptOptions& options = {});

}  // namespace predname
