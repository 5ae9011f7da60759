#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace predname {

/// Base of every domain error raised by the library. The CLI maps these to
/// exit status 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// logic-ir

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, std::string token, const std::string& detail)
      : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + " near '" +
              token + "': " + detail),
        line_(line),
        column_(column),
        token_(std::move(token)) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& token() const noexcept { return token_; }

 private:
  int line_;
  int column_;
  std::string token_;
};

class UnterminatedClause : public Error {
 public:
  UnterminatedClause(int line, int column)
      : Error("unterminated clause starting at " + std::to_string(line) + ":" +
              std::to_string(column) + " (missing '.')"),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// placeholders

class ArityConflict : public Error {
 public:
  ArityConflict(const std::string& name, std::size_t first, std::size_t second)
      : Error("placeholder '" + name + "' is used with arity " + std::to_string(first) + " and " +
              std::to_string(second)),
        name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// prompts

class EmptyInventory : public Error {
 public:
  EmptyInventory() : Error("no placeholders to address") {}
};

class EmptyCandidates : public Error {
 public:
  explicit EmptyCandidates(const std::string& placeholder)
      : Error("no candidates for placeholder '" + placeholder + "'"), placeholder_(placeholder) {}
  const std::string& placeholder() const noexcept { return placeholder_; }

 private:
  std::string placeholder_;
};

class TargetAlreadyNamed : public Error {
 public:
  explicit TargetAlreadyNamed(const std::string& target)
      : Error("predicate '" + target + "' no longer occurs unnamed in the program") {}
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// llm-gateway

class TransportError : public Error {
 public:
  using Error::Error;
};

class AuthMissing : public Error {
 public:
  explicit AuthMissing(const std::string& variable)
      : Error("environment variable " + variable + " is not set"), variable_(variable) {}
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

class ReplayMiss : public Error {
 public:
  ReplayMiss(const std::string& model_id, int round_index, const std::string& digest)
      : Error("no recorded exchange for model '" + model_id + "' round " +
              std::to_string(round_index) + " (digest " + digest + ")"),
        model_id_(model_id),
        round_index_(round_index) {}
  const std::string& model_id() const noexcept { return model_id_; }
  int round_index() const noexcept { return round_index_; }

 private:
  std::string model_id_;
  int round_index_;
};

class FixtureError : public Error {
 public:
  using Error::Error;
};

// candidates

class UnnormalizableName : public Error {
 public:
  explicit UnnormalizableName(const std::string& raw)
      : Error("'" + raw + "' cannot be reduced to a single identifier") {}
};

// judging

class JudgeFormatError : public Error {
 public:
  explicit JudgeFormatError(const std::string& judge_id)
      : Error("no name/score pairs found in the response of judge '" + judge_id + "'") {}
};

class NoScores : public Error {
 public:
  explicit NoScores(const std::string& placeholder)
      : Error("no scores recorded for '" + placeholder + "'") {}
};

class AllInvalid : public Error {
 public:
  explicit AllInvalid(const std::string& placeholder)
      : Error("every candidate for '" + placeholder + "' is syntactically invalid") {}
};

class UnknownCandidate : public Error {
 public:
  UnknownCandidate(std::size_t row, const std::string& detail)
      : Error("row " + std::to_string(row) + ": unknown candidate " + detail), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class OffRubricScore : public Error {
 public:
  OffRubricScore(std::size_t row, const std::string& value)
      : Error("row " + std::to_string(row) + ": score '" + value + "' is not 0, 0.5 or 1"),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ScoreFileError : public Error {
 public:
  using Error::Error;
};

// rewriter

class CollisionError : public Error {
 public:
  using Error::Error;
};

class InvalidName : public Error {
 public:
  InvalidName(const std::string& name, const std::string& reason)
      : Error("'" + name + "' is not a valid predicate name: " + reason) {}
};

// pipeline / cli

class StepFailure : public Error {
 public:
  StepFailure(const std::string& placeholder, const std::string& detail)
      : Error("few-shot step for '" + placeholder + "' failed: " + detail) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field_path, const std::string& detail)
      : Error("config " + field_path + ": " + detail), field_path_(field_path) {}
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace predname
