#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "predname/logic_ir.hpp"

namespace predname::detail {

struct Token {
  enum class Kind {
    Name,      // lowercase identifier: atom, functor or alphabetic operator
    Variable,  // uppercase or underscore identifier
    Number,
    Quoted,    // 'quoted atom', text unescaped
    Punct,     // ( ) [ ] , |
    Symbol,    // operator symbols, ! and ;
    End,       // clause-terminating '.'
    Eof,
  };

  Kind kind = Kind::Eof;
  std::string text;
  int line = 1;
  int column = 1;
  bool functional = false;  // immediately followed by '(' (functor position)

  bool is(Kind k, std::string_view t) const { return kind == k && text == t; }
  bool is_punct(std::string_view t) const { return is(Kind::Punct, t); }
  bool is_symbol(std::string_view t) const { return is(Kind::Symbol, t); }
  bool is_name(std::string_view t) const { return is(Kind::Name, t); }
};

struct LexResult {
  std::vector<Token> tokens;  // always ends with Eof
  std::vector<Comment> comments;
};

LexResult lex(std::string_view text);

}  // namespace predname::detail
