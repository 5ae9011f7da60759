#include "logic_ir/lexer.hpp"

#include <array>
#include <cctype>

#include "predname/errors.hpp"

namespace predname::detail {
namespace {

// Longest first, so a prefix never shadows a longer operator.
constexpr std::array<std::string_view, 28> kSymbols = {
    "\\==", "=:=", "=\\=", "@>=", "@=<", ":-", "->", "\\+", "\\=", "==", "=<", ">=", "<=", "@>",
    "@<",   "//",  "**",  ">",   "<",   "=",  "+",  "-",   "*",   "/",  "!",  ";",  "^",  "@"};

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  LexResult run() {
    LexResult out;
    while (true) {
      skip_layout(out.comments);
      if (at_end()) break;
      out.tokens.push_back(next_token());
    }
    Token eof;
    eof.kind = Token::Kind::Eof;
    eof.line = line_;
    eof.column = column_;
    out.tokens.push_back(eof);
    return out;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_layout(std::vector<Comment>& comments) {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '%' || c == '#') {
        Comment comment{line_, {}};
        while (!at_end() && peek() != '\n') {
          comment.text.push_back(peek());
          advance();
        }
        while (!comment.text.empty() &&
               std::isspace(static_cast<unsigned char>(comment.text.back()))) {
          comment.text.pop_back();
        }
        comments.push_back(std::move(comment));
      } else if (c == '/' && peek(1) == '*') {
        int start_line = line_;
        int start_col = column_;
        Comment comment{line_, {}};
        while (!at_end() && !(peek() == '*' && peek(1) == '/')) {
          comment.text.push_back(peek());
          advance();
        }
        if (at_end()) throw SyntaxError(start_line, start_col, "/*", "unterminated block comment");
        advance();
        advance();
        comment.text += "*/";
        comments.push_back(std::move(comment));
      } else {
        break;
      }
    }
  }

  Token make(Token::Kind kind, std::string text, int line, int col) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line;
    t.column = col;
    t.functional = peek() == '(';
    return t;
  }

  Token next_token() {
    const int line = line_;
    const int col = column_;
    const char c = peek();

    if (std::isdigit(static_cast<unsigned char>(c))) return number(line, col);

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (!at_end() && is_alnum(peek())) {
        word.push_back(peek());
        advance();
      }
      const bool upper = std::isupper(static_cast<unsigned char>(word.front())) || word.front() == '_';
      return make(upper ? Token::Kind::Variable : Token::Kind::Name, std::move(word), line, col);
    }

    if (c == '\'') return quoted(line, col);

    if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',' || c == '|') {
      advance();
      return make(Token::Kind::Punct, std::string(1, c), line, col);
    }

    if (c == '.') {
      char next = peek(1);
      if (next == '\0' || std::isspace(static_cast<unsigned char>(next)) || next == '%' ||
          next == '#') {
        advance();
        return make(Token::Kind::End, ".", line, col);
      }
      throw SyntaxError(line, col, std::string(1, c), "unexpected '.' inside a clause");
    }

    for (std::string_view sym : kSymbols) {
      if (text_.substr(pos_, sym.size()) == sym) {
        for (std::size_t i = 0; i < sym.size(); ++i) advance();
        return make(Token::Kind::Symbol, std::string(sym), line, col);
      }
    }

    throw SyntaxError(line, col, std::string(1, c), "unexpected character");
  }

  Token number(int line, int col) {
    std::string digits;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      digits.push_back(peek());
      advance();
    }
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      digits.push_back('.');
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits.push_back(peek());
        advance();
      }
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek(1))) ||
         ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
      digits.push_back(peek());
      advance();
      if (peek() == '+' || peek() == '-') {
        digits.push_back(peek());
        advance();
      }
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits.push_back(peek());
        advance();
      }
    }
    return make(Token::Kind::Number, std::move(digits), line, col);
  }

  Token quoted(int line, int col) {
    advance();  // opening quote
    std::string value;
    while (true) {
      if (at_end()) throw SyntaxError(line, col, "'", "unterminated quoted atom");
      char c = peek();
      if (c == '\'') {
        if (peek(1) == '\'') {
          value.push_back('\'');
          advance();
          advance();
          continue;
        }
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (at_end()) throw SyntaxError(line, col, "'", "unterminated quoted atom");
        char e = peek();
        switch (e) {
          case 'n': value.push_back('\n'); break;
          case 't': value.push_back('\t'); break;
          default: value.push_back(e); break;
        }
        advance();
        continue;
      }
      if (c == '\n') throw SyntaxError(line, col, "'", "newline inside quoted atom");
      value.push_back(c);
      advance();
    }
    return make(Token::Kind::Quoted, std::move(value), line, col);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

}  // namespace

LexResult lex(std::string_view text) { return Lexer(text).run(); }

}  // namespace predname::detail
