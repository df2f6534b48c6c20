#include <cctype>

#include "querc/text_pipeline.hpp"

namespace querc {

namespace {

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }
bool is_space(unsigned char c) { return std::isspace(c) != 0; }

bool is_punct(unsigned char c) {
  switch (c) {
    case '(': case ')': case ',': case ';': case '.': case '=': case '<': case '>':
    case '!': case '+': case '-': case '*': case '/': case '%': case '|': case '&':
    case ':': case '^': case '~': case '[': case ']': case '{': case '}': case '?':
      return true;
    default:
      return false;
  }
}

constexpr std::string_view kTwoCharOps[] = {"<=", ">=", "<>", "!=", "||", "::", "==", "->"};

class Lexer {
 public:
  Lexer(std::string_view s, const TokenizerOptions& opt) : s_(s), opt_(opt) {}

  TokenSequence run() {
    TokenSequence out;
    while (pos_ < s_.size()) {
      const auto c = static_cast<unsigned char>(s_[pos_]);
      if (is_space(c)) {
        ++pos_;
      } else if (starts_with("--")) {
        skip_line_comment();
      } else if (starts_with("/*")) {
        skip_block_comment();
      } else if (c == '\'') {
        emit(out, quoted_literal());
      } else if (c == '"' || c == '`') {
        emit(out, quoted_identifier(static_cast<char>(c)));
      } else if (std::isdigit(c) || (c == '.' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
        emit(out, number());
      } else if (is_word_start(c)) {
        emit(out, word());
      } else if (is_punct(c)) {
        emit(out, punct());
      } else {
        emit(out, opaque());
      }
    }
    return out;
  }

 private:
  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void emit(TokenSequence& out, std::string tok) {
    if (tok.empty()) return;
    ++out.source_length;
    if (out.tokens.size() < opt_.max_sequence_length) out.tokens.push_back(std::move(tok));
  }

  void skip_line_comment() {
    while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }

  void skip_block_comment() {
    const auto end = s_.find("*/", pos_ + 2);
    pos_ = end == std::string_view::npos ? s_.size() : end + 2;
  }

  // '...' with '' as an escaped quote; an unterminated literal runs to the end.
  std::string quoted_literal() {
    const std::size_t start = pos_++;
    while (pos_ < s_.size()) {
      if (s_[pos_] == '\'') {
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
          pos_ += 2;
          continue;
        }
        ++pos_;
        break;
      }
      ++pos_;
    }
    if (opt_.normalize_literals) return std::string(kStringToken);
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string quoted_identifier(char quote) {
    ++pos_;
    std::string ident;
    while (pos_ < s_.size()) {
      if (s_[pos_] == quote) {
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == quote) {
          ident.push_back(quote);
          pos_ += 2;
          continue;
        }
        ++pos_;
        break;
      }
      ident.push_back(s_[pos_++]);
    }
    return ident;
  }

  std::string number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        digits();
      }
    }
    // 12abc is an identifier-ish blob in some dialects; keep it together.
    if (pos_ < s_.size() && is_word_char(static_cast<unsigned char>(s_[pos_]))) {
      while (pos_ < s_.size() && is_word_char(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return lower(s_.substr(start, pos_ - start));
    }
    if (opt_.normalize_literals) return std::string(kNumberToken);
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string word() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_word_char(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return lower(s_.substr(start, pos_ - start));
  }

  std::string punct() {
    for (auto op : kTwoCharOps) {
      if (starts_with(op)) {
        pos_ += op.size();
        return std::string(op);
      }
    }
    return std::string(1, s_[pos_++]);
  }

  std::string opaque() {
    const std::size_t start = pos_;
    while (pos_ < s_.size()) {
      const auto c = static_cast<unsigned char>(s_[pos_]);
      if (is_space(c) || is_word_start(c) || std::isdigit(c) || is_punct(c) || c == '\'' || c == '"' || c == '`') break;
      ++pos_;
    }
    if (pos_ == start) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  static std::string lower(std::string_view w) {
    std::string out(w);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
  }

  std::string_view s_;
  const TokenizerOptions& opt_;
  std::size_t pos_ = 0;
};

}  // namespace

TokenSequence tokenize(std::string_view query_text, const TokenizerOptions& options) {
  return Lexer(query_text, options).run();
}

}  // namespace querc
