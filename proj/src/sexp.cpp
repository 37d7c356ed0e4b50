#include "gexp/sexp.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstring>

namespace gexp {

ParseError::ParseError(const std::string& what, int line, int column)
    : Error(what + " at line " + std::to_string(line) + ", column " +
            std::to_string(column)),
      line_(line),
      column_(column) {}

Sexp::Sexp() : value_(std::make_shared<const SexpList>()) {}
Sexp::Sexp(Symbol s) : value_(std::move(s)) {
  if (std::get<Symbol>(value_).name.empty()) throw Error("empty symbol name");
}
Sexp::Sexp(String s) : value_(std::move(s)) {}
Sexp::Sexp(Keyword k) : value_(std::move(k)) {}
Sexp::Sexp(std::int64_t i) : value_(i) {}
Sexp::Sexp(bool b) : value_(b) {}
Sexp::Sexp(SexpList items)
    : value_(std::make_shared<const SexpList>(std::move(items))) {}

bool Sexp::is_symbol(std::string_view name) const {
  auto* s = std::get_if<Symbol>(&value_);
  return s != nullptr && s->name == name;
}

bool Sexp::is_form(std::string_view name) const {
  if (!is_list()) return false;
  auto xs = items();
  return !xs.empty() && xs[0].is_symbol(name);
}

const std::string& Sexp::symbol_name() const {
  if (auto* s = std::get_if<Symbol>(&value_)) return s->name;
  throw Error("not a symbol: " + print_canonical(*this));
}

const std::string& Sexp::string_text() const {
  if (auto* s = std::get_if<String>(&value_)) return s->text;
  throw Error("not a string: " + print_canonical(*this));
}

const std::string& Sexp::keyword_name() const {
  if (auto* k = std::get_if<Keyword>(&value_)) return k->name;
  throw Error("not a keyword: " + print_canonical(*this));
}

std::int64_t Sexp::integer() const {
  if (auto* i = std::get_if<std::int64_t>(&value_)) return *i;
  throw Error("not an integer: " + print_canonical(*this));
}

bool Sexp::boolean() const {
  if (auto* b = std::get_if<bool>(&value_)) return *b;
  throw Error("not a boolean: " + print_canonical(*this));
}

std::span<const Sexp> Sexp::items() const {
  if (auto* l = std::get_if<ListRep>(&value_)) return {(*l)->data(), (*l)->size()};
  throw Error("not a list: " + print_canonical(*this));
}

bool operator==(const Sexp& a, const Sexp& b) {
  if (a.value_.index() != b.value_.index()) return false;
  if (a.is_list()) {
    auto& la = *std::get<Sexp::ListRep>(a.value_);
    auto& lb = *std::get<Sexp::ListRep>(b.value_);
    return &la == &lb || la == lb;
  }
  return a.value_ == b.value_;
}

namespace {

bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '"' || c == ';' || c == '\'' || c == '`' ||
         c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_atmosphere();
    return pos_ >= text_.size();
  }

  void expect_end() {
    if (!at_end()) fail("trailing data after datum");
  }

  Sexp datum() {
    skip_atmosphere();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const int line = line_, col = col_;
    char c = peek();
    switch (c) {
      case '(': {
        advance();
        SexpList items;
        for (;;) {
          skip_atmosphere();
          if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses", line, col);
          if (peek() == ')') {
            advance();
            return Sexp(std::move(items));
          }
          items.push_back(datum());
        }
      }
      case ')':
        fail("unbalanced parentheses");
      case '"':
        return string_literal();
      case '\'':
        advance();
        return wrap("quote");
      case '`':
        advance();
        return wrap("quasiquote");
      case ',':
        advance();
        if (pos_ < text_.size() && peek() == '@') {
          advance();
          return wrap("unquote-splicing");
        }
        return wrap("unquote");
      case '#':
        return hash_form();
      default:
        return atom();
    }
  }

 private:
  char peek() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, col_);
  }

  void skip_atmosphere() {
    while (pos_ < text_.size()) {
      char c = peek();
      if (c == ';') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
        advance();
      } else {
        break;
      }
    }
  }

  Sexp wrap(const char* head) { return Sexp({Sexp::symbol(head), datum()}); }

  Sexp hash_form() {
    const int line = line_, col = col_;
    advance();
    if (pos_ >= text_.size()) throw ParseError("stray '#'", line, col);
    char c = peek();
    if (c == '~') {
      advance();
      return wrap("gexp");
    }
    if (c == '$' || c == '+') {
      advance();
      bool splice = pos_ < text_.size() && peek() == '@';
      if (splice) advance();
      if (c == '$') return wrap(splice ? "ungexp-splicing" : "ungexp");
      return wrap(splice ? "ungexp-native-splicing" : "ungexp-native");
    }
    if (c == ':') {
      advance();
      std::string name = token();
      if (name.empty()) throw ParseError("empty keyword", line, col);
      return Sexp::keyword(std::move(name));
    }
    std::string tok = token();
    if (tok == "t" || tok == "true") return Sexp(true);
    if (tok == "f" || tok == "false") return Sexp(false);
    throw ParseError("stray '#" + tok + "'", line, col);
  }

  std::string token() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delimiter(peek())) advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  Sexp atom() {
    const int line = line_, col = col_;
    std::string tok = token();
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    std::size_t digits_at = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
    if (tok.size() > digits_at &&
        tok.find_first_not_of("0123456789", digits_at) == std::string::npos) {
      std::int64_t value = 0;
      if (tok[0] == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last)
        throw ParseError("integer out of range: " + tok, line, col);
      return Sexp(value);
    }
    return Sexp::symbol(std::move(tok));
  }

  Sexp string_literal() {
    const int line = line_, col = col_;
    advance();
    std::string out;
    for (;;) {
      if (pos_ >= text_.size()) throw ParseError("unterminated string", line, col);
      char c = peek();
      advance();
      if (c == '"') return Sexp::string(std::move(out));
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size()) throw ParseError("unterminated string", line, col);
      char e = peek();
      advance();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '\\': out += '\\'; break;
        case '"': out += '"'; break;
        default: fail(std::string("unknown string escape \\") + e);
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

void print_to(std::string& out, const Sexp& s) {
  if (s.is_symbol()) {
    out += s.symbol_name();
  } else if (s.is_string()) {
    out += '"';
    for (char c : s.string_text()) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  } else if (s.is_keyword()) {
    out += "#:";
    out += s.keyword_name();
  } else if (s.is_integer()) {
    out += std::to_string(s.integer());
  } else if (s.is_boolean()) {
    out += s.boolean() ? "#t" : "#f";
  } else {
    out += '(';
    bool first = true;
    for (const Sexp& item : s.items()) {
      if (!first) out += ' ';
      first = false;
      print_to(out, item);
    }
    out += ')';
  }
}

}  // namespace

Sexp read(std::string_view text) {
  Reader reader(text);
  Sexp result = reader.datum();
  reader.expect_end();
  return result;
}

std::vector<Sexp> read_all(std::string_view text) {
  Reader reader(text);
  std::vector<Sexp> out;
  while (!reader.at_end()) out.push_back(reader.datum());
  return out;
}

std::string print_canonical(const Sexp& s) {
  std::string out;
  print_to(out, s);
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

std::string Digest::hex() const { return to_hex(bytes); }

Digest sha256(std::string_view data) {
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != d.bytes.size())
    throw Error("SHA-256 computation failed");
  return d;
}

Digest hash_sexp(const Sexp& s) { return sha256(print_canonical(s)); }

}  // namespace gexp
