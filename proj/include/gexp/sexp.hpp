#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gexp {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct Symbol {
  std::string name;
  bool operator==(const Symbol&) const = default;
};

struct String {
  std::string text;
  bool operator==(const String&) const = default;
};

struct Keyword {
  std::string name;
  bool operator==(const Keyword&) const = default;
};

class Sexp;
using SexpList = std::vector<Sexp>;

// Immutable symbolic expression. Lists share their children, so copies are
// cheap and values can be handed across threads freely.
class Sexp {
 public:
  Sexp();  // the empty list
  Sexp(Symbol s);
  Sexp(String s);
  Sexp(Keyword k);
  Sexp(std::int64_t i);
  Sexp(int i) : Sexp(static_cast<std::int64_t>(i)) {}
  Sexp(bool b);
  Sexp(SexpList items);

  static Sexp symbol(std::string name) { return Sexp(Symbol{std::move(name)}); }
  static Sexp string(std::string text) { return Sexp(String{std::move(text)}); }
  static Sexp keyword(std::string name) { return Sexp(Keyword{std::move(name)}); }
  static Sexp list(SexpList items) { return Sexp(std::move(items)); }

  bool is_symbol() const { return std::holds_alternative<Symbol>(value_); }
  bool is_string() const { return std::holds_alternative<String>(value_); }
  bool is_keyword() const { return std::holds_alternative<Keyword>(value_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(value_); }
  bool is_boolean() const { return std::holds_alternative<bool>(value_); }
  bool is_list() const { return std::holds_alternative<ListRep>(value_); }
  bool is_atom() const { return !is_list(); }

  // True for a symbol with exactly this name.
  bool is_symbol(std::string_view name) const;
  // True for a non-empty list whose head is the symbol `name`.
  bool is_form(std::string_view name) const;

  const std::string& symbol_name() const;
  const std::string& string_text() const;
  const std::string& keyword_name() const;
  std::int64_t integer() const;
  bool boolean() const;
  std::span<const Sexp> items() const;
  std::size_t size() const { return items().size(); }
  const Sexp& operator[](std::size_t i) const { return items()[i]; }

  friend bool operator==(const Sexp& a, const Sexp& b);

 private:
  using ListRep = std::shared_ptr<const SexpList>;
  std::variant<Symbol, String, Keyword, std::int64_t, bool, ListRep> value_;
};

// Parses exactly one datum; trailing whitespace and comments are allowed.
Sexp read(std::string_view text);
// Parses every datum in `text`, in order.
std::vector<Sexp> read_all(std::string_view text);

std::string print_canonical(const Sexp& s);

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  bool operator==(const Digest&) const = default;
};

Digest sha256(std::string_view data);
Digest hash_sexp(const Sexp& s);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace gexp
