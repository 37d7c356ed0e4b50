#include "gexp/module_name.hpp"
#include "gexp/object.hpp"

namespace gexp {

SystemTag::SystemTag(std::string text) : text_(std::move(text)) {
  const auto dash = text_.find('-');
  if (text_.empty() || dash == std::string::npos || dash == 0 || dash + 1 == text_.size())
    throw Error("invalid system type '" + text_ + "': expected <cpu>-<kernel>");
}

ModuleName::ModuleName(std::vector<std::string> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error("empty module name");
  for (const auto& p : parts_) {
    if (p.empty() || p == "." || p == ".." || p.find('/') != std::string::npos)
      throw Error("invalid module name component '" + p + "'");
  }
}

ModuleName ModuleName::from_sexp(const Sexp& s) {
  if (!s.is_list() || s.size() == 0) throw Error("invalid module name: " + print_canonical(s));
  std::vector<std::string> parts;
  for (const Sexp& item : s.items()) {
    if (!item.is_symbol()) throw Error("invalid module name: " + print_canonical(s));
    parts.push_back(item.symbol_name());
  }
  return ModuleName(std::move(parts));
}

Sexp ModuleName::to_sexp() const {
  SexpList items;
  for (const auto& p : parts_) items.push_back(Sexp::symbol(p));
  return Sexp(std::move(items));
}

std::string ModuleName::relative_path() const {
  std::string out;
  for (const auto& p : parts_) {
    if (!out.empty()) out += '/';
    out += p;
  }
  return out + ".scm";
}

}  // namespace gexp
