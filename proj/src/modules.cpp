#include "gexp/modules.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gexp {

namespace fs = std::filesystem;

namespace {

std::string join_path(const std::vector<fs::path>& dirs) {
  std::string out;
  for (const auto& d : dirs) {
    if (!out.empty()) out += ':';
    out += d.string();
  }
  return out.empty() ? "(empty)" : out;
}

// `(a b)` or `((a b) #:select (…))`.
ModuleName use_module_target(const Sexp& spec) {
  if (spec.is_list() && spec.size() > 0 && spec[0].is_list()) return ModuleName::from_sexp(spec[0]);
  return ModuleName::from_sexp(spec);
}

}  // namespace

std::string ModuleFile::canonical_text() const {
  std::string out;
  for (const Sexp& form : forms) {
    out += print_canonical(form);
    out += '\n';
  }
  return out;
}

ModuleNotFound::ModuleNotFound(const ModuleName& name, const std::vector<fs::path>& search_path)
    : Error("module " + name.str() + " not found in search path " + join_path(search_path)),
      name_(name) {}

ModuleFile parse_module_file(const ModuleName& expected, std::string_view text) {
  std::vector<Sexp> forms = read_all(text);
  if (forms.empty() || !forms[0].is_form("define-module") || forms[0].size() < 2)
    throw Error("module " + expected.str() + " lacks a define-module header");
  const Sexp& header = forms[0];
  ModuleName declared = ModuleName::from_sexp(header[1]);
  if (declared != expected)
    throw Error("module file for " + expected.str() + " declares " + declared.str());

  std::vector<ModuleName> imports;
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (!header[i].is_keyword()) continue;
    if (i + 1 >= header.size()) break;
    if (header[i].keyword_name() == "use-module") {
      ModuleName dep = use_module_target(header[i + 1]);
      if (std::find(imports.begin(), imports.end(), dep) == imports.end()) imports.push_back(dep);
    }
    if (!header[i + 1].is_keyword()) ++i;
  }
  return ModuleFile{std::move(declared), std::move(forms), std::move(imports)};
}

std::vector<ModuleFile> source_module_closure(const std::vector<ModuleName>& names,
                                              const std::vector<fs::path>& search_path) {
  std::vector<ModuleFile> out;
  std::set<ModuleName> done;
  std::vector<ModuleName> active;

  auto load = [&](const ModuleName& name) {
    for (const fs::path& dir : search_path) {
      const fs::path candidate = dir / name.relative_path();
      std::ifstream in(candidate, std::ios::binary);
      if (!in) continue;
      std::ostringstream ss;
      ss << in.rdbuf();
      return parse_module_file(name, ss.str());
    }
    throw ModuleNotFound(name, search_path);
  };

  auto visit = [&](auto& self, const ModuleName& name) -> void {
    if (done.count(name)) return;
    if (std::find(active.begin(), active.end(), name) != active.end()) {
      std::string cycle;
      for (const auto& m : active) cycle += m.str() + " -> ";
      throw Error("cyclic module imports: " + cycle + name.str());
    }
    active.push_back(name);
    ModuleFile file = load(name);
    std::vector<ModuleName> imports = file.imports;
    out.push_back(std::move(file));
    for (const ModuleName& dep : imports) self(self, dep);
    active.pop_back();
    done.insert(name);
  };

  for (const ModuleName& name : names) visit(visit, name);
  return out;
}

StorePath intern_module_closure(Store& store, const std::vector<ModuleFile>& files) {
  std::map<std::string, std::string> contents;
  for (const ModuleFile& f : files) contents[f.name.relative_path()] = f.canonical_text();
  return store.intern_directory(contents, "module-import");
}

std::vector<fs::path> module_path_from_environment() {
  std::vector<fs::path> out;
  const char* value = std::getenv("GEXP_MODULE_PATH");
  if (value == nullptr) return out;
  std::string_view rest(value);
  while (!rest.empty()) {
    auto colon = rest.find(':');
    std::string_view item = rest.substr(0, colon);
    if (!item.empty()) out.emplace_back(std::string(item));
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return out;
}

}  // namespace gexp
