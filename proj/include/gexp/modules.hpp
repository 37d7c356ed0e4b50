#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gexp/module_name.hpp"
#include "gexp/store.hpp"

namespace gexp {

struct ModuleFile {
  ModuleName name;
  std::vector<Sexp> forms;
  std::vector<ModuleName> imports;

  // Canonical forms, one per line. Comments and layout do not survive.
  std::string canonical_text() const;
};

class ModuleNotFound : public Error {
 public:
  ModuleNotFound(const ModuleName& name, const std::vector<std::filesystem::path>& search_path);
  const ModuleName& name() const { return name_; }

 private:
  ModuleName name_;
};

// Parses a module source whose first form is its `define-module` header.
// Only `#:use-module` clauses of the header are honored.
ModuleFile parse_module_file(const ModuleName& expected, std::string_view text);

// Transitive closure over `#:use-module` edges, depth first, in first
// occurrence order.
std::vector<ModuleFile> source_module_closure(const std::vector<ModuleName>& names,
                                              const std::vector<std::filesystem::path>& search_path);

// Interns a directory mirroring the module paths, e.g. guix/build/utils.scm.
StorePath intern_module_closure(Store& store, const std::vector<ModuleFile>& files);

// Colon-separated GEXP_MODULE_PATH, or empty.
std::vector<std::filesystem::path> module_path_from_environment();

}  // namespace gexp
