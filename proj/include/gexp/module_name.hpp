#pragma once

#include <string>
#include <vector>

#include "gexp/sexp.hpp"

namespace gexp {

// A module name such as (guix build utils).
class ModuleName {
 public:
  explicit ModuleName(std::vector<std::string> parts);
  static ModuleName from_sexp(const Sexp& s);

  const std::vector<std::string>& parts() const { return parts_; }
  Sexp to_sexp() const;
  // guix/build/utils.scm
  std::string relative_path() const;
  // (guix build utils)
  std::string str() const { return print_canonical(to_sexp()); }

  bool operator==(const ModuleName&) const = default;
  auto operator<=>(const ModuleName&) const = default;

 private:
  std::vector<std::string> parts_;
};

}  // namespace gexp
