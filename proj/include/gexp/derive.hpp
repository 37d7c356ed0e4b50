#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gexp/gexp.hpp"
#include "gexp/lowerable.hpp"

namespace gexp {

struct DerivationOptions {
  // Overrides the outputs taken from the gexp (default ["out"]).
  std::optional<std::vector<std::string>> outputs;
};

// Lowers the inputs of `g`, interns its residual program as the builder
// (plus the imported module closure, if any), and writes the derivation.
LoweredDerivation gexp_to_derivation(Lowerer& lowerer, const std::string& name, const Gexp& g,
                                     const SystemTag& system, const Target& target,
                                     const DerivationOptions& options = {});

}  // namespace gexp
