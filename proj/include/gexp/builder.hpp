#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gexp/eval.hpp"
#include "gexp/store.hpp"

namespace gexp {

class BuildFailure : public Error {
 public:
  BuildFailure(const StorePath& drv, const std::string& what)
      : Error("build of " + drv.str() + " failed: " + what), drv_(drv) {}
  const StorePath& derivation() const { return drv_; }

 private:
  StorePath drv_;
};

// Derivations to build, dependencies first.
using BuildPlan = std::vector<StorePath>;

struct BuildOptions {
  EvalOptions eval;
  // Independent derivations may be built concurrently up to this many.
  std::size_t jobs = 1;
  // Receives one line per derivation actually built.
  std::function<void(const std::string&)> log;
};

struct BuildResult {
  std::map<std::string, StorePath> outputs;
  // Derivations whose builders ran, in order.
  std::vector<StorePath> built;
};

bool is_built(const Store& store, const Derivation& d);

// Transitive closure over input derivations, skipping built ones.
BuildPlan plan(const Store& store, const StorePath& drv_path);

BuildResult build(Store& store, const StorePath& drv_path, const BuildOptions& options = {});

// Names a builder may see through getenv.
bool builder_variable_allowed(const Derivation& d, const std::string& name);

}  // namespace gexp
