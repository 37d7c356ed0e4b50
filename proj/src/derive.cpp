#include "gexp/derive.hpp"

#include <algorithm>
#include <set>

#include "gexp/modules.hpp"

namespace gexp {

LoweredDerivation gexp_to_derivation(Lowerer& lowerer, const std::string& name, const Gexp& g,
                                     const SystemTag& system, const Target& target,
                                     const DerivationOptions& options) {
  Store& store = lowerer.store();
  Derivation d;
  d.name = name;
  d.system = system;
  d.target = target;

  // Every store item the residual program may mention.
  std::set<StorePath> allowed;
  for (const GexpInput& input : gexp_inputs(g)) {
    const Target effective = input.native ? std::nullopt : target;
    Lowered lowered = lowerer.lower_object(input.object, system, effective);
    if (auto* path = std::get_if<StorePath>(&lowered)) {
      d.input_sources.push_back(*path);
      allowed.insert(*path);
    } else {
      const auto& drv = std::get<LoweredDerivation>(lowered);
      std::vector<std::string> used;
      for (const auto& [out, path] : drv.drv.outputs) {
        used.push_back(out);
        allowed.insert(path);
      }
      d.input_drvs.push_back({drv.drv_path, std::move(used)});
    }
  }

  const std::string residual = print_canonical(gexp_to_sexp(g, system, target, lowerer));
  for (const StorePath& ref : scan_store_references(residual, store.prefix())) {
    if (!allowed.count(ref))
      throw Error("build program of " + name + " refers to undeclared store item " + ref.str());
  }
  d.builder = store.intern_file(residual, name + "-builder");

  const std::vector<ModuleName> modules = gexp_modules(g);
  if (!modules.empty()) {
    const StorePath closure =
        intern_module_closure(store, source_module_closure(modules, lowerer.module_path()));
    d.input_sources.push_back(closure);
    d.env["MODULE_PATH"] = closure.str();
  }

  d.env["SYSTEM"] = system.str();
  if (target) d.env["TARGET"] = target->str();

  std::vector<std::string> outputs = options.outputs.value_or(gexp_outputs(g));
  if (outputs.empty()) outputs = {"out"};
  for (const auto& out : outputs) {
    if (out == "SYSTEM" || out == "TARGET" || out == "MODULE_PATH" || out == "TMPDIR")
      throw Error("output name '" + out + "' clashes with a builder environment variable");
  }
  assign_output_paths(d, outputs, store.prefix());
  normalize(d);

  StorePath drv_path = store.write_derivation(d);
  return {std::move(drv_path), std::move(d)};
}

}  // namespace gexp
