#include "gexp/builder.hpp"

#include <algorithm>
#include <future>
#include <set>

namespace gexp {

namespace fs = std::filesystem;

namespace {

void remove_tree(const fs::path& p) {
  std::error_code ec;
  if (!fs::exists(p, ec)) return;
  for (auto it = fs::recursive_directory_iterator(p, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_symlink()) fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
  }
  fs::permissions(p, fs::perms::owner_all, fs::perm_options::add, ec);
  fs::remove_all(p, ec);
}

void build_one(Store& store, const StorePath& drv_path, const BuildOptions& options) {
  const Derivation d = store.read_derivation(drv_path);
  if (is_built(store, d)) return;
  if (!d.builder) throw BuildFailure(drv_path, "derivation has no builder");

  const fs::path tmp = store.make_temp_dir("build");
  try {
    const fs::path outputs_dir = tmp / "outputs";
    const fs::path work = tmp / "work";
    fs::create_directories(outputs_dir);
    fs::create_directories(work);

    EvalEnv env;
    for (const auto& [key, value] : d.env) {
      if (builder_variable_allowed(d, key)) env.variables[key] = value;
    }
    env.variables["TMPDIR"] = work.string();
    env.confined = true;
    env.mappings.push_back({store.prefix(), store.root(), false});
    env.mappings.push_back({work.string(), work, true});
    for (const auto& [name, path] : d.outputs)
      env.mappings.push_back({path.str(), outputs_dir / name, true});

    const std::vector<Sexp> program = read_all(store.read_file(*d.builder));
    Evaluator evaluator(std::move(env), options.eval);
    evaluator.run(program);

    for (const auto& [name, path] : d.outputs) {
      std::error_code ec;
      if (!fs::exists(outputs_dir / name, ec))
        throw BuildFailure(drv_path, "builder failed to produce output " + name);
    }
    for (const auto& [name, path] : d.outputs) store.install(outputs_dir / name, path);
  } catch (const BuildFailure&) {
    remove_tree(tmp);
    throw;
  } catch (const std::exception& e) {
    remove_tree(tmp);
    throw BuildFailure(drv_path, e.what());
  }
  remove_tree(tmp);
}

}  // namespace

bool is_built(const Store& store, const Derivation& d) {
  return std::all_of(d.outputs.begin(), d.outputs.end(),
                     [&](const auto& out) { return store.exists(out.second); });
}

bool builder_variable_allowed(const Derivation& d, const std::string& name) {
  return d.outputs.count(name) != 0 || name == "SYSTEM" || name == "TARGET" ||
         name == "MODULE_PATH" || name == "TMPDIR";
}

BuildPlan plan(const Store& store, const StorePath& drv_path) {
  BuildPlan out;
  std::set<StorePath> done;
  std::vector<StorePath> active;

  auto visit = [&](auto& self, const StorePath& p) -> void {
    if (done.count(p)) return;
    if (std::find(active.begin(), active.end(), p) != active.end())
      throw Error("cycle in derivation graph at " + p.str() + " (corrupt store?)");
    const Derivation d = store.read_derivation(p);
    if (!is_built(store, d)) {
      active.push_back(p);
      for (const InputDrv& in : d.input_drvs) self(self, in.drv);
      active.pop_back();
      out.push_back(p);
    }
    done.insert(p);
  };
  visit(visit, drv_path);
  return out;
}

BuildResult build(Store& store, const StorePath& drv_path, const BuildOptions& options) {
  BuildResult result;
  const BuildPlan order = plan(store, drv_path);

  auto run = [&](const StorePath& p) {
    if (options.log) options.log("building " + p.str());
    build_one(store, p, options);
  };

  if (options.jobs <= 1) {
    for (const StorePath& p : order) {
      run(p);
      result.built.push_back(p);
    }
  } else {
    // Level by level: a derivation waits only for inputs in the plan.
    std::set<StorePath> pending(order.begin(), order.end());
    std::set<StorePath> finished;
    while (!pending.empty()) {
      std::vector<StorePath> ready;
      for (const StorePath& p : order) {
        if (!pending.count(p)) continue;
        const Derivation d = store.read_derivation(p);
        const bool deps_done = std::all_of(d.input_drvs.begin(), d.input_drvs.end(), [&](const InputDrv& in) {
          return !pending.count(in.drv) || finished.count(in.drv);
        });
        if (deps_done) ready.push_back(p);
      }
      for (std::size_t i = 0; i < ready.size(); i += options.jobs) {
        std::vector<std::future<void>> batch;
        const std::size_t end = std::min(ready.size(), i + options.jobs);
        for (std::size_t j = i; j < end; ++j)
          batch.push_back(std::async(std::launch::async, run, ready[j]));
        std::exception_ptr first_error;
        for (auto& f : batch) {
          try {
            f.get();
          } catch (...) {
            if (!first_error) first_error = std::current_exception();
          }
        }
        if (first_error) std::rethrow_exception(first_error);
      }
      for (const StorePath& p : ready) {
        pending.erase(p);
        finished.insert(p);
        result.built.push_back(p);
      }
    }
  }

  const Derivation d = store.read_derivation(drv_path);
  result.outputs = d.outputs;
  return result;
}

}  // namespace gexp
