// Command-line front end: lower, build, show, add.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gexp/builder.hpp"
#include "gexp/deployment.hpp"
#include "gexp/derive.hpp"
#include "gexp/modules.hpp"

namespace fs = std::filesystem;
using namespace gexp;

namespace {

constexpr int kOk = 0;
constexpr int kStageError = 1;
constexpr int kBuildError = 2;

struct Common {
  std::string system = "x86_64-linux";
  std::string target;
  std::string store_dir = "./store";
  std::string store_prefix;
  std::vector<std::string> module_path;
  std::string name;
};

std::vector<fs::path> search_path(const Common& c) {
  std::vector<fs::path> out(c.module_path.begin(), c.module_path.end());
  for (auto& p : module_path_from_environment()) out.push_back(std::move(p));
  return out;
}

Store open_store(const Common& c) { return Store(c.store_dir, c.store_prefix); }

LoweredDerivation lower_file(Store& store, const CompilerRegistry& registry, const Common& c,
                             const std::string& file) {
  const std::vector<fs::path> path = search_path(c);
  HostOptions host;
  host.module_path = path;
  Deployment dep = load_deployment(file, host);
  Lowerer lowerer(store, registry, path);
  const SystemTag system(c.system);
  Target target;
  if (!c.target.empty()) target = SystemTag(c.target);
  const std::string name = c.name.empty() ? fs::path(file).stem().string() : c.name;
  return gexp_to_derivation(lowerer, name, *dep.gexp, system, target);
}

std::string read_whole(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void show(const Store& store, const std::string& text) {
  auto path = store.parse_path(text);
  if (!path) throw Error(text + " is not a store path under " + store.prefix());
  const Derivation d = store.read_derivation(*path);
  std::cout << "derivation " << path->str() << "\n";
  std::cout << "  name    " << d.name << "\n";
  std::cout << "  system  " << d.system.str() << "\n";
  std::cout << "  target  " << (d.target ? d.target->str() : "none") << "\n";
  std::cout << "  builder " << (d.builder ? d.builder->str() : "none") << "\n";
  std::cout << "  inputs\n";
  for (const InputDrv& in : d.input_drvs) {
    std::cout << "    " << in.drv.str();
    for (const auto& o : in.outputs) std::cout << " " << o;
    std::cout << "\n";
  }
  for (const StorePath& s : d.input_sources) std::cout << "    " << s.str() << "\n";
  std::cout << "  outputs\n";
  for (const auto& [name, p] : d.outputs) std::cout << "    " << name << " " << p.str() << "\n";
  std::cout << "  env\n";
  for (const auto& [k, v] : d.env) std::cout << "    " << k << "=" << v << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stage gexps, lower them to derivations, and build them."};
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  if (const char* env = std::getenv("GEXP_STORE_DIR"); env && *env) c.store_dir = env;
  if (const char* env = std::getenv("GEXP_STORE_PREFIX"); env && *env) c.store_prefix = env;
  app.add_option("--store", c.store_dir, "Store directory (env GEXP_STORE_DIR)");
  app.add_option("--store-prefix", c.store_prefix,
                 "Prefix written into store paths; defaults to the store directory");

  auto add_lowering_flags = [&](CLI::App* sub) {
    sub->add_option("--system", c.system, "System to build for")->capture_default_str();
    sub->add_option("--target", c.target, "Cross-compilation target");
    sub->add_option("--module-path", c.module_path, "Module search directory (repeatable)");
    sub->add_option("--name", c.name, "Derivation name; defaults to the file stem");
  };

  std::string file;
  std::size_t jobs = 1;
  auto* lower = app.add_subcommand("lower", "Write the derivation for a deployment file");
  lower->add_option("file", file)->required();
  add_lowering_flags(lower);

  auto* build_cmd = app.add_subcommand("build", "Lower and build a deployment file");
  build_cmd->add_option("file", file)->required();
  build_cmd->add_option("-j,--jobs", jobs, "Concurrent builds");
  add_lowering_flags(build_cmd);

  std::string drv_text;
  auto* show_cmd = app.add_subcommand("show", "Print the fields of a derivation");
  show_cmd->add_option("drv", drv_text)->required();

  std::string add_path, add_name;
  auto* add = app.add_subcommand("add", "Copy a file into the store");
  add->add_option("path", add_path)->required();
  add->add_option("name", add_name, "Store name; defaults to the file name");

  CLI11_PARSE(app, argc, argv);

  try {
    Store store = open_store(c);
    const CompilerRegistry registry = CompilerRegistry::with_builtins();

    if (*lower) {
      std::cout << lower_file(store, registry, c, file).drv_path.str() << "\n";
      return kOk;
    }
    if (*show_cmd) {
      show(store, drv_text);
      return kOk;
    }
    if (*add) {
      const std::string name = add_name.empty() ? fs::path(add_path).filename().string() : add_name;
      std::cout << store.intern_file(read_whole(add_path), name).str() << "\n";
      return kOk;
    }

    LoweredDerivation lowered = lower_file(store, registry, c, file);
    BuildOptions options;
    options.jobs = jobs;
    options.log = [](const std::string& line) { std::cerr << line << "\n"; };
    try {
      BuildResult result = build(store, lowered.drv_path, options);
      if (result.built.empty()) std::cerr << "cached " << lowered.drv_path.str() << "\n";
      for (const auto& [name, p] : result.outputs) std::cout << name << "\t" << p.str() << "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kBuildError;
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageError;
  }
}
