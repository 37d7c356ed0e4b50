#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gexp/builder.hpp"
#include "gexp/deployment.hpp"
#include "gexp/derive.hpp"
#include "gexp/eval.hpp"
#include "gexp/host.hpp"
#include "gexp/lowerable.hpp"
#include "gexp/modules.hpp"
#include "gexp/sexp.hpp"
#include "gexp/store.hpp"

namespace testing_support {

namespace fs = std::filesystem;

// Scratch directory removed on destruction, read-only store items included.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void remove_tree(const fs::path& p);

fs::path fixture(const std::string& rel);
fs::path modules_dir();
std::string slurp(const fs::path& p);
void spit(const fs::path& p, const std::string& content);

// Host environment with the standard builtins.
gexp::HostEnvPtr host_env(const gexp::HostOptions& options = {});

// Stages `(gexp …)` or `#~…` source text in `env`.
gexp::GexpRef stage_text(const std::string& text, const gexp::HostEnvPtr& env = host_env());

// Resolver that renders objects by their describe() text, for tests that do
// not need a store.
class DescribeResolver : public gexp::ObjectResolver {
 public:
  std::string expand(const gexp::ObjectRef& object, const gexp::SystemTag& system,
                     const gexp::Target& target) override;
};

std::string residual(const gexp::Gexp& g);

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the gexp executable with `args` (already shell-quoted as needed).
CliResult run_cli(const std::string& args, const std::string& env = "");

std::vector<std::string> lines(const std::string& text);

// Random escape-free program over the builder language: arithmetic, if,
// let-family binders, lambda, named let, internal define and quote, reusing
// a few variable names so that shadowing is common.
gexp::Sexp random_program(std::mt19937_64& rng);

// Printed value, or "error: <message>".
std::string eval_outcome(const gexp::Sexp& program);

}  // namespace testing_support
