#include "support.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace testing_support {

void remove_tree(const fs::path& p) {
  std::error_code ec;
  if (!fs::exists(p, ec)) return;
  fs::permissions(p, fs::perms::owner_all, fs::perm_options::add, ec);
  for (auto it = fs::recursive_directory_iterator(p, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_symlink()) fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
  }
  fs::remove_all(p, ec);
}

TempDir::TempDir() {
  std::random_device rd;
  path_ = fs::temp_directory_path() / ("gexp-test-" + std::to_string(rd()) + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() { remove_tree(path_); }

fs::path fixture(const std::string& rel) { return fs::path(GEXP_FIXTURES) / rel; }
fs::path modules_dir() { return fixture("modules"); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

gexp::HostEnvPtr host_env(const gexp::HostOptions& options) {
  auto env = gexp::HostEnv::make();
  gexp::install_host_builtins(*env, options);
  return gexp::HostEnv::make(env);
}

gexp::GexpRef stage_text(const std::string& text, const gexp::HostEnvPtr& env) {
  gexp::HostValue v = gexp::eval_host(gexp::read(text), env);
  auto* g = v.get_if<gexp::GexpRef>();
  if (!g) throw std::runtime_error("not a gexp: " + text);
  return *g;
}

std::string DescribeResolver::expand(const gexp::ObjectRef& object, const gexp::SystemTag&,
                                     const gexp::Target&) {
  return object->describe();
}

std::string residual(const gexp::Gexp& g) {
  DescribeResolver r;
  return gexp::print_canonical(gexp::gexp_to_sexp(g, gexp::default_system(), std::nullopt, r));
}

CliResult run_cli(const std::string& args, const std::string& env) {
  static int counter = 0;
  const fs::path err_file =
      fs::temp_directory_path() / ("gexp-cli-err-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(GEXP_CLI) + " " + args + " 2>" +
                          err_file.string();
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_file);
  fs::remove(err_file);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace testing_support

namespace testing_support {

namespace {

using gexp::Sexp;
using gexp::SexpList;

class ProgramGen {
 public:
  explicit ProgramGen(std::mt19937_64& rng) : rng_(rng) {}

  Sexp expr(int depth, const std::vector<std::string>& scope) {
    if (depth <= 0) return leaf(scope);
    switch (pick(11)) {
      case 0: return leaf(scope);
      case 1: return call(pick_of({"+", "-", "*"}), {expr(depth - 1, scope), expr(depth - 1, scope)});
      case 2:
        return list({sym("if"), call("=", {expr(depth - 1, scope), expr(depth - 1, scope)}),
                     expr(depth - 1, scope), expr(depth - 1, scope)});
      case 3: return let_form("let", depth, scope);
      case 4: return let_form("let*", depth, scope);
      case 5: {
        const std::string v = var();
        return list({list({sym("lambda"), list({sym(v)}), expr(depth - 1, with(scope, v))}),
                     expr(depth - 1, scope)});
      }
      case 6: {
        // (letrec ((f (lambda (v) body))) (f arg))
        const std::string v = var();
        return list({sym("letrec"),
                     list({list({sym("f"), list({sym("lambda"), list({sym(v)}),
                                                 expr(depth - 1, with(scope, v))})})}),
                     list({sym("f"), expr(depth - 1, scope)})});
      }
      case 7: {
        // (let loop ((v k)) (if (= v 0) body (loop (- v 1))))
        const std::string v = var();
        return list({sym("let"), sym("loop"), list({list({sym(v), Sexp(pick(4))})}),
                     list({sym("if"), call("=", {sym(v), Sexp(0)}), expr(depth - 1, with(scope, v)),
                           list({sym("loop"), call("-", {sym(v), Sexp(1)})})})});
      }
      case 8: {
        const std::string v = var();
        // The define scopes over its own initializer, so v must not occur there.
        return list({sym("let"), list({}), list({sym("define"), sym(v), expr(depth - 1, without(scope, v))}),
                     expr(depth - 1, with(scope, v))});
      }
      case 9: {
        // Quoted data keeps its symbols whatever the binders around it.
        const std::string v = var();
        return list({sym("if"),
                     list({sym("equal?"), list({sym("car"), list({sym("quote"), list({sym(v), Sexp(1)})})}),
                           list({sym("quote"), sym(v)})}),
                     expr(depth - 1, scope), Sexp(-1)});
      }
      default: {
        const std::string v = var();
        return list({sym("begin"), expr(depth - 1, scope),
                     list({sym("let*"), list({list({sym(v), expr(depth - 1, scope)})}),
                           list({sym("quote"), sym(v)}), expr(depth - 1, with(scope, v))})});
      }
    }
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::string var() { return pick_of({"x", "y", "z", "w"}); }
  std::string pick_of(std::initializer_list<const char*> xs) {
    return *(xs.begin() + pick(static_cast<int>(xs.size())));
  }
  static Sexp sym(const std::string& s) { return Sexp::symbol(s); }
  static Sexp list(SexpList xs) { return Sexp(std::move(xs)); }
  static Sexp call(const std::string& op, SexpList args) {
    args.insert(args.begin(), sym(op));
    return Sexp(std::move(args));
  }
  static std::vector<std::string> without(std::vector<std::string> scope, const std::string& v) {
    std::erase(scope, v);
    return scope;
  }
  static std::vector<std::string> with(std::vector<std::string> scope, const std::string& v) {
    scope.push_back(v);
    return scope;
  }

  Sexp leaf(const std::vector<std::string>& scope) {
    if (!scope.empty() && pick(3) != 0) return sym(scope[pick(static_cast<int>(scope.size()))]);
    return Sexp(pick(19) - 9);
  }

  Sexp let_form(const char* kind, int depth, const std::vector<std::string>& scope) {
    SexpList bindings;
    std::vector<std::string> inner = scope;
    const int n = 1 + pick(2);
    for (int i = 0; i < n; ++i) {
      const std::string v = var();
      bindings.push_back(list({sym(v), expr(depth - 1, std::string(kind) == "let*" ? inner : scope)}));
      inner.push_back(v);
    }
    return list({sym(kind), Sexp(std::move(bindings)), expr(depth - 1, inner)});
  }

  std::mt19937_64& rng_;
};

}  // namespace

gexp::Sexp random_program(std::mt19937_64& rng) { return ProgramGen(rng).expr(5, {}); }

std::string eval_outcome(const gexp::Sexp& program) {
  try {
    return gexp::print_canonical(gexp::value_to_sexp(gexp::mini_eval(program, {}, {})));
  } catch (const gexp::Error& e) {
    return std::string("error: ") + e.what();
  }
}

}  // namespace testing_support
