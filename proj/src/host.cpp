#include "gexp/host.hpp"

#include <algorithm>

#include "gexp/lowerable.hpp"
#include "gexp/modules.hpp"

namespace gexp {

namespace fs = std::filesystem;

HostProcedureRef make_procedure(std::string name,
                                std::function<HostValue(std::span<const HostValue>)> fn) {
  return std::make_shared<const HostProcedure>(HostProcedure{std::move(name), std::move(fn)});
}

void HostEnv::define(std::string name, HostValue value) {
  bindings_.insert_or_assign(std::move(name), std::move(value));
}

const HostValue& HostEnv::lookup(std::string_view name) const {
  for (const HostEnv* env = this; env != nullptr; env = env->parent_.get()) {
    if (auto it = env->bindings_.find(name); it != env->bindings_.end()) return it->second;
  }
  throw UnboundVariable(std::string(name));
}

bool HostEnv::contains(std::string_view name) const {
  for (const HostEnv* env = this; env != nullptr; env = env->parent_.get()) {
    if (env->bindings_.count(name)) return true;
  }
  return false;
}

namespace {

std::string describe(const HostValue& v) {
  if (auto* s = v.get_if<Sexp>()) return print_canonical(*s);
  if (auto* o = v.get_if<ObjectRef>()) return (*o)->describe();
  if (v.get_if<GexpRef>()) return "#<gexp>";
  if (v.get_if<HostList>()) return "#<list>";
  return "#<procedure " + v.get_if<HostProcedureRef>()->get()->name + ">";
}

bool truthy(const HostValue& v) {
  auto* s = v.get_if<Sexp>();
  return !(s && s->is_boolean() && !s->boolean());
}

const std::string& expect_string(const HostValue& v, const char* who) {
  auto* s = v.get_if<Sexp>();
  if (!s || !s->is_string())
    throw Error(std::string(who) + ": expected a string, got " + describe(v));
  return s->string_text();
}

void expect_arity(std::span<const HostValue> args, std::size_t min, std::size_t max,
                  const char* who) {
  if (args.size() < min || args.size() > max)
    throw Error(std::string(who) + ": wrong number of arguments (" +
                std::to_string(args.size()) + ")");
}

std::vector<ModuleName> module_names(const HostValue& v) {
  std::vector<ModuleName> out;
  if (auto* s = v.get_if<Sexp>(); s && s->is_list()) {
    for (const Sexp& item : s->items()) out.push_back(ModuleName::from_sexp(item));
    return out;
  }
  if (auto* l = v.get_if<HostList>()) {
    for (const HostValue& item : *l) {
      auto* s = item.get_if<Sexp>();
      if (!s) throw Error("expected a module name, got " + describe(item));
      out.push_back(ModuleName::from_sexp(*s));
    }
    return out;
  }
  throw Error("expected a list of module names, got " + describe(v));
}

class HostEvaluator {
 public:
  explicit HostEvaluator(std::vector<ModuleName> modules) : modules_(std::move(modules)) {}

  HostValue eval(const Sexp& x, const HostEnvPtr& env) {
    if (x.is_symbol()) return env->lookup(x.symbol_name());
    if (x.is_atom() || x.size() == 0) return x;

    const Sexp& head = x[0];
    if (head.is_symbol()) {
      const std::string& op = head.symbol_name();
      if (op == "quote") {
        require(x, 2);
        return x[1];
      }
      if (op == "gexp") {
        require(x, 2);
        return stage(x[1], env, modules_);
      }
      if (op == "ungexp" || op == "ungexp-splicing" || op == "ungexp-native" ||
          op == "ungexp-native-splicing")
        throw Error(op + " outside of a gexp: " + print_canonical(x));
      if (op == "if") return eval_if(x, env);
      if (op == "begin") return eval_body(x.items().subspan(1), env);
      if (op == "lambda") return make_lambda(x, env);
      if (op == "let" || op == "let*") return eval_let(x, env, op == "let*");
      if (op == "with-imported-modules") return eval_with_modules(x, env);
      if (op == "define") throw Error("define is only allowed at top level: " + print_canonical(x));
    }

    HostValue f = eval(head, env);
    HostList args;
    args.reserve(x.size() - 1);
    for (const Sexp& arg : x.items().subspan(1)) args.push_back(eval(arg, env));
    auto* proc = f.get_if<HostProcedureRef>();
    if (!proc) throw Error("not a procedure: " + describe(f));
    return (*proc)->call(args);
  }

  HostValue eval_body(std::span<const Sexp> forms, const HostEnvPtr& env) {
    HostValue result;
    for (const Sexp& form : forms) result = eval(form, env);
    return result;
  }

 private:
  static void require(const Sexp& x, std::size_t n) {
    if (x.size() != n) throw Error("malformed form: " + print_canonical(x));
  }

  HostValue eval_if(const Sexp& x, const HostEnvPtr& env) {
    if (x.size() != 3 && x.size() != 4) throw Error("malformed if: " + print_canonical(x));
    if (truthy(eval(x[1], env))) return eval(x[2], env);
    return x.size() == 4 ? eval(x[3], env) : HostValue(Sexp(false));
  }

  HostValue make_lambda(const Sexp& x, const HostEnvPtr& env) {
    if (x.size() < 3) throw Error("malformed lambda: " + print_canonical(x));
    const Sexp params = x[1];
    if (!params.is_list() && !params.is_symbol())
      throw Error("malformed lambda parameters: " + print_canonical(params));
    const SexpList body(x.items().begin() + 2, x.items().end());
    std::vector<ModuleName> modules = modules_;
    return make_procedure("lambda", [params, body, env, modules](std::span<const HostValue> args) {
      auto frame = HostEnv::make(env);
      if (params.is_symbol()) {
        frame->define(params.symbol_name(), HostList(args.begin(), args.end()));
      } else {
        if (args.size() != params.size())
          throw Error("procedure expects " + std::to_string(params.size()) + " arguments, got " +
                      std::to_string(args.size()));
        for (std::size_t i = 0; i < args.size(); ++i)
          frame->define(params[i].symbol_name(), args[i]);
      }
      return HostEvaluator(modules).eval_body(body, frame);
    });
  }

  HostValue eval_let(const Sexp& x, const HostEnvPtr& env, bool sequential) {
    if (x.size() < 3 || !x[1].is_list()) throw Error("malformed let: " + print_canonical(x));
    auto frame = HostEnv::make(env);
    for (const Sexp& b : x[1].items()) {
      if (!b.is_list() || b.size() != 2 || !b[0].is_symbol())
        throw Error("malformed let binding: " + print_canonical(b));
      frame->define(b[0].symbol_name(), eval(b[1], sequential ? frame : env));
    }
    return eval_body(x.items().subspan(2), frame);
  }

  HostValue eval_with_modules(const Sexp& x, const HostEnvPtr& env) {
    if (x.size() < 3) throw Error("malformed with-imported-modules: " + print_canonical(x));
    std::vector<ModuleName> modules = modules_;
    for (ModuleName& m : module_names(eval(x[1], env))) {
      if (std::find(modules.begin(), modules.end(), m) == modules.end())
        modules.push_back(std::move(m));
    }
    return HostEvaluator(std::move(modules)).eval_body(x.items().subspan(2), env);
  }

  std::vector<ModuleName> modules_;
};

HostValue make_package(std::span<const HostValue> args) {
  std::string name, version;
  GexpRef build;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> metadata;
  if (args.size() % 2 != 0) throw Error("package: expected #:keyword value pairs");
  for (std::size_t i = 0; i < args.size(); i += 2) {
    auto* key = args[i].get_if<Sexp>();
    if (!key || !key->is_keyword()) throw Error("package: expected a keyword, got " + describe(args[i]));
    const std::string& k = key->keyword_name();
    const HostValue& v = args[i + 1];
    if (k == "name") {
      name = expect_string(v, "package #:name");
    } else if (k == "version") {
      version = expect_string(v, "package #:version");
    } else if (k == "build") {
      auto* g = v.get_if<GexpRef>();
      if (!g) throw Error("package #:build: expected a gexp, got " + describe(v));
      build = *g;
    } else if (k == "outputs") {
      auto* s = v.get_if<Sexp>();
      auto* l = v.get_if<HostList>();
      if (s && s->is_list()) {
        for (const Sexp& o : s->items()) outputs.push_back(o.string_text());
      } else if (l) {
        for (const HostValue& o : *l) outputs.push_back(expect_string(o, "package #:outputs"));
      } else {
        throw Error("package #:outputs: expected a list of strings");
      }
    } else {
      auto* s = v.get_if<Sexp>();
      metadata[k] = s && s->is_string() ? s->string_text() : describe(v);
    }
  }
  return ObjectRef(std::make_shared<const Package>(std::move(name), std::move(version),
                                                   std::move(build), std::move(outputs),
                                                   std::move(metadata)));
}

}  // namespace

HostValue eval_host(const Sexp& expr, const HostEnvPtr& env,
                    const std::vector<ModuleName>& imported_modules) {
  return HostEvaluator(imported_modules).eval(expr, env);
}

Payload to_payload(const HostValue& value) {
  return std::visit(
      [](const auto& v) -> Payload {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HostList>) {
          std::vector<Payload> items;
          items.reserve(v.size());
          for (const HostValue& item : v) items.push_back(to_payload(item));
          return Payload{std::move(items)};
        } else if constexpr (std::is_same_v<T, HostProcedureRef>) {
          throw Error("cannot insert procedure " + v->name + " into staged code");
        } else {
          return Payload{v};
        }
      },
      value.value);
}

void install_host_builtins(HostEnv& env, const HostOptions& options) {
  env.define("list", make_procedure("list", [](std::span<const HostValue> args) {
               return HostValue(HostList(args.begin(), args.end()));
             }));
  env.define("string-append", make_procedure("string-append", [](std::span<const HostValue> args) {
               std::string out;
               for (const HostValue& a : args) out += expect_string(a, "string-append");
               return HostValue(Sexp::string(std::move(out)));
             }));
  const fs::path base = options.base_dir;
  env.define("local-file", make_procedure("local-file", [base](std::span<const HostValue> args) {
               expect_arity(args, 1, 2, "local-file");
               fs::path file = expect_string(args[0], "local-file");
               if (file.is_relative()) file = base / file;
               std::string name = args.size() == 2 ? expect_string(args[1], "local-file")
                                                   : file.filename().string();
               return HostValue(ObjectRef(std::make_shared<const LocalFile>(file, name)));
             }));
  env.define("plain-file", make_procedure("plain-file", [](std::span<const HostValue> args) {
               expect_arity(args, 2, 2, "plain-file");
               return HostValue(ObjectRef(std::make_shared<const PlainFile>(
                   expect_string(args[0], "plain-file"), expect_string(args[1], "plain-file"))));
             }));
  env.define("file-append", make_procedure("file-append", [](std::span<const HostValue> args) {
               expect_arity(args, 1, SIZE_MAX, "file-append");
               auto* base_obj = args[0].get_if<ObjectRef>();
               if (!base_obj) throw Error("file-append: expected a lowerable object, got " + describe(args[0]));
               std::vector<std::string> suffixes;
               for (const HostValue& s : args.subspan(1))
                 suffixes.push_back(expect_string(s, "file-append"));
               return HostValue(
                   ObjectRef(std::make_shared<const FileAppend>(*base_obj, std::move(suffixes))));
             }));
  env.define("package", make_procedure("package", make_package));
  const auto search_path = options.module_path;
  env.define("source-module-closure",
             make_procedure("source-module-closure", [search_path](std::span<const HostValue> args) {
               expect_arity(args, 1, 1, "source-module-closure");
               SexpList names;
               for (const ModuleFile& f : source_module_closure(module_names(args[0]), search_path))
                 names.push_back(f.name.to_sexp());
               return HostValue(Sexp(std::move(names)));
             }));
}

}  // namespace gexp
