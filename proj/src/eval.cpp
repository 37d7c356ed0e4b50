#include "gexp/eval.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gexp/modules.hpp"

extern char** environ;

namespace gexp {

namespace fs = std::filesystem;

Value::Value(Sexp atom) {
  if (atom.is_list()) {
    *this = datum_to_value(atom);
  } else {
    v = std::move(atom);
  }
}

bool Value::is_procedure() const {
  return std::holds_alternative<std::shared_ptr<const Closure>>(v) ||
         std::holds_alternative<std::shared_ptr<const Builtin>>(v);
}

bool Value::truthy() const {
  auto* s = std::get_if<Sexp>(&v);
  return !(s && s->is_boolean() && !s->boolean());
}

const ValueList& Value::list() const {
  if (auto* l = std::get_if<std::shared_ptr<const ValueList>>(&v)) return **l;
  throw EvalError("expected a list");
}

const Sexp& Value::atom() const {
  if (auto* s = std::get_if<Sexp>(&v)) return *s;
  throw EvalError("expected an atom");
}

Value datum_to_value(const Sexp& datum) {
  if (!datum.is_list()) return Value(datum);
  ValueList items;
  items.reserve(datum.size());
  for (const Sexp& item : datum.items()) items.push_back(datum_to_value(item));
  return Value(std::move(items));
}

Sexp value_to_sexp(const Value& value) {
  return std::visit(
      [](const auto& x) -> Sexp {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Sexp>) {
          return x;
        } else if constexpr (std::is_same_v<T, std::shared_ptr<const ValueList>>) {
          SexpList out;
          for (const Value& item : *x) out.push_back(value_to_sexp(item));
          return Sexp(std::move(out));
        } else if constexpr (std::is_same_v<T, Unspecified>) {
          throw EvalError("unspecified value has no datum representation");
        } else {
          throw EvalError("procedure " + x->name + " has no datum representation");
        }
      },
      value.v);
}

bool values_equal(const Value& a, const Value& b) {
  if (a.v.index() != b.v.index()) return false;
  if (auto* s = std::get_if<Sexp>(&a.v)) return *s == std::get<Sexp>(b.v);
  if (a.is_list()) {
    const auto& la = a.list();
    const auto& lb = b.list();
    return la.size() == lb.size() &&
           std::equal(la.begin(), la.end(), lb.begin(), values_equal);
  }
  if (std::holds_alternative<Unspecified>(a.v)) return true;
  if (auto* c = std::get_if<std::shared_ptr<const Closure>>(&a.v))
    return *c == std::get<std::shared_ptr<const Closure>>(b.v);
  return std::get<std::shared_ptr<const Builtin>>(a.v) ==
         std::get<std::shared_ptr<const Builtin>>(b.v);
}

namespace {

std::string show(const Value& v) {
  if (v.is_procedure()) return "#<procedure>";
  if (std::holds_alternative<Unspecified>(v.v)) return "#<unspecified>";
  return print_canonical(value_to_sexp(v));
}

std::int64_t as_integer(const Value& v, const char* who) {
  auto* s = std::get_if<Sexp>(&v.v);
  if (!s || !s->is_integer()) throw EvalError(std::string(who) + ": not an integer: " + show(v));
  return s->integer();
}

const std::string& as_string(const Value& v, const char* who) {
  auto* s = std::get_if<Sexp>(&v.v);
  if (!s || !s->is_string()) throw EvalError(std::string(who) + ": not a string: " + show(v));
  return s->string_text();
}

void arity(std::span<const Value> args, std::size_t n, const char* who) {
  if (args.size() != n)
    throw EvalError(std::string(who) + ": expected " + std::to_string(n) + " arguments, got " +
                    std::to_string(args.size()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw EvalError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void define_builtin(Frame& frame, const std::string& name,
                    std::function<Value(Evaluator&, std::span<const Value>)> fn) {
  frame.vars[name] = Value();
  frame.vars[name].v = std::make_shared<const Builtin>(Builtin{name, std::move(fn)});
}

template <typename Op>
Value fold_integers(std::span<const Value> args, std::int64_t init, const char* who, Op op) {
  std::int64_t acc = init;
  for (const Value& a : args) {
    if (op(acc, as_integer(a, who), &acc)) throw EvalError(std::string(who) + ": integer overflow");
  }
  return Value::integer(acc);
}

int spawn(const std::string& program, const std::vector<std::string>& args,
          const std::map<std::string, std::string>& variables) {
  std::vector<std::string> env_strings;
  for (const auto& [k, v] : variables) env_strings.push_back(k + "=" + v);
  std::vector<char*> argv, envp;
  argv.push_back(const_cast<char*>(program.c_str()));
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);
  pid_t pid = 0;
  if (posix_spawn(&pid, program.c_str(), nullptr, nullptr, argv.data(), envp.data()) != 0)
    throw EvalError("system*: cannot run " + program);
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw EvalError("system*: waitpid failed");
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

void install_builtins(Frame& g, const EvalOptions& options) {
  define_builtin(g, "+", [](Evaluator&, std::span<const Value> a) {
    return fold_integers(a, 0, "+", [](auto x, auto y, auto* r) { return __builtin_add_overflow(x, y, r); });
  });
  define_builtin(g, "*", [](Evaluator&, std::span<const Value> a) {
    return fold_integers(a, 1, "*", [](auto x, auto y, auto* r) { return __builtin_mul_overflow(x, y, r); });
  });
  define_builtin(g, "-", [](Evaluator&, std::span<const Value> a) {
    if (a.empty()) throw EvalError("-: expected at least one argument");
    std::int64_t first = as_integer(a[0], "-");
    if (a.size() == 1) {
      std::int64_t r = 0;
      if (__builtin_sub_overflow(std::int64_t{0}, first, &r)) throw EvalError("-: integer overflow");
      return Value::integer(r);
    }
    return fold_integers(a.subspan(1), first, "-",
                         [](auto x, auto y, auto* r) { return __builtin_sub_overflow(x, y, r); });
  });
  define_builtin(g, "=", [](Evaluator&, std::span<const Value> a) {
    if (a.empty()) throw EvalError("=: expected at least one argument");
    const std::int64_t first = as_integer(a[0], "=");
    bool same = true;
    for (const Value& v : a.subspan(1)) same = as_integer(v, "=") == first && same;
    return Value::boolean(same);
  });
  define_builtin(g, "string-append", [](Evaluator&, std::span<const Value> a) {
    std::string out;
    for (const Value& v : a) out += as_string(v, "string-append");
    return Value::string(std::move(out));
  });
  define_builtin(g, "list", [](Evaluator&, std::span<const Value> a) {
    return Value(ValueList(a.begin(), a.end()));
  });
  define_builtin(g, "cons", [](Evaluator&, std::span<const Value> a) {
    arity(a, 2, "cons");
    if (!a[1].is_list()) throw EvalError("cons: second argument must be a list: " + show(a[1]));
    ValueList out{a[0]};
    out.insert(out.end(), a[1].list().begin(), a[1].list().end());
    return Value(std::move(out));
  });
  define_builtin(g, "car", [](Evaluator&, std::span<const Value> a) {
    arity(a, 1, "car");
    if (!a[0].is_list() || a[0].list().empty()) throw EvalError("car: not a pair: " + show(a[0]));
    return a[0].list().front();
  });
  define_builtin(g, "cdr", [](Evaluator&, std::span<const Value> a) {
    arity(a, 1, "cdr");
    if (!a[0].is_list() || a[0].list().empty()) throw EvalError("cdr: not a pair: " + show(a[0]));
    return Value(ValueList(a[0].list().begin() + 1, a[0].list().end()));
  });
  define_builtin(g, "null?", [](Evaluator&, std::span<const Value> a) {
    arity(a, 1, "null?");
    return Value::boolean(a[0].is_list() && a[0].list().empty());
  });
  define_builtin(g, "equal?", [](Evaluator&, std::span<const Value> a) {
    arity(a, 2, "equal?");
    return Value::boolean(values_equal(a[0], a[1]));
  });
  define_builtin(g, "getenv", [](Evaluator& ev, std::span<const Value> a) {
    arity(a, 1, "getenv");
    const auto& vars = ev.env().variables;
    auto it = vars.find(as_string(a[0], "getenv"));
    return it == vars.end() ? Value::boolean(false) : Value::string(it->second);
  });
  define_builtin(g, "mkdir", [](Evaluator& ev, std::span<const Value> a) {
    arity(a, 1, "mkdir");
    const fs::path p = ev.resolve_path(as_string(a[0], "mkdir"), true);
    std::error_code ec;
    if (!fs::create_directory(p, ec) || ec)
      throw EvalError("mkdir: cannot create " + as_string(a[0], "mkdir") +
                      (ec ? ": " + ec.message() : ": file exists"));
    return Value();
  });
  define_builtin(g, "write-file", [](Evaluator& ev, std::span<const Value> a) {
    arity(a, 2, "write-file");
    const fs::path p = ev.resolve_path(as_string(a[0], "write-file"), true);
    const std::string& content = as_string(a[1], "write-file");
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw EvalError("write-file: cannot open " + as_string(a[0], "write-file"));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw EvalError("write-file: write failed");
    return Value();
  });
  define_builtin(g, "read-file", [](Evaluator& ev, std::span<const Value> a) {
    arity(a, 1, "read-file");
    return Value::string(slurp(ev.resolve_path(as_string(a[0], "read-file"), false)));
  });
  define_builtin(g, "copy-file", [](Evaluator& ev, std::span<const Value> a) {
    arity(a, 2, "copy-file");
    const fs::path from = ev.resolve_path(as_string(a[0], "copy-file"), false);
    const fs::path to = ev.resolve_path(as_string(a[1], "copy-file"), true);
    std::error_code ec;
    fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
    if (ec) throw EvalError("copy-file: " + ec.message());
    fs::permissions(to, fs::perms::owner_write, fs::perm_options::add, ec);
    return Value();
  });
  define_builtin(g, "file-exists?", [](Evaluator& ev, std::span<const Value> a) {
    arity(a, 1, "file-exists?");
    std::error_code ec;
    return Value::boolean(fs::exists(ev.resolve_path(as_string(a[0], "file-exists?"), false), ec));
  });
  define_builtin(g, "error", [](Evaluator&, std::span<const Value> a) -> Value {
    std::string msg;
    for (const Value& v : a) {
      if (!msg.empty()) msg += ' ';
      auto* s = std::get_if<Sexp>(&v.v);
      msg += (s && s->is_string()) ? s->string_text() : show(v);
    }
    throw EvalError(msg.empty() ? "error" : msg);
  });
  const bool allow = options.allow_subprocess;
  define_builtin(g, "system*", [allow](Evaluator& ev, std::span<const Value> a) {
    if (!allow) throw EvalError("system*: subprocesses are disabled in this build environment");
    if (a.empty()) throw EvalError("system*: expected a program");
    const std::string program = ev.resolve_path(as_string(a[0], "system*"), false).string();
    std::vector<std::string> args;
    for (const Value& v : a.subspan(1)) args.push_back(as_string(v, "system*"));
    return Value::integer(spawn(program, args, ev.env().variables));
  });
}

const Value& lookup(const FramePtr& frame, const std::string& name) {
  for (const Frame* f = frame.get(); f != nullptr; f = f->parent.get()) {
    if (auto it = f->vars.find(name); it != f->vars.end()) {
      if (f->pending.count(name)) throw EvalError("variable used before its definition: " + name);
      return it->second;
    }
  }
  throw EvalError("unbound variable: " + name);
}

// A body's internal defines scope over the whole body, as in letrec*.
void declare_body(std::span<const Sexp> body, Frame& frame) {
  for (const Sexp& form : body) {
    if (form.is_form("begin")) {
      declare_body(form.items().subspan(1), frame);
    } else if (form.is_form("define") && form.size() >= 2) {
      const Sexp& target = form[1];
      const Sexp* name = target.is_symbol() ? &target
                         : (target.is_list() && target.size() > 0 && target[0].is_symbol()) ? &target[0]
                                                                                              : nullptr;
      if (name) {
        frame.vars.try_emplace(name->symbol_name());
        frame.pending.insert(name->symbol_name());
      }
    }
  }
}

FramePtr child(FramePtr parent) {
  auto f = std::make_shared<Frame>();
  f->parent = std::move(parent);
  return f;
}

void check_bindings(const Sexp& bindings, const Sexp& form) {
  if (!bindings.is_list()) throw EvalError("malformed bindings: " + print_canonical(form));
  for (const Sexp& b : bindings.items()) {
    if (!b.is_list() || b.size() != 2 || !b[0].is_symbol())
      throw EvalError("malformed binding: " + print_canonical(b));
  }
}

ModuleName module_spec(const Sexp& spec) {
  if (spec.is_list() && spec.size() > 0 && spec[0].is_list()) return ModuleName::from_sexp(spec[0]);
  return ModuleName::from_sexp(spec);
}

}  // namespace

Evaluator::Evaluator(EvalEnv env, EvalOptions options)
    : env_(std::move(env)), options_(options), globals_(std::make_shared<Frame>()) {
  install_builtins(*globals_, options_);
  top_ = child(globals_);
  if (env_.module_path.empty()) {
    if (auto it = env_.variables.find("MODULE_PATH"); it != env_.variables.end()) {
      std::string_view rest = it->second;
      while (!rest.empty()) {
        auto colon = rest.find(':');
        if (colon != 0) env_.module_path.emplace_back(rest.substr(0, colon));
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
      }
    }
  }
}

void Evaluator::step() {
  if (++steps_ > options_.step_budget) throw BudgetExceeded();
}

fs::path Evaluator::resolve_path(const std::string& logical, bool for_write) const {
  const PathMapping* best = nullptr;
  for (const PathMapping& m : env_.mappings) {
    const bool match = logical == m.logical ||
                       (logical.size() > m.logical.size() &&
                        logical.compare(0, m.logical.size(), m.logical) == 0 &&
                        logical[m.logical.size()] == '/');
    if (match && (!best || m.logical.size() > best->logical.size())) best = &m;
  }
  if (!best) {
    if (env_.confined) throw EvalError("access to " + logical + " is outside the build environment");
    return fs::path(logical);
  }
  if (for_write && !best->writable) throw EvalError("cannot write to read-only location " + logical);
  std::string rest = logical.substr(best->logical.size());
  if (rest.find("/../") != std::string::npos || rest.ends_with("/.."))
    throw EvalError("path " + logical + " escapes its location");
  if (!rest.empty() && rest[0] == '/') rest.erase(0, 1);
  return rest.empty() ? best->physical : best->physical / rest;
}

Value Evaluator::run(std::span<const Sexp> forms) {
  Value result;
  for (const Sexp& form : forms) result = eval_in(form, top_, 0);
  return result;
}

Value Evaluator::eval(const Sexp& expr) { return eval_in(expr, top_, 0); }

FramePtr Evaluator::bind_params(const Closure& c, std::span<const Value> args) {
  FramePtr frame = child(c.env);
  if (c.params.is_symbol()) {
    frame->vars[c.params.symbol_name()] = Value(ValueList(args.begin(), args.end()));
    return frame;
  }
  const auto params = c.params.items();
  std::size_t fixed = params.size();
  std::optional<std::string> rest;
  if (fixed >= 2 && params[fixed - 2].is_symbol(".")) {
    rest = params[fixed - 1].symbol_name();
    fixed -= 2;
  }
  if (args.size() < fixed || (!rest && args.size() != fixed))
    throw EvalError(c.name + ": expected " + std::to_string(fixed) + " arguments, got " +
                    std::to_string(args.size()));
  for (std::size_t i = 0; i < fixed; ++i) frame->vars[params[i].symbol_name()] = args[i];
  if (rest) frame->vars[*rest] = Value(ValueList(args.begin() + fixed, args.end()));
  return frame;
}

Value Evaluator::apply(const Value& f, std::span<const Value> args, std::size_t depth) {
  if (auto* b = std::get_if<std::shared_ptr<const Builtin>>(&f.v)) return (*b)->fn(*this, args);
  auto* c = std::get_if<std::shared_ptr<const Closure>>(&f.v);
  if (!c) throw EvalError("not a procedure: " + show(f));
  FramePtr frame = bind_params(**c, args);
  declare_body(*(*c)->body, *frame);
  Value result;
  for (const Sexp& form : *(*c)->body) result = eval_in(form, frame, depth + 1);
  return result;
}

void Evaluator::use_module(const ModuleName& name, Frame& into, std::size_t depth) {
  auto cached = modules_.find(name);
  if (cached == modules_.end()) {
    if (std::find(loading_.begin(), loading_.end(), name) != loading_.end())
      throw EvalError("cyclic module import of " + name.str());
    std::optional<std::string> text;
    for (const std::string& dir : env_.module_path) {
      std::error_code ec;
      const fs::path p = resolve_path(dir + "/" + name.relative_path(), false);
      if (fs::is_regular_file(p, ec)) {
        text = slurp(p);
        break;
      }
    }
    if (!text) throw EvalError("no code for module " + name.str() + ": module not found");
    ModuleFile file = parse_module_file(name, *text);
    loading_.push_back(name);
    FramePtr frame = child(globals_);
    for (const ModuleName& dep : file.imports) use_module(dep, *frame, depth + 1);
    for (std::size_t i = 1; i < file.forms.size(); ++i) eval_in(file.forms[i], frame, depth + 1);
    loading_.pop_back();
    cached = modules_.emplace(name, frame).first;
  }
  for (const auto& [k, v] : cached->second->vars) into.vars[k] = v;
}

Value Evaluator::eval_in(Sexp x, FramePtr frame, std::size_t depth) {
  if (depth > options_.max_depth) throw EvalError("maximum recursion depth exceeded");
  for (;;) {
    step();
    if (x.is_symbol()) return lookup(frame, x.symbol_name());
    if (x.is_atom()) return Value(x);
    if (x.size() == 0) throw EvalError("cannot evaluate ()");

    // Evaluates all but the last body form and continues with the last one.
    auto tail_body = [&](std::span<const Sexp> body, const FramePtr& env) -> bool {
      if (body.empty()) return false;
      for (const Sexp& form : body.first(body.size() - 1)) eval_in(form, env, depth + 1);
      x = body.back();
      frame = env;
      return true;
    };
    auto scoped_body = [&](std::span<const Sexp> body, const FramePtr& env) -> bool {
      declare_body(body, *env);
      return tail_body(body, env);
    };

    const Sexp& head = x[0];
    if (head.is_symbol()) {
      const std::string& op = head.symbol_name();
      if (op == "quote") {
        if (x.size() != 2) throw EvalError("malformed quote");
        return datum_to_value(x[1]);
      }
      if (op == "if") {
        if (x.size() != 3 && x.size() != 4) throw EvalError("malformed if: " + print_canonical(x));
        if (eval_in(x[1], frame, depth + 1).truthy()) {
          x = Sexp(x[2]);
        } else if (x.size() == 4) {
          x = Sexp(x[3]);
        } else {
          return Value();
        }
        continue;
      }
      if (op == "begin") {
        const Sexp form = x;
        if (!tail_body(form.items().subspan(1), frame)) return Value();
        continue;
      }
      if (op == "define") {
        if (x.size() < 3) throw EvalError("malformed define: " + print_canonical(x));
        if (x[1].is_symbol()) {
          if (x.size() != 3) throw EvalError("malformed define: " + print_canonical(x));
          Value v = eval_in(x[2], frame, depth + 1);
          frame->vars[x[1].symbol_name()] = std::move(v);
          frame->pending.erase(x[1].symbol_name());
          return Value();
        }
        const Sexp& sig = x[1];
        if (!sig.is_list() || sig.size() == 0 || !sig[0].is_symbol())
          throw EvalError("malformed define: " + print_canonical(x));
        auto closure = std::make_shared<const Closure>(
            Closure{sig[0].symbol_name(), Sexp(SexpList(sig.items().begin() + 1, sig.items().end())),
                    std::make_shared<const SexpList>(x.items().begin() + 2, x.items().end()),
                    frame});
        frame->vars[sig[0].symbol_name()].v = closure;
        frame->pending.erase(sig[0].symbol_name());
        return Value();
      }
      if (op == "lambda") {
        if (x.size() < 3 || !(x[1].is_list() || x[1].is_symbol()))
          throw EvalError("malformed lambda: " + print_canonical(x));
        Value v;
        v.v = std::make_shared<const Closure>(
            Closure{"lambda", x[1], std::make_shared<const SexpList>(x.items().begin() + 2, x.items().end()),
                    frame});
        return v;
      }
      if (op == "let") {
        if (x.size() >= 4 && x[1].is_symbol()) {
          // Named let.
          const Sexp form = x;
          check_bindings(form[2], form);
          SexpList params;
          ValueList inits;
          for (const Sexp& b : form[2].items()) {
            params.push_back(b[0]);
            inits.push_back(eval_in(b[1], frame, depth + 1));
          }
          FramePtr loop_frame = child(frame);
          auto closure = std::make_shared<const Closure>(
              Closure{form[1].symbol_name(), Sexp(std::move(params)),
                      std::make_shared<const SexpList>(form.items().begin() + 3, form.items().end()),
                      loop_frame});
          loop_frame->vars[form[1].symbol_name()].v = closure;
          FramePtr body_frame = bind_params(*closure, inits);
          if (!scoped_body(std::span<const Sexp>(*closure->body), body_frame)) return Value();
          continue;
        }
        if (x.size() < 3) throw EvalError("malformed let: " + print_canonical(x));
        const Sexp form = x;
        check_bindings(form[1], form);
        FramePtr inner = child(frame);
        for (const Sexp& b : form[1].items())
          inner->vars[b[0].symbol_name()] = eval_in(b[1], frame, depth + 1);
        scoped_body(form.items().subspan(2), inner);
        continue;
      }
      if (op == "let*") {
        if (x.size() < 3) throw EvalError("malformed let*: " + print_canonical(x));
        const Sexp form = x;
        check_bindings(form[1], form);
        FramePtr env = frame;
        for (const Sexp& b : form[1].items()) {
          Value v = eval_in(b[1], env, depth + 1);
          env = child(env);
          env->vars[b[0].symbol_name()] = std::move(v);
        }
        scoped_body(form.items().subspan(2), child(env));
        continue;
      }
      if (op == "letrec" || op == "letrec*") {
        if (x.size() < 3) throw EvalError("malformed " + op + ": " + print_canonical(x));
        const Sexp form = x;
        check_bindings(form[1], form);
        FramePtr inner = child(frame);
        for (const Sexp& b : form[1].items()) inner->vars[b[0].symbol_name()] = Value();
        for (const Sexp& b : form[1].items())
          inner->vars[b[0].symbol_name()] = eval_in(b[1], inner, depth + 1);
        scoped_body(form.items().subspan(2), inner);
        continue;
      }
      if (op == "use-modules") {
        for (const Sexp& spec : x.items().subspan(1)) use_module(module_spec(spec), *frame, depth);
        return Value();
      }
    }

    Value f = eval_in(head, frame, depth + 1);
    ValueList args;
    args.reserve(x.size() - 1);
    for (const Sexp& arg : x.items().subspan(1)) args.push_back(eval_in(arg, frame, depth + 1));
    if (auto* c = std::get_if<std::shared_ptr<const Closure>>(&f.v)) {
      auto closure = *c;
      FramePtr body_frame = bind_params(*closure, args);
      if (!scoped_body(std::span<const Sexp>(*closure->body), body_frame)) return Value();
      continue;
    }
    return apply(f, args, depth);
  }
}

Value mini_eval(const Sexp& program, EvalEnv env, EvalOptions options) {
  Evaluator ev(std::move(env), options);
  return ev.eval(program);
}

}  // namespace gexp
