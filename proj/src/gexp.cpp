#include "gexp/gexp.hpp"

#include <algorithm>
#include <map>

#include "gexp/host.hpp"

namespace gexp {

namespace {

std::optional<EscapeKind> escape_kind(const Sexp& x) {
  if (!x.is_list() || x.size() == 0 || !x[0].is_symbol()) return std::nullopt;
  const std::string& head = x[0].symbol_name();
  if (head == "ungexp") return EscapeKind::Ungexp;
  if (head == "ungexp-splicing") return EscapeKind::UngexpSplicing;
  if (head == "ungexp-native") return EscapeKind::UngexpNative;
  if (head == "ungexp-native-splicing") return EscapeKind::UngexpNativeSplicing;
  return std::nullopt;
}

RawEscape parse_escape(const Sexp& x, EscapeKind kind) {
  RawEscape raw{kind, Sexp(), std::nullopt};
  const bool splicing =
      kind == EscapeKind::UngexpSplicing || kind == EscapeKind::UngexpNativeSplicing;
  if (x.size() == 2) {
    raw.expression = x[1];
    if (x[1].is_symbol("output")) {
      if (splicing) throw Error("malformed escape: cannot splice output: " + print_canonical(x));
      raw.output = "out";
    }
    return raw;
  }
  if (x.size() == 3 && !splicing && x[1].is_symbol("output") && x[2].is_string()) {
    raw.expression = x[1];
    raw.output = x[2].string_text();
    return raw;
  }
  throw Error("malformed escape: " + print_canonical(x));
}

// Alpha-renaming of staged binders. The same traversal runs in two modes:
// for the gexp being staged (binders are renamed) and for gexps nested in
// its escapes (binders only shadow outer renames; the nested gexp renames
// them itself when it is staged).
class Renamer {
 public:
  using Env = std::map<std::string, std::string, std::less<>>;

  struct Quote {
    bool quoted = false;
    int quasi = 0;
    bool active() const { return !quoted && quasi == 0; }
  };

  explicit Renamer(std::string tag) : tag_(std::move(tag)) {}

  Sexp top(const Sexp& body) {
    std::vector<Sexp> forms{body};
    return this->body(forms, Env{}, 0, true)[0];
  }

 private:
  std::string bind(const std::string& name, Env& env, int depth, bool rename) {
    if (!rename) {
      env.erase(name);
      return name;
    }
    std::string fresh = name + "-" + tag_ + "-" + std::to_string(depth);
    env[name] = fresh;
    return fresh;
  }

  Sexp bind_sexp(const Sexp& name, Env& env, int depth, bool rename) {
    return Sexp::symbol(bind(name.symbol_name(), env, depth, rename));
  }

  static Sexp lookup(const Sexp& sym, const Env& env) {
    auto it = env.find(sym.symbol_name());
    return it == env.end() ? sym : Sexp::symbol(it->second);
  }

  Sexp staged(const Sexp& x, const Env& env, int depth, Quote q, bool rename) {
    if (x.is_symbol()) return q.active() ? lookup(x, env) : x;
    if (x.is_atom() || x.size() == 0) return x;

    if (escape_kind(x)) {
      SexpList out{x[0], host(x[1], env)};
      for (std::size_t i = 2; i < x.size(); ++i) out.push_back(x[i]);
      return Sexp(std::move(out));
    }
    if (x.is_form("gexp") && rename)
      throw Error("nested gexp in staged code is unsupported; nest it through an escape: " +
                  print_canonical(x));

    if (q.quoted) return generic(x, env, depth, q, rename);
    if (q.quasi > 0) {
      if (x.size() == 2 && x.is_form("quasiquote"))
        return Sexp({x[0], staged(x[1], env, depth, {false, q.quasi + 1}, rename)});
      if (x.size() == 2 && (x.is_form("unquote") || x.is_form("unquote-splicing")))
        return Sexp({x[0], staged(x[1], env, depth, {false, q.quasi - 1}, rename)});
      return generic(x, env, depth, q, rename);
    }

    if (x.size() == 2 && x.is_form("quote"))
      return Sexp({x[0], staged(x[1], env, depth, {true, 0}, rename)});
    if (x.size() == 2 && x.is_form("quasiquote"))
      return Sexp({x[0], staged(x[1], env, depth, {false, 1}, rename)});
    if (x.is_form("lambda")) return lambda(x, env, depth, rename);
    if (x.is_form("let")) return let(x, env, depth, rename);
    if (x.is_form("let*")) return let_star(x, env, depth, rename);
    if (x.is_form("letrec") || x.is_form("letrec*")) return letrec(x, env, depth, rename);
    if (x.is_form("define")) return define(x, env, depth, rename);
    return generic(x, env, depth, q, rename);
  }

  Sexp generic(const Sexp& x, const Env& env, int depth, Quote q, bool rename) {
    SexpList out;
    out.reserve(x.size());
    for (const Sexp& item : x.items()) out.push_back(staged(item, env, depth, q, rename));
    return Sexp(std::move(out));
  }

  // Host code inside an escape: untouched, except for nested gexps.
  Sexp host(const Sexp& x, const Env& env) {
    if (!x.is_list() || x.size() == 0) return x;
    if (x.is_form("quote")) return x;
    if (x.is_form("gexp") && x.size() == 2)
      return Sexp({x[0], staged(x[1], env, 0, Quote{}, false)});
    SexpList out;
    out.reserve(x.size());
    for (const Sexp& item : x.items()) out.push_back(host(item, env));
    return Sexp(std::move(out));
  }

  // A body: internal defines are in scope for every form of the body.
  SexpList body(std::span<const Sexp> forms, Env env, int depth, bool rename) {
    for (const Sexp& form : forms) scan_defines(form, env, depth, rename);
    SexpList out;
    out.reserve(forms.size());
    for (const Sexp& form : forms) out.push_back(staged(form, env, depth, Quote{}, rename));
    return out;
  }

  void scan_defines(const Sexp& form, Env& env, int depth, bool rename) {
    if (form.is_form("begin")) {
      for (const Sexp& inner : form.items().subspan(1)) scan_defines(inner, env, depth, rename);
      return;
    }
    if (!form.is_form("define") || form.size() < 2) return;
    const Sexp& target = form[1];
    if (target.is_symbol()) {
      bind(target.symbol_name(), env, depth, rename);
    } else if (target.is_list() && target.size() > 0 && target[0].is_symbol()) {
      bind(target[0].symbol_name(), env, depth, rename);
    }
  }

  // Binds lambda formals into `env`; nullopt when the formals are not a
  // shape we understand.
  std::optional<Sexp> formals(const Sexp& f, Env& env, int depth, bool rename) {
    if (f.is_symbol()) return bind_sexp(f, env, depth, rename);
    if (!f.is_list()) return std::nullopt;
    SexpList out;
    for (const Sexp& item : f.items()) {
      if (item.is_symbol() && !item.is_symbol(".")) {
        out.push_back(bind_sexp(item, env, depth, rename));
      } else if (item.is_symbol(".") || item.is_keyword()) {
        out.push_back(item);
      } else {
        return std::nullopt;
      }
    }
    return Sexp(std::move(out));
  }

  Sexp lambda(const Sexp& x, const Env& env, int depth, bool rename) {
    if (x.size() < 3) return generic(x, env, depth, Quote{}, rename);
    Env inner = env;
    auto params = formals(x[1], inner, depth, rename);
    if (!params) return generic(x, env, depth, Quote{}, rename);
    SexpList out{x[0], *params};
    for (Sexp& form : body(x.items().subspan(2), inner, depth + 1, rename))
      out.push_back(std::move(form));
    return Sexp(std::move(out));
  }

  static bool binding_list(const Sexp& bindings) {
    if (!bindings.is_list()) return false;
    return std::all_of(bindings.items().begin(), bindings.items().end(), [](const Sexp& b) {
      return b.is_list() && (b.size() == 1 || b.size() == 2) && b[0].is_symbol();
    });
  }

  static Sexp binding(Sexp name, const Sexp& original, std::optional<Sexp> init) {
    if (original.size() == 1) return Sexp(SexpList{std::move(name)});
    return Sexp({std::move(name), std::move(*init)});
  }

  Sexp let(const Sexp& x, const Env& env, int depth, bool rename) {
    const bool named = x.size() >= 4 && x[1].is_symbol();
    const std::size_t bindings_at = named ? 2 : 1;
    if (x.size() < bindings_at + 2 || !binding_list(x[bindings_at]))
      return generic(x, env, depth, Quote{}, rename);

    Env inner = env;
    SexpList out{x[0]};
    if (named) out.push_back(bind_sexp(x[1], inner, depth, rename));
    SexpList bindings;
    for (const Sexp& b : x[bindings_at].items()) {
      std::optional<Sexp> init;
      if (b.size() == 2) init = staged(b[1], env, depth, Quote{}, rename);
      bindings.push_back(binding(bind_sexp(b[0], inner, depth, rename), b, init));
    }
    out.push_back(Sexp(std::move(bindings)));
    for (Sexp& form : body(x.items().subspan(bindings_at + 1), inner, depth + 1, rename))
      out.push_back(std::move(form));
    return Sexp(std::move(out));
  }

  Sexp let_star(const Sexp& x, const Env& env, int depth, bool rename) {
    if (x.size() < 3 || !binding_list(x[1])) return generic(x, env, depth, Quote{}, rename);
    Env inner = env;
    SexpList bindings;
    for (const Sexp& b : x[1].items()) {
      std::optional<Sexp> init;
      if (b.size() == 2) init = staged(b[1], inner, depth, Quote{}, rename);
      bindings.push_back(binding(bind_sexp(b[0], inner, depth, rename), b, init));
    }
    SexpList out{x[0], Sexp(std::move(bindings))};
    for (Sexp& form : body(x.items().subspan(2), inner, depth + 1, rename))
      out.push_back(std::move(form));
    return Sexp(std::move(out));
  }

  Sexp letrec(const Sexp& x, const Env& env, int depth, bool rename) {
    if (x.size() < 3 || !binding_list(x[1])) return generic(x, env, depth, Quote{}, rename);
    Env inner = env;
    SexpList names;
    for (const Sexp& b : x[1].items()) names.push_back(bind_sexp(b[0], inner, depth, rename));
    SexpList bindings;
    for (std::size_t i = 0; i < x[1].size(); ++i) {
      const Sexp& b = x[1][i];
      std::optional<Sexp> init;
      if (b.size() == 2) init = staged(b[1], inner, depth + 1, Quote{}, rename);
      bindings.push_back(binding(names[i], b, init));
    }
    SexpList out{x[0], Sexp(std::move(bindings))};
    for (Sexp& form : body(x.items().subspan(2), inner, depth + 1, rename))
      out.push_back(std::move(form));
    return Sexp(std::move(out));
  }

  // The defined name itself was bound by the enclosing body's scan.
  Sexp define(const Sexp& x, const Env& env, int depth, bool rename) {
    if (x.size() < 2) return generic(x, env, depth, Quote{}, rename);
    const Sexp& target = x[1];
    if (target.is_symbol()) {
      SexpList out{x[0], lookup(target, env)};
      for (const Sexp& rest : x.items().subspan(2))
        out.push_back(staged(rest, env, depth, Quote{}, rename));
      return Sexp(std::move(out));
    }
    if (!target.is_list() || target.size() == 0 || !target[0].is_symbol() || x.size() < 3)
      return generic(x, env, depth, Quote{}, rename);

    Env inner = env;
    auto params = formals(Sexp(SexpList(target.items().begin() + 1, target.items().end())),
                          inner, depth, rename);
    if (!params) return generic(x, env, depth, Quote{}, rename);
    SexpList head{lookup(target[0], env)};
    for (const Sexp& p : params->items()) head.push_back(p);
    SexpList out{x[0], Sexp(std::move(head))};
    for (Sexp& form : body(x.items().subspan(2), inner, depth + 1, rename))
      out.push_back(std::move(form));
    return Sexp(std::move(out));
  }

  std::string tag_;
};

void collect_into(const Sexp& x, std::vector<RawEscape>& out) {
  if (!x.is_list()) return;
  if (auto kind = escape_kind(x)) {
    out.push_back(parse_escape(x, *kind));
    return;
  }
  for (const Sexp& item : x.items()) collect_into(item, out);
}

Template::Node build_node(const Sexp& x, std::size_t& next) {
  using Node = Template::Node;
  if (auto kind = escape_kind(x)) {
    RawEscape raw = parse_escape(x, *kind);
    Node hole;
    hole.kind = Node::Kind::Hole;
    hole.index = next++;
    hole.splicing = raw.splicing();
    return hole;
  }
  Node node;
  node.constant = x;
  if (!x.is_list()) return node;
  const std::size_t before = next;
  std::vector<Node> children;
  children.reserve(x.size());
  for (const Sexp& item : x.items()) children.push_back(build_node(item, next));
  if (next != before) {
    node.kind = Node::Kind::List;
    node.children = std::move(children);
    node.constant = Sexp();
  }
  return node;
}

Sexp apply_node(const Template::Node& node, std::span<const Sexp> args) {
  using Kind = Template::Node::Kind;
  switch (node.kind) {
    case Kind::Constant:
      return node.constant;
    case Kind::Hole:
      if (node.splicing) throw Error("ungexp-splicing outside of a list");
      return args[node.index];
    case Kind::List:
      break;
  }
  SexpList out;
  out.reserve(node.children.size());
  for (const auto& child : node.children) {
    if (child.kind == Kind::Hole && child.splicing) {
      const Sexp& arg = args[child.index];
      if (!arg.is_list())
        throw Error("ungexp-splicing of a non-list: " + print_canonical(arg));
      for (const Sexp& item : arg.items()) out.push_back(item);
    } else {
      out.push_back(apply_node(child, args));
    }
  }
  return Sexp(std::move(out));
}

bool payload_is_list(const Payload& p) {
  if (std::holds_alternative<std::vector<Payload>>(p.value)) return true;
  if (auto* s = std::get_if<Sexp>(&p.value)) return s->is_list();
  return false;
}

Sexp resolve(const Payload& p, const SystemTag& system, const Target& target,
             ObjectResolver& resolver) {
  return std::visit(
      [&](const auto& v) -> Sexp {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ObjectRef>) {
          return Sexp::string(resolver.expand(v, system, target));
        } else if constexpr (std::is_same_v<T, Sexp>) {
          return v;
        } else if constexpr (std::is_same_v<T, GexpRef>) {
          return gexp_to_sexp(*v, system, target, resolver);
        } else if constexpr (std::is_same_v<T, OutputName>) {
          return Sexp({Sexp::symbol("getenv"), Sexp::string(v.name)});
        } else {
          SexpList out;
          for (const Payload& item : v) out.push_back(resolve(item, system, target, resolver));
          return Sexp(std::move(out));
        }
      },
      p.value);
}

template <typename Visit>
void walk_nested(const Payload& p, Visit&& visit) {
  if (auto* g = std::get_if<GexpRef>(&p.value)) {
    visit(**g);
  } else if (auto* list = std::get_if<std::vector<Payload>>(&p.value)) {
    for (const Payload& item : *list) walk_nested(item, visit);
  }
}

void inputs_of_payload(const Payload& p, bool native, std::vector<GexpInput>& out);

void inputs_of(const Gexp& g, bool native, std::vector<GexpInput>& out) {
  for (const EscapeRef& e : g.escapes()) inputs_of_payload(e.payload, native || e.native, out);
}

void inputs_of_payload(const Payload& p, bool native, std::vector<GexpInput>& out) {
  if (auto* obj = std::get_if<ObjectRef>(&p.value)) {
    auto same = [&](const GexpInput& in) { return in.object == *obj && in.native == native; };
    if (std::none_of(out.begin(), out.end(), same)) out.push_back({*obj, native});
  } else if (auto* g = std::get_if<GexpRef>(&p.value)) {
    inputs_of(**g, native, out);
  } else if (auto* list = std::get_if<std::vector<Payload>>(&p.value)) {
    for (const Payload& item : *list) inputs_of_payload(item, native, out);
  }
}

template <typename T>
void push_unique(std::vector<T>& out, const T& value) {
  if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
}

void outputs_of(const Gexp& g, std::vector<std::string>& out) {
  for (const auto& name : g.outputs()) push_unique(out, name);
  for (const EscapeRef& e : g.escapes())
    walk_nested(e.payload, [&](const Gexp& nested) { outputs_of(nested, out); });
}

void modules_of(const Gexp& g, std::vector<ModuleName>& out) {
  for (const auto& name : g.imported_modules()) push_unique(out, name);
  for (const EscapeRef& e : g.escapes())
    walk_nested(e.payload, [&](const Gexp& nested) { modules_of(nested, out); });
}

}  // namespace

Template::Template(const Sexp& body, std::size_t arity) : arity_(arity) {
  std::size_t holes = 0;
  root_ = build_node(body, holes);
  if (holes != arity)
    throw Error("template arity " + std::to_string(arity) + " does not match " +
                std::to_string(holes) + " escapes");
}

Sexp Template::apply(std::span<const Sexp> args) const {
  if (args.size() != arity_)
    throw Error("template expects " + std::to_string(arity_) + " arguments, got " +
                std::to_string(args.size()));
  return apply_node(root_, args);
}

Gexp::Gexp(Template tmpl, std::vector<EscapeRef> escapes, std::vector<std::string> outputs,
           std::vector<ModuleName> imported_modules, Digest source_digest)
    : template_(std::move(tmpl)),
      escapes_(std::move(escapes)),
      outputs_(std::move(outputs)),
      modules_(std::move(imported_modules)),
      source_digest_(source_digest) {
  if (template_.arity() != escapes_.size())
    throw Error("gexp template arity does not match its escape count");
}

Sexp alpha_rename(const Sexp& body, const Digest& gexp_digest) {
  return Renamer(gexp_digest.hex().substr(0, 4)).top(body);
}

std::vector<RawEscape> collect_escapes(const Sexp& body) {
  std::vector<RawEscape> out;
  collect_into(body, out);
  return out;
}

Template substitute_escapes(const Sexp& body, std::size_t n) { return Template(body, n); }

GexpRef stage(const Sexp& body, const HostEnvPtr& env, std::vector<ModuleName> imported_modules) {
  const Digest digest = hash_sexp(body);
  const Sexp renamed = alpha_rename(body, digest);
  const std::vector<RawEscape> raw = collect_escapes(renamed);

  std::vector<EscapeRef> escapes;
  std::vector<std::string> outputs;
  escapes.reserve(raw.size());
  for (const RawEscape& r : raw) {
    EscapeRef ref{Payload{}, r.native(), r.splicing()};
    if (r.output) {
      ref.payload.value = OutputName{*r.output};
      push_unique(outputs, *r.output);
    } else {
      ref.payload = to_payload(eval_host(r.expression, env, imported_modules));
    }
    if (ref.splicing && !payload_is_list(ref.payload))
      throw Error("ungexp-splicing requires a list: " + print_canonical(r.expression));
    escapes.push_back(std::move(ref));
  }
  return std::make_shared<const Gexp>(substitute_escapes(renamed, raw.size()),
                                      std::move(escapes), std::move(outputs),
                                      std::move(imported_modules), digest);
}

Sexp gexp_to_sexp(const Gexp& g, const SystemTag& system, const Target& target,
                  ObjectResolver& resolver) {
  std::vector<Sexp> args;
  args.reserve(g.escapes().size());
  for (const EscapeRef& e : g.escapes()) {
    // Nativeness propagates to everything beneath a native escape.
    const Target effective = e.native ? std::nullopt : target;
    args.push_back(resolve(e.payload, system, effective, resolver));
  }
  return g.code().apply(args);
}

std::vector<GexpInput> gexp_inputs(const Gexp& g) {
  std::vector<GexpInput> out;
  inputs_of(g, false, out);
  return out;
}

std::vector<std::string> gexp_outputs(const Gexp& g) {
  std::vector<std::string> out;
  outputs_of(g, out);
  return out;
}

std::vector<ModuleName> gexp_modules(const Gexp& g) {
  std::vector<ModuleName> out;
  modules_of(g, out);
  return out;
}

}  // namespace gexp
