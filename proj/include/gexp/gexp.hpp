#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gexp/module_name.hpp"
#include "gexp/object.hpp"
#include "gexp/sexp.hpp"

namespace gexp {

class Gexp;
using GexpRef = std::shared_ptr<const Gexp>;

class HostEnv;
using HostEnvPtr = std::shared_ptr<HostEnv>;

struct OutputName {
  std::string name;
  bool operator==(const OutputName&) const = default;
};

// The evaluated value behind one escape.
struct Payload {
  std::variant<ObjectRef, Sexp, GexpRef, std::vector<Payload>, OutputName> value;
};

struct EscapeRef {
  Payload payload;
  bool native = false;
  bool splicing = false;
};

enum class EscapeKind { Ungexp, UngexpSplicing, UngexpNative, UngexpNativeSplicing };

// One escape form as found in staged code, before its host expression runs.
struct RawEscape {
  EscapeKind kind;
  Sexp expression;
  // Set for `(ungexp output)` / `(ungexp output "name")`.
  std::optional<std::string> output;

  bool native() const {
    return kind == EscapeKind::UngexpNative || kind == EscapeKind::UngexpNativeSplicing;
  }
  bool splicing() const {
    return kind == EscapeKind::UngexpSplicing || kind == EscapeKind::UngexpNativeSplicing;
  }
};

// Residual body with holes at escape positions. Application rebuilds only
// the spine leading to holes; escape-free subtrees are shared as-is.
class Template {
 public:
  Template(const Sexp& body, std::size_t arity);

  std::size_t arity() const { return arity_; }
  Sexp apply(std::span<const Sexp> args) const;

  struct Node {
    enum class Kind { Constant, Hole, List } kind = Kind::Constant;
    Sexp constant;
    std::size_t index = 0;
    bool splicing = false;
    std::vector<Node> children;
  };

 private:
  Node root_;
  std::size_t arity_;
};

class Gexp {
 public:
  Gexp(Template tmpl, std::vector<EscapeRef> escapes, std::vector<std::string> outputs,
       std::vector<ModuleName> imported_modules, Digest source_digest);

  const Template& code() const { return template_; }
  const std::vector<EscapeRef>& escapes() const { return escapes_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const std::vector<ModuleName>& imported_modules() const { return modules_; }
  const Digest& source_digest() const { return source_digest_; }

 private:
  Template template_;
  std::vector<EscapeRef> escapes_;
  std::vector<std::string> outputs_;
  std::vector<ModuleName> modules_;
  Digest source_digest_;
};

// Turns lowerable objects into the text that replaces them in residual code.
class ObjectResolver {
 public:
  virtual ~ObjectResolver() = default;
  virtual std::string expand(const ObjectRef& object, const SystemTag& system,
                             const Target& target) = 0;
};

struct GexpInput {
  ObjectRef object;
  bool native = false;
};

// Pass 1: deterministic alpha-renaming of staged binders.
Sexp alpha_rename(const Sexp& body, const Digest& gexp_digest);
// Pass 2: escapes at gexp level 1, left to right, depth first.
std::vector<RawEscape> collect_escapes(const Sexp& body);
// Pass 3: the code-generation template of arity n.
Template substitute_escapes(const Sexp& body, std::size_t n);

// Runs the three passes over the body of a `(gexp …)` form, evaluating each
// escape's host expression in `env`.
GexpRef stage(const Sexp& body, const HostEnvPtr& env,
              std::vector<ModuleName> imported_modules = {});

Sexp gexp_to_sexp(const Gexp& g, const SystemTag& system, const Target& target,
                  ObjectResolver& resolver);

std::vector<GexpInput> gexp_inputs(const Gexp& g);
std::vector<std::string> gexp_outputs(const Gexp& g);
// Imported modules of g and of every nested gexp, first occurrence order.
std::vector<ModuleName> gexp_modules(const Gexp& g);

}  // namespace gexp
