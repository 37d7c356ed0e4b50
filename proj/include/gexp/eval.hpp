#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "gexp/module_name.hpp"
#include "gexp/sexp.hpp"

namespace gexp {

// Small deterministic evaluator for residual build programs.

class EvalError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public EvalError {
 public:
  BudgetExceeded() : EvalError("evaluation step budget exhausted") {}
};

struct Value;
using ValueList = std::vector<Value>;
struct Frame;
using FramePtr = std::shared_ptr<Frame>;
class Evaluator;

struct Closure {
  std::string name;
  Sexp params;
  std::shared_ptr<const SexpList> body;
  FramePtr env;
};

struct Builtin {
  std::string name;
  std::function<Value(Evaluator&, std::span<const Value>)> fn;
};

struct Unspecified {
  bool operator==(const Unspecified&) const = default;
};

struct Value {
  std::variant<Unspecified, Sexp, std::shared_ptr<const ValueList>, std::shared_ptr<const Closure>,
               std::shared_ptr<const Builtin>>
      v;

  Value() = default;
  Value(Sexp atom);
  Value(ValueList items) : v(std::make_shared<const ValueList>(std::move(items))) {}
  static Value string(std::string s) { return Value(Sexp::string(std::move(s))); }
  static Value integer(std::int64_t i) { return Value(Sexp(i)); }
  static Value boolean(bool b) { return Value(Sexp(b)); }

  bool is_list() const { return std::holds_alternative<std::shared_ptr<const ValueList>>(v); }
  bool is_procedure() const;
  bool truthy() const;
  const ValueList& list() const;
  const Sexp& atom() const;
};

// Structural conversion; procedures and unspecified values have no datum.
Value datum_to_value(const Sexp& datum);
Sexp value_to_sexp(const Value& value);
bool values_equal(const Value& a, const Value& b);

struct Frame {
  std::unordered_map<std::string, Value> vars;
  // Internal defines of a body that have not run yet; reading one is an error.
  std::unordered_set<std::string> pending;
  FramePtr parent;
};

// Maps a logical path prefix (e.g. a store prefix) onto the directory that
// backs it.
struct PathMapping {
  std::string logical;
  std::filesystem::path physical;
  bool writable = false;
};

struct EvalEnv {
  // The only variables getenv can observe.
  std::map<std::string, std::string> variables;
  // Directories searched by use-modules; defaults to MODULE_PATH.
  std::vector<std::string> module_path;
  std::vector<PathMapping> mappings;
  // When set, paths outside every mapping are refused.
  bool confined = false;
};

struct EvalOptions {
  std::uint64_t step_budget = 10'000'000;
  std::size_t max_depth = 10'000;
  // Enables system*, which spawns processes with the scrubbed environment.
  bool allow_subprocess = false;
};

class Evaluator {
 public:
  explicit Evaluator(EvalEnv env, EvalOptions options = {});

  // Evaluates forms in order at top level; returns the last value.
  Value run(std::span<const Sexp> forms);
  Value eval(const Sexp& expr);

  std::uint64_t steps() const { return steps_; }
  const EvalEnv& env() const { return env_; }

  // Physical location of a logical path, subject to the mappings.
  std::filesystem::path resolve_path(const std::string& logical, bool for_write) const;

 private:
  Value eval_in(Sexp x, FramePtr frame, std::size_t depth);
  Value apply(const Value& f, std::span<const Value> args, std::size_t depth);
  FramePtr bind_params(const Closure& c, std::span<const Value> args);
  void use_module(const ModuleName& name, Frame& into, std::size_t depth);
  void step();

  EvalEnv env_;
  EvalOptions options_;
  FramePtr globals_;
  FramePtr top_;
  std::uint64_t steps_ = 0;
  std::map<ModuleName, FramePtr> modules_;
  std::vector<ModuleName> loading_;
};

Value mini_eval(const Sexp& program, EvalEnv env = {}, EvalOptions options = {});

}  // namespace gexp
