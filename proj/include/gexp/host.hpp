#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gexp/gexp.hpp"

namespace gexp {

// Host stratum: the code that builds gexps, as opposed to the staged code
// inside them.

struct HostValue;
using HostList = std::vector<HostValue>;

struct HostProcedure {
  std::string name;
  std::function<HostValue(std::span<const HostValue>)> call;
};
using HostProcedureRef = std::shared_ptr<const HostProcedure>;

struct HostValue {
  std::variant<Sexp, ObjectRef, GexpRef, HostList, HostProcedureRef> value;

  HostValue() : value(Sexp()) {}
  HostValue(Sexp s) : value(std::move(s)) {}
  HostValue(ObjectRef o) : value(std::move(o)) {}
  HostValue(GexpRef g) : value(std::move(g)) {}
  HostValue(HostList l) : value(std::move(l)) {}
  HostValue(HostProcedureRef p) : value(std::move(p)) {}

  template <typename T>
  const T* get_if() const { return std::get_if<T>(&value); }
};

HostProcedureRef make_procedure(std::string name,
                                std::function<HostValue(std::span<const HostValue>)> fn);

class UnboundVariable : public Error {
 public:
  explicit UnboundVariable(const std::string& name)
      : Error("unbound variable: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class HostEnv {
 public:
  explicit HostEnv(HostEnvPtr parent = nullptr) : parent_(std::move(parent)) {}

  static HostEnvPtr make(HostEnvPtr parent = nullptr) {
    return std::make_shared<HostEnv>(std::move(parent));
  }

  void define(std::string name, HostValue value);
  // Throws UnboundVariable; never falls back to a default.
  const HostValue& lookup(std::string_view name) const;
  bool contains(std::string_view name) const;

 private:
  HostEnvPtr parent_;
  std::map<std::string, HostValue, std::less<>> bindings_;
};

// Evaluates a host expression. `(gexp …)` forms stage immediately, carrying
// the imported modules in effect.
HostValue eval_host(const Sexp& expr, const HostEnvPtr& env,
                    const std::vector<ModuleName>& imported_modules = {});

Payload to_payload(const HostValue& value);

struct HostOptions {
  // Relative local-file paths resolve against this directory.
  std::filesystem::path base_dir = ".";
  std::vector<std::filesystem::path> module_path;
};

// local-file, plain-file, file-append, package, list, string-append,
// source-module-closure.
void install_host_builtins(HostEnv& env, const HostOptions& options);

}  // namespace gexp
