#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "gexp/gexp.hpp"
#include "gexp/store.hpp"

namespace gexp {

class Package : public Object {
 public:
  Package(std::string name, std::string version, GexpRef build,
          std::vector<std::string> outputs = {"out"},
          std::map<std::string, std::string> metadata = {});

  static constexpr const char* kTag = "package";
  std::string type_tag() const override { return kTag; }
  std::string describe() const override;

  const std::string& name() const { return name_; }
  const std::string& version() const { return version_; }
  // `<name>-<version>`, or just the name when there is no version.
  std::string full_name() const;
  const GexpRef& build() const { return build_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

 private:
  std::string name_;
  std::string version_;
  GexpRef build_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::string> metadata_;
};

class LocalFile : public Object {
 public:
  LocalFile(std::filesystem::path path, std::string name);

  static constexpr const char* kTag = "local-file";
  std::string type_tag() const override { return kTag; }
  std::string describe() const override;

  const std::filesystem::path& path() const { return path_; }
  const std::string& name() const { return name_; }

 private:
  std::filesystem::path path_;
  std::string name_;
};

class PlainFile : public Object {
 public:
  PlainFile(std::string name, std::string content);

  static constexpr const char* kTag = "plain-file";
  std::string type_tag() const override { return kTag; }

  const std::string& name() const { return name_; }
  const std::string& content() const { return content_; }

 private:
  std::string name_;
  std::string content_;
};

class FileAppend : public Object {
 public:
  FileAppend(ObjectRef base, std::vector<std::string> suffixes);

  static constexpr const char* kTag = "file-append";
  std::string type_tag() const override { return kTag; }

  const ObjectRef& base() const { return base_; }
  const std::vector<std::string>& suffixes() const { return suffixes_; }

 private:
  ObjectRef base_;
  std::vector<std::string> suffixes_;
};

struct LoweredDerivation {
  StorePath drv_path;
  Derivation drv;
};

// Result of lowering: a plain store item or a derivation.
using Lowered = std::variant<StorePath, LoweredDerivation>;

class Lowerer;

struct GexpCompiler {
  std::string type_tag;
  std::function<Lowered(const Object&, Lowerer&, const SystemTag&, const Target&)> lower;
  // Optional; the default renders the lowered item's store path.
  std::function<std::string(const Object&, const Lowered&, Lowerer&)> expand;
};

class CompilerRegistry {
 public:
  // Registry holding the package, local-file, plain-file and file-append
  // compilers.
  static CompilerRegistry with_builtins();

  void register_compiler(GexpCompiler compiler);
  // Throws when no compiler handles `type_tag`.
  const GexpCompiler& find(const std::string& type_tag) const;
  bool contains(const std::string& type_tag) const { return compilers_.count(type_tag) != 0; }

 private:
  std::map<std::string, GexpCompiler> compilers_;
};

// Store path a lowered item stands for by default: the item itself, or the
// "out" output of a derivation (first output when there is no "out").
std::string default_expansion(const Lowered& lowered);

// Lowers objects against one store, caching per (object, system, target).
// Also serves as the resolver for gexp_to_sexp.
class Lowerer : public ObjectResolver {
 public:
  Lowerer(Store& store, const CompilerRegistry& registry,
          std::vector<std::filesystem::path> module_path = {});

  Lowered lower_object(const ObjectRef& object, const SystemTag& system, const Target& target);
  std::string expand_object(const ObjectRef& object, const Lowered& lowered);
  std::string expand(const ObjectRef& object, const SystemTag& system,
                     const Target& target) override;

  Store& store() { return store_; }
  const CompilerRegistry& registry() const { return registry_; }
  const std::vector<std::filesystem::path>& module_path() const { return module_path_; }

 private:
  using Key = std::tuple<const Object*, std::string, std::string>;

  Store& store_;
  const CompilerRegistry& registry_;
  std::vector<std::filesystem::path> module_path_;
  std::mutex mutex_;
  std::map<Key, std::pair<ObjectRef, Lowered>> cache_;
};

}  // namespace gexp
