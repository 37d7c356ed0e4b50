#include "gexp/lowerable.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gexp/derive.hpp"

namespace gexp {

namespace fs = std::filesystem;

Package::Package(std::string name, std::string version, GexpRef build,
                 std::vector<std::string> outputs, std::map<std::string, std::string> metadata)
    : name_(std::move(name)),
      version_(std::move(version)),
      build_(std::move(build)),
      outputs_(std::move(outputs)),
      metadata_(std::move(metadata)) {
  if (name_.empty()) throw Error("package name must not be empty");
  if (!build_) throw Error("package " + name_ + " has no build gexp");
  if (outputs_.empty()) outputs_ = {"out"};
  for (const auto& out : gexp_outputs(*build_)) {
    if (std::find(outputs_.begin(), outputs_.end(), out) == outputs_.end())
      throw Error("package " + name_ + " builds undeclared output '" + out + "'");
  }
}

std::string Package::full_name() const {
  return version_.empty() ? name_ : name_ + "-" + version_;
}

std::string Package::describe() const { return "#<package " + full_name() + ">"; }

LocalFile::LocalFile(fs::path path, std::string name)
    : path_(std::move(path)), name_(std::move(name)) {
  if (name_.empty()) name_ = path_.filename().string();
  if (!valid_store_name(name_)) throw Error("invalid local-file name '" + name_ + "'");
}

std::string LocalFile::describe() const {
  return "#<local-file " + path_.string() + " " + name_ + ">";
}

PlainFile::PlainFile(std::string name, std::string content)
    : name_(std::move(name)), content_(std::move(content)) {
  if (!valid_store_name(name_)) throw Error("invalid plain-file name '" + name_ + "'");
}

FileAppend::FileAppend(ObjectRef base, std::vector<std::string> suffixes)
    : base_(std::move(base)), suffixes_(std::move(suffixes)) {
  if (!base_) throw Error("file-append needs a base object");
}

namespace {

std::string read_local(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read local file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GexpCompiler package_compiler() {
  return {Package::kTag,
          [](const Object& o, Lowerer& lowerer, const SystemTag& system, const Target& target) {
            const auto& pkg = static_cast<const Package&>(o);
            DerivationOptions options;
            options.outputs = pkg.outputs();
            return Lowered(gexp_to_derivation(lowerer, pkg.full_name(), *pkg.build(), system,
                                              target, options));
          },
          nullptr};
}

GexpCompiler local_file_compiler() {
  return {LocalFile::kTag,
          [](const Object& o, Lowerer& lowerer, const SystemTag&, const Target&) {
            const auto& file = static_cast<const LocalFile&>(o);
            return Lowered(lowerer.store().intern_file(read_local(file.path()), file.name()));
          },
          nullptr};
}

GexpCompiler plain_file_compiler() {
  return {PlainFile::kTag,
          [](const Object& o, Lowerer& lowerer, const SystemTag&, const Target&) {
            const auto& file = static_cast<const PlainFile&>(o);
            return Lowered(lowerer.store().intern_file(file.content(), file.name()));
          },
          nullptr};
}

GexpCompiler file_append_compiler() {
  return {FileAppend::kTag,
          [](const Object& o, Lowerer& lowerer, const SystemTag& system, const Target& target) {
            return lowerer.lower_object(static_cast<const FileAppend&>(o).base(), system, target);
          },
          [](const Object& o, const Lowered& lowered, Lowerer& lowerer) {
            const auto& append = static_cast<const FileAppend&>(o);
            std::string out = lowerer.expand_object(append.base(), lowered);
            for (const auto& suffix : append.suffixes()) out += suffix;
            return out;
          }};
}

}  // namespace

CompilerRegistry CompilerRegistry::with_builtins() {
  CompilerRegistry r;
  r.register_compiler(package_compiler());
  r.register_compiler(local_file_compiler());
  r.register_compiler(plain_file_compiler());
  r.register_compiler(file_append_compiler());
  return r;
}

void CompilerRegistry::register_compiler(GexpCompiler compiler) {
  if (!compiler.lower) throw Error("gexp compiler for '" + compiler.type_tag + "' has no lower");
  std::string tag = compiler.type_tag;
  if (!compilers_.emplace(tag, std::move(compiler)).second)
    throw Error("a gexp compiler for '" + tag + "' is already registered");
}

const GexpCompiler& CompilerRegistry::find(const std::string& type_tag) const {
  auto it = compilers_.find(type_tag);
  if (it == compilers_.end()) throw Error("no gexp compiler for objects of type '" + type_tag + "'");
  return it->second;
}

std::string default_expansion(const Lowered& lowered) {
  if (auto* p = std::get_if<StorePath>(&lowered)) return p->str();
  const auto& d = std::get<LoweredDerivation>(lowered).drv;
  auto it = d.outputs.find("out");
  if (it == d.outputs.end()) it = d.outputs.begin();
  if (it == d.outputs.end()) throw Error("derivation " + d.name + " has no outputs");
  return it->second.str();
}

Lowerer::Lowerer(Store& store, const CompilerRegistry& registry,
                 std::vector<fs::path> module_path)
    : store_(store), registry_(registry), module_path_(std::move(module_path)) {}

Lowered Lowerer::lower_object(const ObjectRef& object, const SystemTag& system,
                              const Target& target) {
  if (!object) throw Error("cannot lower a null object");
  Key key{object.get(), system.str(), target ? target->str() : std::string()};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second.second;
  }
  // Lowering may recurse into this lowerer, so the lock is not held here.
  Lowered result = registry_.find(object->type_tag()).lower(*object, *this, system, target);
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(key, object, std::move(result)).first->second.second;
}

std::string Lowerer::expand_object(const ObjectRef& object, const Lowered& lowered) {
  const GexpCompiler& compiler = registry_.find(object->type_tag());
  if (compiler.expand) return compiler.expand(*object, lowered, *this);
  return default_expansion(lowered);
}

std::string Lowerer::expand(const ObjectRef& object, const SystemTag& system,
                            const Target& target) {
  return expand_object(object, lower_object(object, system, target));
}

}  // namespace gexp
