#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gexp/object.hpp"
#include "gexp/sexp.hpp"

namespace gexp {

// Nix-style base32 over the alphabet 0123456789abcdfghijklmnpqrsvwxyz.
std::string base32_encode(std::span<const std::uint8_t> bytes);

bool valid_store_name(std::string_view name);

// `<prefix>/<hash32>-<name>`
class StorePath {
 public:
  StorePath(std::string prefix, std::string hash32, std::string name);

  // hash32 = base32 of the first 20 bytes of SHA-256(fingerprint).
  static StorePath from_fingerprint(std::string prefix, std::string_view fingerprint,
                                    std::string name);
  static std::optional<StorePath> parse(std::string_view prefix, std::string_view text);

  const std::string& prefix() const { return prefix_; }
  const std::string& hash32() const { return hash32_; }
  const std::string& name() const { return name_; }
  // Last path component, `<hash32>-<name>`.
  std::string base_name() const { return hash32_ + "-" + name_; }
  std::string str() const { return prefix_ + "/" + base_name(); }

  bool operator==(const StorePath&) const = default;
  auto operator<=>(const StorePath& other) const { return str() <=> other.str(); }

 private:
  std::string prefix_;
  std::string hash32_;
  std::string name_;
};

// Store paths mentioned in `text`, in order of first appearance.
std::vector<StorePath> scan_store_references(std::string_view text, std::string_view prefix);

struct InputDrv {
  StorePath drv;
  std::vector<std::string> outputs;
};

struct Derivation {
  std::string name;
  SystemTag system = default_system();
  Target target;
  std::optional<StorePath> builder;
  std::vector<InputDrv> input_drvs;
  std::vector<StorePath> input_sources;
  std::map<std::string, StorePath> outputs;
  std::map<std::string, std::string> env;

  // Store path of an output; throws for unknown names.
  const StorePath& output(const std::string& name) const;
};

// Sorts and deduplicates the input lists, as serialization expects.
void normalize(Derivation& d);

// Canonical serialization. With `blank_outputs`, output paths and the env
// entries naming outputs are emptied, which is what output hashing sees.
Sexp derivation_to_sexp(const Derivation& d, bool blank_outputs = false);
std::string serialize_derivation(const Derivation& d);
Derivation parse_derivation(std::string_view text, std::string_view prefix);

// Output path computed from the blanked derivation text.
StorePath output_path(const Derivation& d, const std::string& output_name,
                      const std::string& prefix);

// Fills `d.outputs` and the matching env entries for every output name.
void assign_output_paths(Derivation& d, const std::vector<std::string>& output_names,
                         const std::string& prefix);

// Flat content-addressed directory. The logical prefix is what appears in
// store paths; the root is where items physically live.
class Store {
 public:
  explicit Store(std::filesystem::path root, std::string prefix = {});

  const std::string& prefix() const { return prefix_; }
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path physical(const StorePath& p) const { return root_ / p.base_name(); }
  std::optional<StorePath> parse_path(std::string_view text) const {
    return StorePath::parse(prefix_, text);
  }
  bool exists(const StorePath& p) const;

  StorePath intern_file(std::string_view bytes, const std::string& name);
  // Directory item; `files` maps relative paths to contents. Content
  // addressed over the sorted (path, content) pairs.
  StorePath intern_directory(const std::map<std::string, std::string>& files,
                             const std::string& name);

  StorePath write_derivation(Derivation d);
  Derivation read_derivation(const StorePath& drv_path) const;
  std::string read_file(const StorePath& p) const;

  // Moves a finished build output into place and makes it read-only.
  void install(const std::filesystem::path& from, const StorePath& to);

  // Unique scratch directory on the store's filesystem.
  std::filesystem::path make_temp_dir(std::string_view tag) const;

  // Number of items actually written (not found already present).
  std::size_t write_count() const { return writes_.load(); }

 private:
  StorePath write_atomically(const StorePath& target, std::string_view bytes);

  std::filesystem::path root_;
  std::string prefix_;
  std::atomic<std::size_t> writes_{0};
};

// Recursively clears write permission bits.
void make_read_only(const std::filesystem::path& p);

}  // namespace gexp
