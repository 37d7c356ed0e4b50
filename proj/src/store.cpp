#include "gexp/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <thread>

namespace gexp {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kBase32Chars = "0123456789abcdfghijklmnpqrsvwxyz";
constexpr std::size_t kHashBytes = 20;

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '+' || c == '.' || c == '_' || c == '=' || c == '-';
}

bool is_base32_char(char c) { return kBase32Chars.find(c) != std::string_view::npos; }

std::string read_whole(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_whole(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error("write failed: " + p.string());
}

std::string unique_suffix() {
  thread_local std::mt19937_64 rng(std::random_device{}() ^
                                   std::hash<std::thread::id>{}(std::this_thread::get_id()));
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s = std::to_string(::getpid()) + "-";
  auto v = rng();
  for (int i = 0; i < 16; ++i, v >>= 4) s += kHex[v & 0xf];
  return s;
}

Sexp string_pair(const std::string& a, const std::string& b) {
  return Sexp({Sexp::string(a), Sexp::string(b)});
}

const Sexp& field(const Sexp& form, std::size_t i, std::string_view name) {
  if (i >= form.size() || !form[i].is_form(name))
    throw Error("malformed derivation: expected field '" + std::string(name) + "'");
  return form[i];
}

const std::string& field_string(const Sexp& form, std::size_t i, std::string_view name) {
  const Sexp& f = field(form, i, name);
  if (f.size() != 2 || !f[1].is_string())
    throw Error("malformed derivation field '" + std::string(name) + "'");
  return f[1].string_text();
}

}  // namespace

std::string base32_encode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return {};
  const std::size_t len = (bytes.size() * 8 - 1) / 5 + 1;
  std::string out;
  out.reserve(len);
  for (std::size_t n = len; n-- > 0;) {
    const std::size_t b = n * 5;
    const std::size_t i = b / 8;
    const std::size_t j = b % 8;
    unsigned c = bytes[i] >> j;
    if (i + 1 < bytes.size()) c |= static_cast<unsigned>(bytes[i + 1]) << (8 - j);
    out += kBase32Chars[c & 0x1f];
  }
  return out;
}

bool valid_store_name(std::string_view name) {
  return !name.empty() && name[0] != '.' && std::all_of(name.begin(), name.end(), is_name_char);
}

StorePath::StorePath(std::string prefix, std::string hash32, std::string name)
    : prefix_(std::move(prefix)), hash32_(std::move(hash32)), name_(std::move(name)) {
  if (hash32_.size() != 32 || !std::all_of(hash32_.begin(), hash32_.end(), is_base32_char))
    throw Error("invalid store hash: " + hash32_);
  if (!valid_store_name(name_)) throw Error("invalid store name: '" + name_ + "'");
}

StorePath StorePath::from_fingerprint(std::string prefix, std::string_view fingerprint,
                                      std::string name) {
  const Digest d = sha256(fingerprint);
  return StorePath(std::move(prefix),
                   base32_encode(std::span(d.bytes).first(kHashBytes)), std::move(name));
}

std::optional<StorePath> StorePath::parse(std::string_view prefix, std::string_view text) {
  if (text.size() < prefix.size() + 1 + 32 + 2) return std::nullopt;
  if (text.substr(0, prefix.size()) != prefix || text[prefix.size()] != '/') return std::nullopt;
  std::string_view rest = text.substr(prefix.size() + 1);
  if (rest[32] != '-') return std::nullopt;
  std::string_view hash = rest.substr(0, 32);
  std::string_view name = rest.substr(33);
  if (!std::all_of(hash.begin(), hash.end(), is_base32_char) || !valid_store_name(name))
    return std::nullopt;
  return StorePath(std::string(prefix), std::string(hash), std::string(name));
}

std::vector<StorePath> scan_store_references(std::string_view text, std::string_view prefix) {
  std::vector<StorePath> out;
  const std::string needle = std::string(prefix) + "/";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    std::size_t start = pos + needle.size();
    pos = start;
    if (text.size() < start + 33) continue;
    std::string_view hash = text.substr(start, 32);
    if (!std::all_of(hash.begin(), hash.end(), is_base32_char) || text[start + 32] != '-')
      continue;
    std::size_t end = start + 33;
    while (end < text.size() && is_name_char(text[end])) ++end;
    std::string_view name = text.substr(start + 33, end - start - 33);
    if (!valid_store_name(name)) continue;
    StorePath p{std::string(prefix), std::string(hash), std::string(name)};
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
    pos = end;
  }
  return out;
}

const StorePath& Derivation::output(const std::string& out_name) const {
  auto it = outputs.find(out_name);
  if (it == outputs.end())
    throw Error("derivation " + name + " has no output '" + out_name + "'");
  return it->second;
}

void normalize(Derivation& d) {
  std::map<StorePath, std::vector<std::string>> drvs;
  for (auto& in : d.input_drvs) {
    auto& outs = drvs.try_emplace(in.drv).first->second;
    outs.insert(outs.end(), in.outputs.begin(), in.outputs.end());
  }
  d.input_drvs.clear();
  for (auto& [path, outs] : drvs) {
    std::sort(outs.begin(), outs.end());
    outs.erase(std::unique(outs.begin(), outs.end()), outs.end());
    d.input_drvs.push_back({path, outs});
  }
  std::sort(d.input_sources.begin(), d.input_sources.end());
  d.input_sources.erase(std::unique(d.input_sources.begin(), d.input_sources.end()),
                        d.input_sources.end());
}

Sexp derivation_to_sexp(const Derivation& d, bool blank_outputs) {
  Derivation n = d;
  normalize(n);
  auto sym = [](const char* s) { return Sexp::symbol(s); };

  SexpList drvs{sym("input-drvs")};
  for (const auto& in : n.input_drvs) {
    SexpList outs;
    for (const auto& o : in.outputs) outs.push_back(Sexp::string(o));
    drvs.push_back(Sexp({Sexp::string(in.drv.str()), Sexp(std::move(outs))}));
  }
  SexpList sources{sym("input-sources")};
  for (const auto& s : n.input_sources) sources.push_back(Sexp::string(s.str()));
  SexpList outputs{sym("outputs")};
  for (const auto& [name, path] : n.outputs)
    outputs.push_back(string_pair(name, blank_outputs ? "" : path.str()));
  SexpList env{sym("env")};
  for (const auto& [key, value] : n.env) {
    const bool is_output = n.outputs.count(key) != 0;
    env.push_back(string_pair(key, blank_outputs && is_output ? "" : value));
  }

  return Sexp({
      sym("derivation"),
      Sexp({sym("name"), Sexp::string(n.name)}),
      Sexp({sym("system"), Sexp::string(n.system.str())}),
      Sexp({sym("target"), n.target ? Sexp::string(n.target->str()) : Sexp(false)}),
      Sexp({sym("builder"), Sexp::string(n.builder ? n.builder->str() : "")}),
      Sexp(std::move(drvs)),
      Sexp(std::move(sources)),
      Sexp(std::move(outputs)),
      Sexp(std::move(env)),
  });
}

std::string serialize_derivation(const Derivation& d) {
  return print_canonical(derivation_to_sexp(d));
}

Derivation parse_derivation(std::string_view text, std::string_view prefix) {
  const Sexp form = read(text);
  if (!form.is_form("derivation") || form.size() != 9)
    throw Error("not a derivation");
  auto path = [&](const Sexp& s) {
    if (!s.is_string()) throw Error("malformed derivation: expected a store path string");
    auto p = StorePath::parse(prefix, s.string_text());
    if (!p) throw Error("malformed derivation: not a store path: " + s.string_text());
    return *p;
  };

  Derivation d;
  d.name = field_string(form, 1, "name");
  d.system = SystemTag(field_string(form, 2, "system"));
  const Sexp& target = field(form, 3, "target");
  if (target.size() != 2) throw Error("malformed derivation field 'target'");
  if (target[1].is_string()) d.target = SystemTag(target[1].string_text());
  d.builder = path(Sexp::string(field_string(form, 4, "builder")));
  for (const Sexp& in : field(form, 5, "input-drvs").items().subspan(1)) {
    if (!in.is_list() || in.size() != 2 || !in[1].is_list())
      throw Error("malformed derivation input");
    InputDrv drv{path(in[0]), {}};
    for (const Sexp& o : in[1].items()) drv.outputs.push_back(o.string_text());
    d.input_drvs.push_back(std::move(drv));
  }
  for (const Sexp& s : field(form, 6, "input-sources").items().subspan(1))
    d.input_sources.push_back(path(s));
  for (const Sexp& o : field(form, 7, "outputs").items().subspan(1)) {
    if (!o.is_list() || o.size() != 2) throw Error("malformed derivation output");
    d.outputs.emplace(o[0].string_text(), path(o[1]));
  }
  for (const Sexp& e : field(form, 8, "env").items().subspan(1)) {
    if (!e.is_list() || e.size() != 2) throw Error("malformed derivation env entry");
    d.env[e[0].string_text()] = e[1].string_text();
  }
  return d;
}

StorePath output_path(const Derivation& d, const std::string& output_name,
                      const std::string& prefix) {
  if (d.outputs.count(output_name) == 0)
    throw Error("derivation " + d.name + " has no output '" + output_name + "'");
  const std::string blank = print_canonical(derivation_to_sexp(d, true));
  const std::string fingerprint =
      "output:" + output_name + ":sha256:" + sha256(blank).hex() + ":" + d.name;
  const std::string name = output_name == "out" ? d.name : d.name + "-" + output_name;
  return StorePath::from_fingerprint(prefix, fingerprint, name);
}

void assign_output_paths(Derivation& d, const std::vector<std::string>& output_names,
                         const std::string& prefix) {
  if (output_names.empty()) throw Error("derivation " + d.name + " declares no outputs");
  const StorePath placeholder(prefix, std::string(32, '0'), d.name);
  d.outputs.clear();
  for (const auto& name : output_names) {
    d.outputs.insert_or_assign(name, placeholder);
    d.env[name] = "";
  }
  std::map<std::string, StorePath> computed;
  for (const auto& name : output_names) computed.insert_or_assign(name, output_path(d, name, prefix));
  for (const auto& [name, path] : computed) {
    d.outputs.insert_or_assign(name, path);
    d.env[name] = path.str();
  }
}

Store::Store(fs::path root, std::string prefix) : root_(std::move(root)), prefix_(std::move(prefix)) {
  if (prefix_.empty()) prefix_ = root_.string();
  while (prefix_.size() > 1 && prefix_.back() == '/') prefix_.pop_back();
  fs::create_directories(root_);
}

bool Store::exists(const StorePath& p) const {
  std::error_code ec;
  return fs::exists(physical(p), ec);
}

StorePath Store::write_atomically(const StorePath& target, std::string_view bytes) {
  if (exists(target)) return target;
  const fs::path tmp = root_ / (".tmp-" + unique_suffix());
  write_whole(tmp, bytes);
  fs::permissions(tmp, fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read);
  std::error_code ec;
  fs::rename(tmp, physical(target), ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot add " + target.str() + " to the store: " + ec.message());
  }
  ++writes_;
  return target;
}

StorePath Store::intern_file(std::string_view bytes, const std::string& name) {
  if (!valid_store_name(name)) throw Error("invalid store name: '" + name + "'");
  const std::string fingerprint = "source:sha256:" + sha256(bytes).hex() + ":" + name;
  return write_atomically(StorePath::from_fingerprint(prefix_, fingerprint, name), bytes);
}

StorePath Store::intern_directory(const std::map<std::string, std::string>& files,
                                  const std::string& name) {
  if (!valid_store_name(name)) throw Error("invalid store name: '" + name + "'");
  std::string blob;
  for (const auto& [rel, content] : files) {
    blob += rel;
    blob += '\n';
    blob += content;
    blob += '\n';
  }
  const std::string fingerprint = "source:sha256:" + sha256(blob).hex() + ":" + name;
  const StorePath target = StorePath::from_fingerprint(prefix_, fingerprint, name);
  if (exists(target)) return target;

  const fs::path tmp = make_temp_dir("dir");
  for (const auto& [rel, content] : files) {
    const fs::path file = tmp / rel;
    fs::create_directories(file.parent_path());
    write_whole(file, content);
  }
  std::error_code ec;
  fs::rename(tmp, physical(target), ec);
  if (ec) {
    fs::remove_all(tmp);
    if (exists(target)) return target;
    throw Error("cannot add " + target.str() + " to the store: " + ec.message());
  }
  make_read_only(physical(target));
  ++writes_;
  return target;
}

StorePath Store::write_derivation(Derivation d) {
  normalize(d);
  std::vector<StorePath> referenced = d.input_sources;
  if (d.builder) referenced.push_back(*d.builder);
  for (const auto& in : d.input_drvs) referenced.push_back(in.drv);
  for (const auto& p : referenced) {
    if (p.prefix() != prefix_ || !exists(p))
      throw Error("derivation " + d.name + " references missing store item " + p.str());
  }
  const std::string text = serialize_derivation(d);
  const std::string name = d.name + ".drv";
  const std::string fingerprint = "text:sha256:" + sha256(text).hex() + ":" + name;
  return write_atomically(StorePath::from_fingerprint(prefix_, fingerprint, name), text);
}

Derivation Store::read_derivation(const StorePath& drv_path) const {
  if (drv_path.name().size() < 5 ||
      drv_path.name().compare(drv_path.name().size() - 4, 4, ".drv") != 0)
    throw Error("not a derivation: " + drv_path.str());
  return parse_derivation(read_file(drv_path), prefix_);
}

std::string Store::read_file(const StorePath& p) const {
  if (!exists(p)) throw Error("no such store item: " + p.str());
  return read_whole(physical(p));
}

void Store::install(const fs::path& from, const StorePath& to) {
  if (exists(to)) return;
  std::error_code ec;
  fs::rename(from, physical(to), ec);
  if (ec) {
    if (exists(to)) return;
    throw Error("cannot install " + to.str() + ": " + ec.message());
  }
  make_read_only(physical(to));
  ++writes_;
}

fs::path Store::make_temp_dir(std::string_view tag) const {
  fs::path dir = root_ / (".tmp-" + std::string(tag) + "-" + unique_suffix());
  fs::create_directories(dir);
  return dir;
}

void make_read_only(const fs::path& p) {
  constexpr auto kWrite = fs::perms::owner_write | fs::perms::group_write | fs::perms::others_write;
  if (fs::is_directory(p) && !fs::is_symlink(p)) {
    for (const auto& entry : fs::directory_iterator(p)) make_read_only(entry.path());
  }
  if (!fs::is_symlink(p)) fs::permissions(p, kWrite, fs::perm_options::remove);
}

}  // namespace gexp
