#include <gtest/gtest.h>

#include "golden.hpp"
#include "support.hpp"

using namespace gexp;
using namespace testing_support;

namespace {

ModuleName name(const std::string& text) { return ModuleName::from_sexp(read(text)); }

std::vector<std::string> names_of(const std::vector<ModuleFile>& files) {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(f.name.str());
  return out;
}

TEST(ModuleName, PathMapping) {
  EXPECT_EQ(name("(guix build utils)").relative_path(), "guix/build/utils.scm");
  EXPECT_THROW(ModuleName::from_sexp(read("()")), Error);
  EXPECT_THROW(ModuleName::from_sexp(read("(a \"b\")")), Error);
}

TEST(Closure, ChainInDepthFirstOrder) {
  const auto files = source_module_closure({name("(chain a)")}, {modules_dir()});
  EXPECT_EQ(names_of(files), (std::vector<std::string>{"(chain a)", "(chain b)", "(chain c)"}));
  EXPECT_EQ(files[0].imports.size(), 1u);
}

TEST(Closure, DuplicatesRemoved) {
  const auto files =
      source_module_closure({name("(chain b)"), name("(chain a)"), name("(chain c)")}, {modules_dir()});
  EXPECT_EQ(names_of(files), (std::vector<std::string>{"(chain b)", "(chain c)", "(chain a)"}));
}

TEST(Closure, SingleModuleWithoutImports) {
  const auto files = source_module_closure({name("(guix build utils)")}, {modules_dir()});
  ASSERT_EQ(files.size(), 1u);
  EXPECT_TRUE(files[0].imports.empty());
}

TEST(Closure, MissingModuleNamed) {
  try {
    source_module_closure({name("(gnu build linux-boot)")}, {modules_dir()});
    FAIL();
  } catch (const ModuleNotFound& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("(gnu build linux-boot)"), std::string::npos) << what;
    EXPECT_NE(what.find(modules_dir().string()), std::string::npos) << what;
  }
}

TEST(Closure, CycleReported) {
  TempDir dir;
  spit(dir.path() / "p/x.scm", "(define-module (p x) #:use-module (p y))");
  spit(dir.path() / "p/y.scm", "(define-module (p y) #:use-module (p x))");
  try {
    source_module_closure({name("(p x)")}, {dir.path()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cycl"), std::string::npos) << e.what();
  }
}

TEST(ModuleFile, HeaderMustMatchPath) {
  EXPECT_THROW(parse_module_file(name("(a b)"), "(define-module (a c))"), Error);
  EXPECT_THROW(parse_module_file(name("(a b)"), "(define x 1)"), Error);
  const ModuleFile f =
      parse_module_file(name("(a b)"), "(define-module (a b) #:export (f) #:use-module (c d))\n(define f 1)");
  EXPECT_EQ(f.imports.size(), 1u);
  EXPECT_EQ(f.canonical_text(), "(define-module (a b) #:export (f) #:use-module (c d))\n(define f 1)\n");
}

TEST(Closure, SearchPathOrder) {
  TempDir a, b;
  spit(a.path() / "m.scm", "(define-module (m))\n(define v 1)");
  spit(b.path() / "m.scm", "(define-module (m))\n(define v 2)");
  EXPECT_EQ(source_module_closure({name("(m)")}, {b.path(), a.path()})[0].canonical_text(),
            "(define-module (m))\n(define v 2)\n");
}

TEST(Intern, GoldenTwoModuleClosure) {
  TempDir dir;
  Store store(dir.path() / "store", "/gnu/store");
  const auto files = source_module_closure({name("(chain b)")}, {modules_dir()});
  const StorePath p = intern_module_closure(store, files);
  EXPECT_EQ(p.str(), golden::kChainBClosurePath);
  EXPECT_TRUE(fs::exists(store.physical(p) / "chain/b.scm"));
  EXPECT_TRUE(fs::exists(store.physical(p) / "chain/c.scm"));
}

TEST(Intern, ContentAddressedAcrossRoots) {
  TempDir dir, copy;
  Store store(dir.path() / "store", "/gnu/store");
  fs::copy(modules_dir(), copy.path() / "mods", fs::copy_options::recursive);
  const StorePath a = intern_module_closure(store, source_module_closure({name("(chain a)")}, {modules_dir()}));
  const StorePath b =
      intern_module_closure(store, source_module_closure({name("(chain a)")}, {copy.path() / "mods"}));
  EXPECT_EQ(a, b);
  spit(copy.path() / "mods/chain/c.scm", "(define-module (chain c))\n(define (c-value) \"C\")\n");
  const StorePath c =
      intern_module_closure(store, source_module_closure({name("(chain a)")}, {copy.path() / "mods"}));
  EXPECT_NE(a, c);
}

TEST(Closure, MinimalityOverChain) {
  // Every interned module is reachable from the request.
  const auto files = source_module_closure({name("(chain b)")}, {modules_dir()});
  EXPECT_EQ(names_of(files), (std::vector<std::string>{"(chain b)", "(chain c)"}));
}

}  // namespace
