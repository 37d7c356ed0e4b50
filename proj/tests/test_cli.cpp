#include <gtest/gtest.h>

#include "golden.hpp"
#include "support.hpp"

using namespace testing_support;

namespace {

struct CliTest : ::testing::Test {
  TempDir dir;
  std::string store() const { return (dir.path() / "store").string(); }
  std::string flags() const { return "--store " + store(); }
  std::string fx(const std::string& name) const { return fixture(name).string(); }
};

TEST_F(CliTest, LowerPrintsDrvPath) {
  const CliResult r = run_cli(flags() + " lower " + fx("example.scm"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].starts_with(store() + "/"));
  EXPECT_TRUE(out[0].ends_with("-example.drv"));
  EXPECT_EQ(run_cli(flags() + " lower " + fx("example.scm")).out, r.out);
}

TEST_F(CliTest, TargetChangesDrv) {
  const CliResult native = run_cli(flags() + " lower " + fx("example.scm"));
  const CliResult cross = run_cli(flags() + " lower --target i686-linux " + fx("example.scm"));
  ASSERT_EQ(cross.status, 0) << cross.err;
  EXPECT_NE(native.out, cross.out);
}

TEST_F(CliTest, BuildPrintsOutputs) {
  const CliResult r = run_cli(flags() + " build " + fx("example.scm"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 1u);
  ASSERT_TRUE(out[0].starts_with("out\t" + store() + "/"));
  const std::string path = out[0].substr(4);
  EXPECT_TRUE(path.ends_with("-example"));
  EXPECT_TRUE(fs::exists(fs::path(path) / "image.jpg"));
  const CliResult again = run_cli(flags() + " build " + fx("example.scm"));
  EXPECT_EQ(again.out, r.out);
  EXPECT_EQ(again.err.find("building"), std::string::npos) << again.err;
}

TEST_F(CliTest, BuildFailureExitsTwo) {
  const CliResult r = run_cli(flags() + " build " + fx("failing.scm"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("failing.drv"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, MissingModuleImportExitsTwo) {
  const CliResult r = run_cli(flags() + " build " + fx("without-modules.scm"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("(guix build utils)"), std::string::npos) << r.err;
}

TEST_F(CliTest, ModulePathFlagAndVariable) {
  const std::string mods = modules_dir().string();
  const CliResult flag = run_cli(flags() + " build --module-path " + mods + " " + fx("with-modules.scm"));
  ASSERT_EQ(flag.status, 0) << flag.err;
  const CliResult var = run_cli(flags() + " build " + fx("chain.scm"), "GEXP_MODULE_PATH=" + mods);
  ASSERT_EQ(var.status, 0) << var.err;
  EXPECT_EQ(slurp(fs::path(lines(var.out)[0].substr(4)) / "value"), "abc");
  const CliResult unresolved = run_cli(flags() + " lower " + fx("chain.scm"));
  EXPECT_EQ(unresolved.status, 1);
  EXPECT_NE(unresolved.err.find("(chain a)"), std::string::npos) << unresolved.err;
}

TEST_F(CliTest, StagingErrorExitsOne) {
  spit(dir.path() / "bad.scm", "#~(f #$undefined-name)");
  const CliResult r = run_cli(flags() + " lower " + (dir.path() / "bad.scm").string());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("undefined-name"), std::string::npos);
  spit(dir.path() / "unbalanced.scm", "(define x");
  EXPECT_EQ(run_cli(flags() + " lower " + (dir.path() / "unbalanced.scm").string()).status, 1);
  spit(dir.path() / "notgexp.scm", "(define x 1)\nx");
  EXPECT_EQ(run_cli(flags() + " lower " + (dir.path() / "notgexp.scm").string()).status, 1);
}

TEST_F(CliTest, ShowListsFields) {
  const std::string drv = lines(run_cli(flags() + " lower " + fx("example.scm")).out).at(0);
  const CliResult r = run_cli(flags() + " show " + drv);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("system  x86_64-linux"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("-example-builder"), std::string::npos);
  EXPECT_NE(r.out.find("-imagemagick-6.9.0.drv out"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("-image.png"), std::string::npos);
  EXPECT_NE(run_cli(flags() + " show " + store() + "/" + std::string(32, '0') + "-nothing.drv").status, 0);
}

TEST_F(CliTest, ShowRoundTripsEveryField) {
  TempDir d;
  gexp::Store store(d.path() / "store", "/gnu/store");
  gexp::Derivation drv;
  drv.name = "rt";
  drv.target = gexp::SystemTag("i686-linux");
  drv.builder = store.intern_file("(f)", "rt-builder");
  drv.input_sources.push_back(store.intern_file("s", "src"));
  drv.env["SYSTEM"] = "x86_64-linux";
  drv.env["TARGET"] = "i686-linux";
  gexp::assign_output_paths(drv, {"out", "lib"}, store.prefix());
  const gexp::StorePath p = store.write_derivation(drv);
  const CliResult r =
      run_cli("--store " + (d.path() / "store").string() + " --store-prefix /gnu/store show " + p.str());
  ASSERT_EQ(r.status, 0) << r.err;
  for (const std::string& needle :
       {std::string("name    rt"), std::string("target  i686-linux"), drv.builder->str(), drv.input_sources[0].str(),
        "lib " + drv.output("lib").str(), "out " + drv.output("out").str(), std::string("TARGET=i686-linux"),
        "lib=" + drv.output("lib").str()})
    EXPECT_NE(r.out.find(needle), std::string::npos) << needle << "\n" << r.out;
}

TEST_F(CliTest, AddIsStableAndMatchesOracle) {
  const std::string args = "--store " + store() + " --store-prefix /gnu/store add " + fx("image.png");
  const CliResult a = run_cli(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, std::string(golden::kImagePngPath) + "\n");
  EXPECT_EQ(run_cli(args).out, a.out);
  spit(dir.path() / "empty", "");
  const CliResult e = run_cli(flags() + " add " + (dir.path() / "empty").string() + " empty");
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_TRUE(e.out.ends_with("-empty\n"));
  EXPECT_NE(run_cli(flags() + " add " + (dir.path() / "missing").string()).status, 0);
}

TEST_F(CliTest, StoreFromEnvironment) {
  const CliResult r = run_cli("lower " + fx("greeting.scm"), "GEXP_STORE_DIR=" + store());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(r.out.starts_with(store() + "/"));
}

TEST_F(CliTest, GoldenThroughCli) {
  const CliResult r = run_cli(flags() + " --store-prefix /gnu/store lower " + fx("greeting.scm"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, std::string(golden::kGreetingDrvPath) + "\n");
}

}  // namespace
