#include <gtest/gtest.h>

#include <thread>

#include "golden.hpp"
#include "support.hpp"

using namespace gexp;
using namespace testing_support;

namespace {

struct StoreTest : ::testing::Test {
  TempDir dir;
  Store store{dir.path() / "store", "/gnu/store"};
};

TEST(Base32, KnownVector) {
  const Digest d = sha256("");
  EXPECT_EQ(base32_encode(d.bytes), "0mdqa9w1p6cmli6976v4wi0sw9r4p5prkj7lzfd1877wk11c9c73");
  const std::vector<std::uint8_t> twenty(20, 0);
  EXPECT_EQ(base32_encode(twenty), std::string(32, '0'));
}

TEST(StoreNames, Validity) {
  EXPECT_TRUE(valid_store_name("image.png"));
  EXPECT_TRUE(valid_store_name("a+b_c=d-1.0"));
  EXPECT_FALSE(valid_store_name(""));
  EXPECT_FALSE(valid_store_name(".hidden"));
  EXPECT_FALSE(valid_store_name("a/b"));
  EXPECT_FALSE(valid_store_name("a b"));
}

TEST_F(StoreTest, InternMatchesOracle) {
  EXPECT_EQ(store.intern_file("hello\n", "greeting").str(), golden::kGreetingPath);
  EXPECT_EQ(store.intern_file("", "empty").str(), golden::kEmptyFilePath);
}

TEST_F(StoreTest, InternIsIdempotent) {
  const StorePath a = store.intern_file("data", "x");
  const std::size_t writes = store.write_count();
  const StorePath b = store.intern_file("data", "x");
  EXPECT_EQ(a, b);
  EXPECT_EQ(store.write_count(), writes);
  EXPECT_NE(store.intern_file("other", "x"), a);
  EXPECT_EQ(store.read_file(a), "data");
  const auto perms = fs::status(store.physical(a)).permissions();
  EXPECT_EQ(perms & (fs::perms::owner_write | fs::perms::group_write | fs::perms::others_write),
            fs::perms::none);
}

TEST_F(StoreTest, InvalidNameRejected) {
  EXPECT_THROW(store.intern_file("x", "bad name"), Error);
}

TEST_F(StoreTest, ConcurrentInterningOfSameContent) {
  std::vector<std::thread> threads;
  std::vector<std::string> results(8);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] { results[i] = store.intern_file("shared", "shared").str(); });
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_EQ(r, results[0]);
  EXPECT_EQ(store.read_file(*store.parse_path(results[0])), "shared");
}

Derivation greeting_derivation(Store& store) {
  const std::string greeting = golden::kGreetingPath;
  const std::string residual =
      "(begin (mkdir (getenv \"out\")) (write-file (string-append (getenv \"out\") \"/greeting\")"
      " (read-file \"" + greeting + "\")))";
  Derivation d;
  d.name = "greeting";
  d.builder = store.intern_file(residual, "greeting-builder");
  d.input_sources.push_back(store.intern_file("hello\n", "greeting"));
  d.env["SYSTEM"] = "x86_64-linux";
  assign_output_paths(d, {"out"}, store.prefix());
  return d;
}

TEST_F(StoreTest, GoldenDerivationBytes) {
  Derivation d = greeting_derivation(store);
  EXPECT_EQ(d.builder->str(), golden::kGreetingBuilder);
  EXPECT_EQ(d.output("out").str(), golden::kGreetingOutPath);
  const StorePath drv = store.write_derivation(d);
  EXPECT_EQ(drv.str(), golden::kGreetingDrvPath);
  EXPECT_EQ(store.read_file(drv), slurp(fixture("golden/greeting.drv")));
  EXPECT_EQ(serialize_derivation(store.read_derivation(drv)), serialize_derivation(d));
}

TEST_F(StoreTest, GoldenMultiOutputCrossDerivation) {
  Derivation base = greeting_derivation(store);
  const StorePath base_drv = store.write_derivation(base);
  Derivation d;
  d.name = "multi";
  d.target = SystemTag("i686-linux");
  d.builder = base.builder;
  d.input_drvs.push_back({base_drv, {"out"}});
  d.input_sources.push_back(base.input_sources[0]);
  d.env["TARGET"] = "i686-linux";
  d.env["SYSTEM"] = "x86_64-linux";
  assign_output_paths(d, {"out", "lib"}, store.prefix());
  EXPECT_EQ(d.output("out").str(), golden::kMultiOutPath);
  EXPECT_EQ(d.output("lib").str(), golden::kMultiLibPath);
  const StorePath drv = store.write_derivation(d);
  EXPECT_EQ(drv.str(), golden::kMultiDrvPath);
  EXPECT_EQ(store.read_file(drv), slurp(fixture("golden/multi.drv")));
}

TEST_F(StoreTest, EnvOrderDoesNotMatter) {
  Derivation a = greeting_derivation(store);
  Derivation b;
  b.env["ZED"] = "1";
  b.env["ALPHA"] = "2";
  b.name = a.name;
  b.builder = a.builder;
  b.input_sources = a.input_sources;
  a.env["ALPHA"] = "2";
  a.env["ZED"] = "1";
  b.env["SYSTEM"] = "x86_64-linux";
  assign_output_paths(a, {"out"}, store.prefix());
  assign_output_paths(b, {"out"}, store.prefix());
  EXPECT_EQ(serialize_derivation(a), serialize_derivation(b));
  EXPECT_EQ(store.write_derivation(a), store.write_derivation(b));
}

TEST_F(StoreTest, EveryFieldPerturbsOutputPath) {
  const Derivation base = greeting_derivation(store);
  const std::string out = base.output("out").str();
  auto reassigned = [&](Derivation d) {
    assign_output_paths(d, {"out"}, store.prefix());
    return d.output("out").str();
  };
  Derivation d = base;
  d.system = SystemTag("i686-linux");
  EXPECT_NE(reassigned(d), out);
  d = base;
  d.target = SystemTag("aarch64-linux");
  EXPECT_NE(reassigned(d), out);
  d = base;
  d.env["SYSTEM"] = "other";
  EXPECT_NE(reassigned(d), out);
  d = base;
  d.builder = store.intern_file("(other)", "greeting-builder");
  EXPECT_NE(reassigned(d), out);
  d = base;
  d.input_sources.push_back(store.intern_file("x", "extra"));
  EXPECT_NE(reassigned(d), out);
  EXPECT_EQ(reassigned(base), out);
}

TEST_F(StoreTest, DanglingReferenceRejected) {
  Derivation d = greeting_derivation(store);
  d.input_sources.push_back(*StorePath::parse("/gnu/store", std::string("/gnu/store/") +
                                                                std::string(32, '0') + "-missing"));
  assign_output_paths(d, {"out"}, store.prefix());
  EXPECT_THROW(store.write_derivation(d), Error);
}

TEST_F(StoreTest, ReadDerivationRequiresDrv) {
  const StorePath p = store.intern_file("x", "plain");
  EXPECT_THROW(store.read_derivation(p), Error);
}

TEST(StoreScan, FindsReferences) {
  const std::string a = std::string("/gnu/store/") + std::string(32, 'a') + "-foo";
  const std::string b = std::string("/gnu/store/") + std::string(32, '1') + "-bar-1.0";
  const std::string text = "(f \"" + a + "/bin/x\" \"" + b + "\" \"" + a + "\" \"/gnu/store/short-x\")";
  const auto refs = scan_store_references(text, "/gnu/store");
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0].str(), a);
  EXPECT_EQ(refs[1].str(), b);
  // 'e' is not in the alphabet.
  EXPECT_TRUE(scan_store_references("/gnu/store/" + std::string(32, 'e') + "-x", "/gnu/store").empty());
}

TEST(StorePathParse, RoundTrip) {
  const auto p = StorePath::parse("/gnu/store", golden::kGreetingPath);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->name(), "greeting");
  EXPECT_EQ(p->str(), golden::kGreetingPath);
  EXPECT_FALSE(StorePath::parse("/gnu/store", "/elsewhere/x"));
}

TEST_F(StoreTest, DirectoryItem) {
  const StorePath a = store.intern_directory({{"a/b.txt", "1"}, {"c.txt", "2"}}, "tree");
  EXPECT_EQ(a, store.intern_directory({{"c.txt", "2"}, {"a/b.txt", "1"}}, "tree"));
  EXPECT_EQ(slurp(store.physical(a) / "a/b.txt"), "1");
  EXPECT_NE(a, store.intern_directory({{"a/b.txt", "1"}, {"c.txt", "3"}}, "tree"));
}

}  // namespace
