#include <gtest/gtest.h>

#include <fstream>

#include "chainwatch/error.hpp"
#include "chainwatch/vocabulary.hpp"
#include "support.hpp"

using namespace chainwatch;

TEST(Vocabulary, DefaultsHavePinnedSizes) {
  const auto& v = Vocabulary::defaults();
  EXPECT_EQ(v.packages.size(), kPackageCount);
  EXPECT_EQ(v.io_types.size(), kIoTypeCount);
  EXPECT_EQ(v.io_types.find("Ljava/lang/String"), 0u);
  EXPECT_EQ(v.io_types.find("Ljava/util/logging/Level"), 1u);
  EXPECT_EQ(v.io_types.find("Ljava/lang/Throwable"), 2u);
  EXPECT_EQ(v.io_types.find("Ljava/io/File"), 3u);
  EXPECT_FALSE(v.packages.find("Lnope").has_value());
}

TEST(Vocabulary, CategoryOrderAndNames) {
  EXPECT_EQ(parse_category("binaryop"), Category::kBinaryOp);
  EXPECT_EQ(parse_category("phi"), Category::kPhi);
  EXPECT_EQ(parse_category("getCaughtException"), Category::kGetCaughtException);
  EXPECT_FALSE(parse_category("invoke").has_value());
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    auto c = static_cast<Category>(i);
    EXPECT_EQ(parse_category(to_string(c)), c);
  }
  EXPECT_EQ(parse_scope("Application"), Scope::kApplication);
  EXPECT_EQ(parse_scope("Primordial"), Scope::kPrimordial);
  EXPECT_FALSE(parse_scope("primordial").has_value());
}

TEST(Vocabulary, ShippedFilesMatchDefaults) {
  const auto v = Vocabulary::load_dir(testing_support::data_dir() / "vocab");
  EXPECT_EQ(v.packages.ids(), Vocabulary::defaults().packages.ids());
  EXPECT_EQ(v.io_types.ids(), Vocabulary::defaults().io_types.ids());
}

TEST(Vocabulary, RejectsWrongSizeAndDuplicates) {
  const auto dir = std::filesystem::temp_directory_path() / "cw_vocab_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream p(dir / "packages.txt");
    p << "A\nB\n";
    std::ofstream io(dir / "io_types.txt");
    for (const auto& id : Vocabulary::defaults().io_types.ids()) io << id << '\n';
  }
  EXPECT_THROW(Vocabulary::load_dir(dir), FormatError);
  EXPECT_THROW(IdVocabulary({"a", "b", "a"}), Error);
  std::filesystem::remove_all(dir);
}
