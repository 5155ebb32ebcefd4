#include <sstream>

#include <gtest/gtest.h>

#include "ikbd/core/dataset_io.hpp"
#include "ikbd/core/dictionary.hpp"
#include "ikbd/core/phrase.hpp"
#include "ikbd/core/split.hpp"

using namespace ikbd;

TEST(Dictionary, HasThirtyOneSymbolsAndIsABijection) {
  EXPECT_EQ(CharacterDictionary::kSize, 31);
  for (int i = 0; i < CharacterDictionary::kSize; ++i) {
    EXPECT_EQ(CharacterDictionary::index_of(CharacterDictionary::symbol_at(i)), i);
  }
  for (char c : std::string("abcdefghijklmnopqrstuvwxyz \n.'")) {
    EXPECT_EQ(CharacterDictionary::symbol_at(CharacterDictionary::index_of(c)), c);
  }
  EXPECT_EQ(CharacterDictionary::index_of('a'), 0);
  EXPECT_EQ(CharacterDictionary::index_of('\n'), CharacterDictionary::kEnter);
  EXPECT_EQ(CharacterDictionary::kPad, 30);
  EXPECT_FALSE(CharacterDictionary::is_typeable(CharacterDictionary::kPadSymbol));
  EXPECT_THROW(CharacterDictionary::index_of('A'), ValidationError);
  EXPECT_THROW(CharacterDictionary::symbol_at(31), ValidationError);
}

TEST(Preprocess, LowercasesAndStrips) {
  EXPECT_EQ(preprocess_phrase("Hello, World!"), "hello world");
  EXPECT_EQ(preprocess_phrase("I'm ok."), "i'm ok.");
  EXPECT_EQ(preprocess_phrase("  a\t\t b  "), "a b");
  EXPECT_EQ(preprocess_phrase("Route 66 is 2x long"), "route is x long");
}

TEST(Preprocess, JoinsTwoSentencesWithEnter) {
  EXPECT_EQ(preprocess_phrase("ab", std::string_view("cd")), "ab\ncd");
  EXPECT_EQ(preprocess_phrase("Ab. ", std::string_view(" Cd!")), "ab.\ncd");
}

TEST(Preprocess, RejectsEmptyResult) {
  EXPECT_THROW(preprocess_phrase("123 !?"), RejectedPhrase);
  EXPECT_THROW(preprocess_phrase(""), RejectedPhrase);
  EXPECT_THROW(preprocess_phrase("ok", std::string_view("42")), RejectedPhrase);
}

TEST(Preprocess, IsIdempotentOnRandomText) {
  std::mt19937_64 rng(3);
  const std::string pool = "aZq ,.'\n\t!9-xY  ";
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1), len(1, 40);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string raw;
    for (std::size_t n = len(rng); n > 0; --n) raw.push_back(pool[pick(rng)]);
    std::string once;
    try {
      once = preprocess_phrase(raw);
    } catch (const RejectedPhrase&) {
      continue;
    }
    for (char c : once) EXPECT_TRUE(CharacterDictionary::is_typeable(c));
    EXPECT_EQ(preprocess_phrase(once), once) << "raw: " << raw;
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

namespace {

Dataset small_dataset(int users, int per_user) {
  Dataset d;
  for (int u = 0; u < users; ++u) {
    for (int k = 0; k < per_user; ++k) {
      TouchSample s{"user" + std::to_string(u), "hi\nyo", {}};
      for (int i = 0; i < 5; ++i) s.touches.push_back({0.1 * i + 0.0123456789 * u, 0.3 + 1e-9 * k, std::nullopt});
      s.touches[2].t_ms = 10.5;
      d.samples.push_back(s);
    }
  }
  return d;
}

}  // namespace

TEST(DatasetIo, EmptyDatasetRoundTrips) {
  Dataset d;
  std::stringstream ss;
  write_dataset(ss, d);
  std::string text = ss.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(read_dataset(ss), d);
}

TEST(DatasetIo, RoundTripIsExact) {
  Dataset d = small_dataset(1, 1);
  d.samples[0].touches[1].x = 0.1234567890123456789;
  d.screen.width_px = 2560;
  std::stringstream ss;
  write_dataset(ss, d);
  EXPECT_EQ(read_dataset(ss), d);

  Dataset many = small_dataset(3, 4);
  std::stringstream ss2;
  write_dataset(ss2, many);
  EXPECT_EQ(read_dataset(ss2), many);
}

TEST(DatasetIo, EnterIsEncodedAsNewlineInsideThePhrase) {
  std::stringstream ss;
  write_dataset(ss, small_dataset(1, 1));
  EXPECT_NE(ss.str().find(R"("phrase":"hi\nyo")"), std::string::npos);
}

TEST(DatasetIo, LengthMismatchNamesTheRecord) {
  std::stringstream ss;
  ss << R"({"format_version":1,"screen_mm":[555,338],"screen_px":[1920,1080]})" << "\n";
  ss << R"({"user_id":"a","phrase":"hello","touches":[[0.1,0.1],[0.2,0.2],[0.3,0.3],[0.4,0.4]]})" << "\n";
  try {
    read_dataset(ss);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, MalformedLineReportsLineNumber) {
  std::stringstream ss;
  ss << R"({"format_version":1,"screen_mm":[555,338],"screen_px":[1920,1080]})" << "\n";
  ss << R"({"user_id":"a","phrase":"hi","touches":[[0.1,0.1],[0.2,0.2]]})" << "\n";
  ss << "{not json\n";
  try {
    read_dataset(ss);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(DatasetIo, RejectsPadSymbolAndMissingHeader) {
  std::stringstream ss;
  ss << R"({"format_version":1,"screen_mm":[555,338],"screen_px":[1920,1080]})" << "\n";
  ss << R"({"user_id":"a","phrase":"h#","touches":[[0.1,0.1],[0.2,0.2]]})" << "\n";
  EXPECT_THROW(read_dataset(ss), ValidationError);
  std::stringstream empty;
  EXPECT_THROW(read_dataset(empty), ParseError);
}

TEST(Split, FourUsersGiveOneTrainOneValTwoTest) {
  const Dataset d = small_dataset(4, 3);
  const auto s = split_dataset(d, 2, 1, 7);
  EXPECT_EQ(s.train.users().size(), 1u);
  EXPECT_EQ(s.val.users().size(), 1u);
  EXPECT_EQ(s.test.users().size(), 2u);
  std::set<std::string> seen;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (const auto& u : part->users()) EXPECT_TRUE(seen.insert(u).second) << u << " in two splits";
  }
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), d.size());
}

TEST(Split, TooFewUsersIsAnError) {
  EXPECT_THROW(split_dataset(small_dataset(3, 2), 2, 1, 7), ValidationError);
}

TEST(Split, SameSeedSamePartition) {
  const Dataset d = small_dataset(10, 2);
  const auto a = split_dataset(d, 2, 1, 99);
  const auto b = split_dataset(d, 2, 1, 99);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, UnionIsTheInputForManySeeds) {
  const Dataset d = small_dataset(8, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = split_dataset(d, 2, 1, seed);
    std::multiset<std::string> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (const auto& x : part->samples) all.insert(x.user_id);
    }
    std::multiset<std::string> expected;
    for (const auto& x : d.samples) expected.insert(x.user_id);
    EXPECT_EQ(all, expected);
  }
}
