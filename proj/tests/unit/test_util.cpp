#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fmea/util.hpp"

using namespace fmea;

TEST_CASE("normalize lowercases, trims, collapses whitespace") {
  CHECK(util::normalize("  Robot   Arm \t") == "robot arm");
  CHECK(util::normalize("ABC") == "abc");
  CHECK(util::normalize("") == "");
  CHECK(util::normalize("  \t ") == "");
}

TEST_CASE("trigram jaccard matches hand-computed values") {
  // convyor: {con,onv,nvy,vyo,yor}; conveyor: {con,onv,nve,vey,eyo,yor}
  // intersection 3, union 8
  CHECK(util::trigram_jaccard("convyor", "conveyor") == doctest::Approx(3.0 / 8.0));
  CHECK(util::trigram_jaccard("convyor", "camera") == 0.0);
  CHECK(util::trigram_jaccard("abc", "abc") == 1.0);
  // short strings fall back to whole-string grams
  CHECK(util::trigram_jaccard("ab", "ab") == 1.0);
  CHECK(util::trigram_jaccard("ab", "cd") == 0.0);
  CHECK(util::trigram_jaccard("", "abc") == 0.0);
}

TEST_CASE("fnv1a64 is stable") {
  CHECK(util::fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(util::fnv1a64_hex("a") == util::fnv1a64_hex("a"));
  CHECK(util::fnv1a64_hex("a") != util::fnv1a64_hex("b"));
  CHECK(util::fnv1a64_hex("x").size() == 16);
}

TEST_CASE("rng streams are deterministic per seed") {
  util::Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    auto va = a.below(1000);
    CHECK(va == b.below(1000));
    CHECK(va < 1000);
  }
  util::Rng a2(42);
  bool diverged = false;
  for (int i = 0; i < 100; ++i) {
    if (a2.below(1000) != c.below(1000)) diverged = true;
  }
  CHECK(diverged);
}

TEST_CASE("rng normal has sane moments") {
  util::Rng rng(7);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> w = v;
  util::Rng a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::sort(v.begin(), v.end());
  CHECK(v == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("utf8 validation") {
  CHECK(util::is_valid_utf8("plain ascii"));
  CHECK(util::is_valid_utf8("caf\xc3\xa9"));
  CHECK(util::is_valid_utf8("\xe6\x90\xac\xe9\x80\x81"));
  CHECK_FALSE(util::is_valid_utf8("\xff\xfe"));
  CHECK_FALSE(util::is_valid_utf8("truncated \xc3"));
}

TEST_CASE("split_any_trimmed drops empties") {
  auto parts = util::split_any_trimmed("a; b;;c\nd", ";\n");
  CHECK(parts == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(util::split_any_trimmed(" ; ; ", ";").empty());
}
