#include <gtest/gtest.h>

#include "moebius/canonical.hpp"
#include "moebius/domain.hpp"
#include "moebius/random.hpp"

using moebius::canonicalize_answer;
using moebius::extract_answer;

TEST(Canonicalize, TrimsAndUnboxes) {
  EXPECT_EQ(canonicalize_answer("  42 \n"), "42");
  EXPECT_EQ(canonicalize_answer("\\boxed{7}"), "7");
  EXPECT_EQ(canonicalize_answer("$\\boxed{ 11 }$"), "11");
  EXPECT_EQ(canonicalize_answer("boxed{3}"), "3");
  EXPECT_EQ(canonicalize_answer("$5$"), "5");
}

TEST(Canonicalize, MinimalNumerals) {
  EXPECT_EQ(canonicalize_answer("007"), "7");
  EXPECT_EQ(canonicalize_answer("2.50"), "2.5");
  EXPECT_EQ(canonicalize_answer("3.000"), "3");
  EXPECT_EQ(canonicalize_answer("-0"), "0");
  EXPECT_EQ(canonicalize_answer("-0.0"), "0");
  EXPECT_EQ(canonicalize_answer(".5"), "0.5");
  EXPECT_EQ(canonicalize_answer("-012.340"), "-12.34");
  EXPECT_EQ(canonicalize_answer("+4"), "4");
}

TEST(Canonicalize, LeavesNonNumbersAlone) {
  EXPECT_EQ(canonicalize_answer("x + 1"), "x + 1");
  EXPECT_EQ(canonicalize_answer("\\boxed{a{b}}"), "a{b}");
  EXPECT_EQ(canonicalize_answer("\\boxed{a}b}"), "\\boxed{a}b}");
  EXPECT_EQ(canonicalize_answer(""), "");
}

TEST(Canonicalize, IdempotentOnGeneratedText) {
  const moebius::DomainSpec spec;
  moebius::Rng rng(5);
  const char* wrappers[] = {"%s", " %s ", "\\boxed{%s}", "$\\boxed{%s}$", "$%s$", "00%s", "%s.0"};
  for (int i = 0; i < 2000; ++i) {
    const int d = 1 + static_cast<int>(rng.below(spec.levels));
    const auto task = moebius::generate_task(d, rng.next(), spec);
    const std::string first = canonicalize_answer(task.prompt);
    EXPECT_EQ(canonicalize_answer(first), first);
    char buffer[64];
    const std::string value = std::to_string(static_cast<long long>(rng.below(1000)) - 500);
    std::snprintf(buffer, sizeof buffer, wrappers[rng.below(std::size(wrappers))], value.c_str());
    const std::string once = canonicalize_answer(buffer);
    EXPECT_EQ(canonicalize_answer(once), once) << buffer;
  }
}

TEST(Extract, LastBoxedWins) {
  EXPECT_EQ(extract_answer("first \\boxed{3} then \\boxed{ 04 }"), "4");
  EXPECT_EQ(extract_answer("The answer is 11 miles, so $\\boxed{11}$."), "11");
}

TEST(Extract, FallsBackToLastNumber) {
  EXPECT_EQ(extract_answer("The answer is 11"), "11");
  EXPECT_EQ(extract_answer("from 3 to 2.50 units"), "2.5");
  EXPECT_EQ(extract_answer("no digits here"), std::nullopt);
}

TEST(Extract, CustomPattern) {
  EXPECT_EQ(extract_answer("ANS=5; ANS=007", R"(ANS=(\d+))"), "7");
  EXPECT_EQ(extract_answer("nothing", R"(ANS=(\d+))"), std::nullopt);
}
