// Copyright 2026 The dsgt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dsgt/analytics.hpp"

#include <cmath>
#include <vector>

#include "dsgt/algorithms.hpp"
#include "gtest/gtest.h"

namespace dsgt {
namespace {

TEST(PositiveProbTest, Extremes) {
  for (unsigned i = 1; i <= 3; ++i) {
    EXPECT_EQ(positive_prob({16, Combinatorial{0}}, i), 0.0);
    EXPECT_EQ(positive_prob({16, Probabilistic{1.0}}, i), 1.0);
    EXPECT_EQ(positive_prob({16, Combinatorial{16}}, i), 1.0);
  }
}

// Enumerate every 4-subset pool of 8 against one infected individual.
TEST(PositiveProbTest, HypergeometricByEnumeration) {
  int hits = 0, pools = 0;
  for (std::uint32_t m = 0; m < 256; ++m) {
    if (std::popcount(m) != 4) continue;
    ++pools;
    hits += (m & 1U) ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(positive_prob({8, Combinatorial{1}}, 1), static_cast<double>(hits) / pools);
  EXPECT_DOUBLE_EQ(positive_prob({8, Combinatorial{1}}, 1), 0.5);
}

TEST(PositiveProbTest, RejectsBadDepth) {
  EXPECT_THROW(positive_prob({8, Combinatorial{1}}, 0), ParameterError);
  EXPECT_THROW(positive_prob({8, Combinatorial{1}}, 4), ParameterError);
  EXPECT_THROW(positive_prob({12, Combinatorial{1}}, 1), ParameterError);
}

TEST(ExpectedTestsTest, ClosedFormValues) {
  EXPECT_NEAR(expected_tests_dsa({8, Combinatorial{1}}), 6.5, 1e-12);
  EXPECT_NEAR(expected_tests_dsa({8, Combinatorial{8}}), 11.0, 1e-12);
  EXPECT_NEAR(expected_tests_dsa({16, Combinatorial{1}}), 9.5, 1e-12);
  EXPECT_NEAR(expected_tests_dsa({16, Probabilistic{1.0}}), 23.0, 1e-12);
  EXPECT_EQ(corollary_k1(3), 6.5);
  EXPECT_EQ(corollary_kn(8), 11.0);
  EXPECT_NEAR(corollary_k1(10), expected_tests_dsa({1024, Combinatorial{1}}), 1e-9);
  EXPECT_EQ(corollary_k1(10), 38.0);
}

TEST(ExpectedTestsTest, CorollariesForAllDepths) {
  for (unsigned d = 1; d <= 14; ++d) {
    const std::size_t n = std::size_t{1} << d;
    EXPECT_NEAR(expected_tests_dsa({n, Combinatorial{1}}), corollary_k1(d), 1e-9) << d;
    // The k = 1 closed form is exact only for the combinatorial model; at
    // p = 1/n each node is positive slightly less often than n_i / n.
    EXPECT_LE(expected_tests_dsa({n, Probabilistic{1.0 / n}}), corollary_k1(d) + 1e-9) << d;
    EXPECT_NEAR(expected_tests_dsa({n, Combinatorial{n}}), corollary_kn(n), 1e-9) << d;
    EXPECT_NEAR(expected_tests_dsa({n, Probabilistic{1.0}}), corollary_kn(n), 1e-9) << d;
  }
}

// Exact mean of DSA tests over every k-subset of 8 equals the closed form.
TEST(ExpectedTestsTest, MatchesEnumerationAtEight) {
  for (std::size_t k = 0; k <= 8; ++k) {
    double sum = 0.0;
    int count = 0;
    for (std::uint32_t mask = 0; mask < 256; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < 8; ++i) {
        if (mask >> i & 1U) idx.push_back(i + 1);
      }
      sum += static_cast<double>(
          run_dsa(instance_with_infected(8, IndexSet::from_indices(idx))).ledger.tests_total());
      ++count;
    }
    EXPECT_NEAR(sum / count, expected_tests_dsa({8, Combinatorial{k}}), 1e-9) << "k=" << k;
  }
}

TEST(ExpectedTestsTest, ModelsConvergeAsNGrows) {
  double previous = 1.0;
  for (std::size_t n : {16u, 64u, 256u, 1024u}) {
    const std::size_t k = n / 8;
    const double comb = expected_tests_dsa({n, Combinatorial{k}});
    const double prob = expected_tests_dsa({n, Probabilistic{static_cast<double>(k) / n}});
    const double gap = std::abs(comb - prob) / comb;
    EXPECT_LT(gap, previous) << n;
    previous = gap;
  }
}

TEST(BoundsTest, CountingBound) {
  EXPECT_NEAR(counting_bound({8, Combinatorial{1}}), 3.0, 1e-12);
  EXPECT_NEAR(counting_bound({8, Probabilistic{0.5}}), 8.0, 1e-12);
  EXPECT_EQ(counting_bound({1024, Combinatorial{1024}}), 0.0);
  EXPECT_EQ(counting_bound({1024, Combinatorial{0}}), 0.0);
  EXPECT_EQ(counting_bound({64, Probabilistic{0.0}}), 0.0);
  EXPECT_EQ(counting_bound({64, Probabilistic{1.0}}), 0.0);
}

TEST(BoundsTest, BsaAndHgbsa) {
  EXPECT_EQ(bsa_bound(8, 2), 8.0);
  EXPECT_NEAR(hgbsa_bound(8, 1), 4.0, 1e-12);
  for (std::size_t n : {1u, 7u, 64u, 1024u}) EXPECT_NEAR(hgbsa_bound(n, n), double(n), 1e-12);
  EXPECT_THROW(bsa_bound(8, 0), ParameterError);
  EXPECT_THROW(hgbsa_bound(8, 9), ParameterError);
}

TEST(BoundsTest, CountingBelowHgbsa) {
  for (std::size_t n = 1; n <= 1024; n = n < 16 ? n + 1 : n * 2 + 1) {
    for (std::size_t k = 1; k <= n; ++k) {
      EXPECT_LE(counting_bound({n, Combinatorial{k}}), hgbsa_bound(n, k));
    }
  }
}

TEST(BoundsTest, ExactCeilLog2) {
  EXPECT_EQ(ceil_log2_big(binomial(8, 1)), 3u);
  EXPECT_EQ(ceil_log2_big(binomial(8, 2)), 5u);  // 28
  EXPECT_EQ(ceil_log2_big(BigInt(1)), 0u);
  EXPECT_EQ(ceil_log2_big(BigInt(1) << 300), 300u);
  EXPECT_EQ(ceil_log2_big((BigInt(1) << 300) + 1), 301u);
}

TEST(UpperBoundTest, SumIdentity) {
  EXPECT_EQ(appendix_sum_identity(1), 1u);
  EXPECT_EQ(appendix_sum_identity(3), 17u);
  EXPECT_EQ(appendix_sum_identity(10), 9217u);
  for (unsigned beta = 1; beta <= 20; ++beta) {
    std::uint64_t direct = 0;
    for (unsigned i = 1; i <= beta; ++i) direct += std::uint64_t{i} << (i - 1);
    EXPECT_EQ(appendix_sum_identity(beta), direct);
  }
  EXPECT_THROW(appendix_sum_identity(0), ParameterError);
}

TEST(UpperBoundTest, HeadAndTailSums) {
  const double eps = 0.05;
  for (unsigned d = 3; d <= 16; ++d) {
    for (unsigned beta = 1; beta + 1 < d; ++beta) {
      double head = 0.0, tail = 0.0;
      for (unsigned i = 1; i <= beta; ++i) head += std::ldexp(1.0, int(i) - 1) * (d - i + 1.0);
      for (unsigned i = beta + 1; i + 1 <= d; ++i) {
        tail += std::ldexp(1.0, int(i) - 1) * (d - i + 1.0);
      }
      EXPECT_NEAR(appendix_head_sum(d, beta), head, 1e-9);
      EXPECT_NEAR(appendix_tail_sum(d, beta, eps), eps * tail, 1e-9);
    }
  }
}

TEST(UpperBoundTest, UpperBound) {
  const double eps = 1.0 - std::exp(-1.0);  // C = 1
  for (std::size_t n : {16u, 64u, 1024u}) {
    for (std::size_t k : {1u, 3u, 16u}) {
      EXPECT_NEAR(appendix_upper_bound(n, k, eps),
                  log2_big(binomial(n, k)) + 2.0 * k + 1.5 * eps * n - 1.0, 1e-9);
    }
  }
  const double b = appendix_upper_bound(1024, 1, 0.01);
  EXPECT_TRUE(std::isfinite(b));
  EXPECT_GT(b, expected_tests_dsa({1024, Combinatorial{1}}));
  EXPECT_THROW(appendix_upper_bound(16, 1, 0.0), ParameterError);
  EXPECT_THROW(appendix_upper_bound(16, 1, 1.0), ParameterError);
}

TEST(UpperBoundTest, UpperBoundMonotoneInN) {
  for (double eps : {0.01, 0.1, 0.5}) {
    double previous = -1e300;
    for (std::size_t n = 16; n <= 4096; n *= 2) {
      const double b = appendix_upper_bound(n, 4, eps);
      EXPECT_GE(b, previous);
      previous = b;
    }
  }
}

TEST(UpperBoundTest, ReportCoversEveryN) {
  const auto rows = appendix_bound_report({16, 32, 64, 128, 256, 512, 1024}, 4, 0.1);
  ASSERT_EQ(rows.size(), 7u);
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.upper_bound));
    EXPECT_TRUE(std::isfinite(r.expected_tests));
    EXPECT_EQ(r.bound_holds, r.expected_tests <= r.upper_bound);
  }
}

}  // namespace
}  // namespace dsgt
