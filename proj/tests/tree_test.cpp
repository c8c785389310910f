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

#include "dsgt/tree.hpp"

#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace dsgt {
namespace {

std::vector<std::string> PoolStrings(const DiagonalLayout& layout) {
  std::vector<std::string> out;
  for (const Pool& p : layout.pools) out.push_back(p.to_string());
  return out;
}

TEST(DiagonalLayoutTest, FullTreeOfEight) {
  const auto layout = diagonal_layout(SubtreeRef::root(8));
  EXPECT_EQ(PoolStrings(layout), (std::vector<std::string>{"1-4", "5-6", "7", "8"}));
  EXPECT_EQ(layout.nodes[0].depth, 1u);
  EXPECT_EQ(layout.nodes[1].depth, 2u);
  EXPECT_EQ(layout.nodes[2].depth, 3u);
  EXPECT_EQ(layout.nodes[3].depth, 3u);
}

TEST(DiagonalLayoutTest, PairIsTwoSingletons) {
  const auto layout = diagonal_layout({2, 1, 2});
  EXPECT_EQ(PoolStrings(layout), (std::vector<std::string>{"1", "2"}));
}

TEST(DiagonalLayoutTest, FullTreeOfSixteen) {
  const auto layout = diagonal_layout(SubtreeRef::root(16));
  EXPECT_EQ(PoolStrings(layout),
            (std::vector<std::string>{"1-8", "9-12", "13-14", "15", "16"}));
}

TEST(DiagonalLayoutTest, RejectsSingleLeafAndRaggedSizes) {
  EXPECT_THROW(diagonal_layout({3, 5, 5}), ParameterError);
  EXPECT_THROW(diagonal_layout({0, 1, 6}), ParameterError);
  EXPECT_THROW(SubtreeRef::root(12), ParameterError);
}

// Pools partition the origin, have sizes m/2, ..., 2, 1, 1, and sit one
// level apart except for the final sibling pair.
TEST(DiagonalLayoutTest, PartitionAndPoolCountForAllSizes) {
  for (std::size_t m = 2; m <= 1024; m *= 2) {
    for (std::size_t offset : {std::size_t{0}, m, 5 * m}) {
      const SubtreeRef origin{3, offset + 1, offset + m};
      const auto layout = diagonal_layout(origin);
      ASSERT_EQ(layout.pools.size(), static_cast<std::size_t>(std::countr_zero(m)) + 1);
      IndexSet covered;
      std::size_t expected_size = m / 2;
      for (std::size_t j = 0; j < layout.pools.size(); ++j) {
        covered = covered.merged(layout.pools[j].members());  // throws on overlap
        const std::size_t want = j + 1 < layout.pools.size() ? expected_size : 1;
        EXPECT_EQ(layout.pools[j].size(), want);
        EXPECT_EQ(layout.nodes[j].leaves(), layout.pools[j].size());
        if (expected_size > 1) expected_size /= 2;
      }
      EXPECT_EQ(covered, IndexSet::range(origin.leaf_lo, origin.leaf_hi));
    }
  }
}

TEST(ChildrenLayoutsTest, AllNegativeYieldsNothing) {
  const auto layout = diagonal_layout(SubtreeRef::root(8));
  EXPECT_TRUE(children_layouts(layout, {false, false, false, false}).empty());
}

TEST(ChildrenLayoutsTest, PositiveLeftHalf) {
  const auto layout = diagonal_layout(SubtreeRef::root(8));
  const auto next = children_layouts(layout, {true, false, false, false});
  ASSERT_EQ(next.size(), 1u);
  EXPECT_EQ(next[0], (SubtreeRef{1, 1, 4}));
}

TEST(ChildrenLayoutsTest, AllPositiveGivesFiveStageTwoTests) {
  const auto layout = diagonal_layout(SubtreeRef::root(8));
  const auto next = children_layouts(layout, {true, true, true, true});
  ASSERT_EQ(next.size(), 2u);
  EXPECT_EQ(next[0], (SubtreeRef{1, 1, 4}));
  EXPECT_EQ(next[1], (SubtreeRef{2, 5, 6}));
  std::size_t tests = 0;
  for (const auto& s : next) tests += diagonal_layout(s).pools.size();
  EXPECT_EQ(tests, 5u);
  EXPECT_EQ(PoolStrings(diagonal_layout(next[0])), (std::vector<std::string>{"1-2", "3", "4"}));
  EXPECT_EQ(PoolStrings(diagonal_layout(next[1])), (std::vector<std::string>{"5", "6"}));
}

TEST(ChildrenLayoutsTest, MismatchedOutcomesRejected) {
  const auto layout = diagonal_layout(SubtreeRef::root(8));
  EXPECT_THROW(children_layouts(layout, {true, false}), ProtocolError);
}

// A node of depth i spawns a layout of d - i + 1 pools, and recursive
// layouts of the full tree reach exactly 2^(i-1) distinct nodes at each
// depth i in 1..d-1.
TEST(TreePropertiesTest, DepthIdentityAndReachableNodes) {
  for (std::size_t n = 4; n <= 1024; n *= 2) {
    const unsigned d = tree_height(n);
    std::vector<std::set<std::size_t>> reached(d + 1);
    std::vector<SubtreeRef> frontier{SubtreeRef::root(n)};
    while (!frontier.empty()) {
      std::vector<SubtreeRef> next;
      for (const auto& s : frontier) {
        const auto layout = diagonal_layout(s);
        EXPECT_EQ(layout.pools.size(), d - s.depth + 1);
        for (const auto& node : layout.nodes) {
          EXPECT_EQ(node.leaves(), n >> node.depth);
          reached[node.depth].insert(node.leaf_lo);
          if (node.leaves() >= 2) next.push_back(node);
        }
      }
      frontier = std::move(next);
    }
    for (unsigned i = 1; i + 1 <= d; ++i) EXPECT_EQ(reached[i].size(), std::size_t{1} << (i - 1));
  }
}

}  // namespace
}  // namespace dsgt
