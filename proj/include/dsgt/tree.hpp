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

#pragma once

#include <bit>
#include <cstddef>
#include <string>
#include <vector>

#include "dsgt/core.hpp"

namespace dsgt {

inline bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

/// log2 of a power of two; throws otherwise.
inline unsigned tree_height(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw ParameterError("population size " + std::to_string(n) + " is not a power of two");
  }
  return static_cast<unsigned>(std::countr_zero(n));
}

/// A node of the complete binary tree over leaves 1..n, identified by its
/// depth (root = 0) and the inclusive leaf range below it.
struct SubtreeRef {
  unsigned depth = 0;
  std::size_t leaf_lo = 1;
  std::size_t leaf_hi = 1;

  static SubtreeRef root(std::size_t n) {
    tree_height(n);
    return {0, 1, n};
  }

  std::size_t leaves() const { return leaf_hi - leaf_lo + 1; }
  Pool pool() const { return Pool::range(leaf_lo, leaf_hi); }

  friend bool operator==(const SubtreeRef&, const SubtreeRef&) = default;
};

/// One diagonal slicing of a subtree: disjoint nodes of sizes m/2, m/4,
/// ..., 2, 1, 1 covering its m leaves, largest (leftmost) first.
struct DiagonalLayout {
  SubtreeRef origin;
  std::vector<SubtreeRef> nodes;
  std::vector<Pool> pools;
};

inline DiagonalLayout diagonal_layout(const SubtreeRef& origin) {
  const std::size_t m = origin.leaves();
  if (!is_power_of_two(m) || origin.leaf_lo == 0) {
    throw ParameterError("subtree size " + std::to_string(m) + " is not a power of two");
  }
  if (m < 2) throw ParameterError("a single leaf cannot be sliced diagonally");

  DiagonalLayout layout{origin, {}, {}};
  const unsigned levels = static_cast<unsigned>(std::countr_zero(m));
  layout.nodes.reserve(levels + 1);
  std::size_t lo = origin.leaf_lo;
  for (unsigned j = 1; j <= levels; ++j) {
    const std::size_t size = m >> j;
    layout.nodes.push_back({origin.depth + j, lo, lo + size - 1});
    lo += size;
  }
  // The rightmost leaf, sibling of the last single-leaf node above.
  layout.nodes.push_back({origin.depth + levels, lo, lo});

  layout.pools.reserve(layout.nodes.size());
  for (const SubtreeRef& node : layout.nodes) layout.pools.push_back(node.pool());
  return layout;
}

/// Subtrees to slice in the next stage: the positive nodes with two or more
/// leaves. Positive single leaves are resolved and are not returned.
inline std::vector<SubtreeRef> children_layouts(const DiagonalLayout& layout,
                                                const std::vector<bool>& outcomes) {
  if (outcomes.size() != layout.nodes.size()) {
    throw ProtocolError("outcome count does not match the layout");
  }
  std::vector<SubtreeRef> out;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    if (outcomes[j] && layout.nodes[j].leaves() >= 2) out.push_back(layout.nodes[j]);
  }
  return out;
}

}  // namespace dsgt
