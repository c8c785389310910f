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

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsgt/combinatorics.hpp"
#include "dsgt/core.hpp"
#include "dsgt/tree.hpp"

namespace dsgt {

/// Outcomes of the first-stage diagonal tests over the full tree, one bit
/// per pool, largest pool first (sizes n/2, n/4, ..., 2, 1, 1).
class OutcomePattern {
 public:
  OutcomePattern(std::size_t n, std::vector<bool> bits) : n_(n), bits_(std::move(bits)) {
    const unsigned d = tree_height(n_);
    if (d == 0) throw ParameterError("outcome patterns need n >= 2");
    if (bits_.size() != d + 1) {
      throw ParameterError("pattern for n=" + std::to_string(n_) + " needs " +
                           std::to_string(d + 1) + " bits, got " + std::to_string(bits_.size()));
    }
  }

  static OutcomePattern zeros(std::size_t n) {
    return OutcomePattern(n, std::vector<bool>(tree_height(n) + 1, false));
  }

  /// Big-endian bitstring such as "1100"; the first character is the
  /// largest pool.
  static OutcomePattern parse(std::size_t n, std::string_view text) {
    std::vector<bool> bits;
    for (char c : text) {
      if (c != '0' && c != '1') throw ParameterError("pattern must be a 0/1 string");
      bits.push_back(c == '1');
    }
    return OutcomePattern(n, std::move(bits));
  }

  /// Pattern whose bit j (largest pool first) is bit (width-1-j) of `mask`,
  /// so numeric order matches the bitstring order.
  static OutcomePattern from_mask(std::size_t n, std::uint64_t mask) {
    const std::size_t width = tree_height(n) + 1;
    std::vector<bool> bits(width);
    for (std::size_t j = 0; j < width; ++j) bits[j] = (mask >> (width - 1 - j)) & 1U;
    return OutcomePattern(n, std::move(bits));
  }

  std::size_t n() const { return n_; }
  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t j) const { return bits_[j]; }
  const std::vector<bool>& bits() const { return bits_; }

  /// Leaves under pool j of the full-tree layout.
  std::size_t pool_size(std::size_t j) const { return j + 1 < bits_.size() ? n_ >> (j + 1) : 1; }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (bool b : bits_) m = (m << 1) | (b ? 1U : 0U);
    return m;
  }

  std::string to_string() const {
    std::string s;
    for (bool b : bits_) s += b ? '1' : '0';
    return s;
  }

  friend bool operator==(const OutcomePattern&, const OutcomePattern&) = default;

 private:
  std::size_t n_;
  std::vector<bool> bits_;
};

/// Occurrence counts M[k, s] for k = 0..n of one pattern s, and the
/// likelihoods L_s(k) = M[k, s] / C(n, k).
struct LikelihoodColumn {
  std::size_t n = 0;
  std::vector<BigInt> counts;
  std::vector<BigInt> binomials;
  std::vector<double> likelihoods;
};

namespace detail {

// Column of s from the column of s0 (s with its first set bit cleared),
// where that bit covers `leaves` individuals:
//   M[k, s] = sum_{i=1..k} C(leaves, i) * M[k - i, s0].
inline std::vector<BigInt> extend_column(const std::vector<BigInt>& reduced, std::size_t leaves,
                                         std::size_t reduced_degree) {
  const std::size_t n = reduced.size() - 1;
  const std::vector<BigInt> choose = binomial_row(leaves);
  std::vector<BigInt> out(n + 1);
  for (std::size_t j = 0; j <= reduced_degree; ++j) {
    if (reduced[j].is_zero()) continue;
    for (std::size_t i = 1; i <= leaves && i + j <= n; ++i) out[i + j] += choose[i] * reduced[j];
  }
  return out;
}

}  // namespace detail

/// M[., s] by the clear-first-set-bit recurrence, evaluated along the chain
/// s -> s0 -> ... -> 0 only; the full matrix is never built.
inline std::vector<BigInt> occurrence_column(const OutcomePattern& s) {
  const std::size_t n = s.n();
  std::vector<BigInt> column(n + 1);
  column[0] = 1;  // M[0, 0] = 1
  std::size_t degree = 0;
  // The chain bottoms out at the all-zero pattern; walk it back up from
  // the last set bit to the first.
  for (std::size_t j = s.size(); j-- > 0;) {
    if (!s[j]) continue;
    column = detail::extend_column(column, s.pool_size(j), degree);
    degree += s.pool_size(j);
  }
  return column;
}

/// Number of size-k infection sets whose first-stage outcome is exactly s.
inline BigInt occurrence_count(std::size_t n, std::size_t k, const OutcomePattern& s) {
  if (s.n() != n) throw ParameterError("pattern was built for a different population size");
  if (k > n) throw ParameterError("k exceeds n");
  return occurrence_column(s)[k];
}

/// Independent check of occurrence_count by enumerating every k-subset.
inline std::uint64_t brute_force_occurrence(std::size_t n, std::size_t k, const OutcomePattern& s) {
  if (n > 16) throw ParameterError("brute-force enumeration is limited to n <= 16");
  if (s.n() != n) throw ParameterError("pattern was built for a different population size");
  if (k > n) return 0;
  const DiagonalLayout layout = diagonal_layout(SubtreeRef::root(n));
  std::vector<std::uint32_t> pool_masks;
  for (const SubtreeRef& node : layout.nodes) {
    std::uint32_t m = 0;
    for (std::size_t leaf = node.leaf_lo; leaf <= node.leaf_hi; ++leaf) m |= 1U << (leaf - 1);
    pool_masks.push_back(m);
  }
  std::uint64_t matches = 0;
  for (std::uint32_t infected = 0; infected < (1U << n); ++infected) {
    if (static_cast<std::size_t>(std::popcount(infected)) != k) continue;
    bool same = true;
    for (std::size_t j = 0; j < pool_masks.size() && same; ++j) {
      same = ((infected & pool_masks[j]) != 0) == s[j];
    }
    matches += same ? 1 : 0;
  }
  return matches;
}

inline LikelihoodColumn likelihood_column(std::size_t n, const OutcomePattern& s) {
  if (s.n() != n) throw ParameterError("pattern was built for a different population size");
  LikelihoodColumn col;
  col.n = n;
  col.counts = occurrence_column(s);
  col.binomials = binomial_row(n);
  col.likelihoods.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    col.likelihoods[k] =
        col.counts[k].is_zero() ? 0.0 : ratio_to_double(col.counts[k], col.binomials[k]);
  }
  return col;
}

/// argmax_k L_s(k), compared exactly; ties go to the smaller k.
inline std::size_t estimate_k(const LikelihoodColumn& column) {
  std::size_t best = column.counts.size();
  for (std::size_t k = 0; k < column.counts.size(); ++k) {
    if (column.counts[k].is_zero()) continue;
    if (best == column.counts.size() ||
        column.counts[k] * column.binomials[best] > column.counts[best] * column.binomials[k]) {
      best = k;
    }
  }
  if (best == column.counts.size()) {
    throw ParameterError("pattern is inconsistent with every infection count");
  }
  return best;
}

/// Process-wide memo of estimate_k per (n, pattern); columns at n = 1024
/// are expensive and sweeps revisit the same few hundred patterns.
class EstimateCache {
 public:
  static EstimateCache& global() {
    static EstimateCache cache;
    return cache;
  }

  std::size_t estimate(const OutcomePattern& s) {
    const auto key = std::make_pair(s.n(), s.mask());
    {
      std::lock_guard lock(mutex_);
      if (auto it = table_.find(key); it != table_.end()) return it->second;
    }
    const std::size_t k_hat = estimate_k(likelihood_column(s.n(), s));
    std::lock_guard lock(mutex_);
    table_.emplace(key, k_hat);
    return k_hat;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::size_t> table_;
};

/// Splits the residual estimate max(k_hat - certified, #subtrees) across
/// positive subtrees in proportion to their leaf counts (largest
/// remainder; ties to the larger subtree, then the earlier one), then
/// clamps each share to [1, leaves].
inline std::vector<std::size_t> allocate_estimate(std::size_t k_hat, std::size_t certified,
                                                  const std::vector<std::size_t>& leaf_counts) {
  const std::size_t m = leaf_counts.size();
  if (m == 0) return {};
  const std::size_t residual = std::max(k_hat > certified ? k_hat - certified : 0, m);
  const std::size_t total = std::accumulate(leaf_counts.begin(), leaf_counts.end(), std::size_t{0});
  if (total == 0) throw ParameterError("subtrees must have at least one leaf");

  std::vector<std::size_t> share(m), remainder(m);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    share[j] = residual * leaf_counts[j] / total;
    remainder[j] = residual * leaf_counts[j] % total;
    assigned += share[j];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return leaf_counts[a] > leaf_counts[b];
  });
  for (std::size_t j = 0; assigned < residual; ++j, ++assigned) ++share[order[j % m]];
  for (std::size_t j = 0; j < m; ++j) share[j] = std::clamp(share[j], std::size_t{1}, leaf_counts[j]);
  return share;
}

/// Full occurrence matrix as CSV: one row per k, one column per pattern
/// bitstring in ascending numeric order.
inline void write_matrix_csv(std::size_t n, std::ostream& out) {
  if (n > 16) throw ParameterError("matrix dumps are limited to n <= 16");
  const std::size_t width = tree_height(n) + 1;
  const std::uint64_t patterns = std::uint64_t{1} << width;
  std::vector<std::vector<BigInt>> columns;
  out << 'k';
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    const OutcomePattern s = OutcomePattern::from_mask(n, mask);
    out << ',' << s.to_string();
    columns.push_back(occurrence_column(s));
  }
  out << '\n';
  for (std::size_t k = 0; k <= n; ++k) {
    out << k;
    for (const auto& col : columns) out << ',' << col[k];
    out << '\n';
  }
}

}  // namespace dsgt
