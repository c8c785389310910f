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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "dsgt/combinatorics.hpp"
#include "dsgt/core.hpp"
#include "dsgt/tree.hpp"

namespace dsgt {

struct ModelParams {
  std::size_t n = 1;
  InfectionModel regime = Combinatorial{0};
};

/// Probability that a tree node at `depth` (n_i = n / 2^depth leaves) holds
/// at least one infection: hypergeometric for the combinatorial model,
/// binomial for the i.i.d. model.
inline double positive_prob(const ModelParams& params, unsigned depth) {
  const unsigned d = tree_height(params.n);
  validate_model(params.regime, params.n);
  if (depth < 1 || depth > d) throw ParameterError("depth must lie in [1, log2 n]");
  const std::size_t leaves = params.n >> depth;
  if (const auto* c = std::get_if<Combinatorial>(&params.regime)) {
    const BigInt clean = binomial(params.n - c->k, leaves);
    if (clean.is_zero()) return 1.0;
    return ratio_to_double(binomial(params.n, leaves) - clean, binomial(params.n, leaves));
  }
  const double p = std::get<Probabilistic>(params.regime).p;
  return -std::expm1(static_cast<double>(leaves) * std::log1p(-p));
}

/// Expected DSA tests, excluding the initial whole-population screen:
///   E[T] = d + 1 + sum_{i=1}^{d-1} 2^{i-1} P_i^+ (d - i + 1).
inline double expected_tests_dsa(const ModelParams& params) {
  const unsigned d = tree_height(params.n);
  double total = d + 1.0;
  for (unsigned i = 1; i + 1 <= d; ++i) {
    total += std::ldexp(1.0, static_cast<int>(i) - 1) * positive_prob(params, i) * (d - i + 1.0);
  }
  return total;
}

/// Closed form of expected_tests_dsa at k = 1 (or p = 1/n).
inline double corollary_k1(unsigned d) { return 0.25 * d * d + 1.25 * d + 0.5; }

/// Closed form of expected_tests_dsa at k = n (or p = 1).
inline double corollary_kn(std::size_t n) {
  tree_height(n);
  return 1.5 * static_cast<double>(n) - 1.0;
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// log2 C(n, k), or n h2(p) for the i.i.d. model.
inline double counting_bound(const ModelParams& params) {
  validate_model(params.regime, params.n);
  if (const auto* c = std::get_if<Combinatorial>(&params.regime)) {
    return log2_big(binomial(params.n, c->k));
  }
  return static_cast<double>(params.n) * binary_entropy(std::get<Probabilistic>(params.regime).p);
}

/// k log2 n + k.
inline double bsa_bound(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw ParameterError("bsa_bound needs 1 <= k <= n");
  return static_cast<double>(k) * std::log2(static_cast<double>(n)) + static_cast<double>(k);
}

/// log2 C(n, k) + k.
inline double hgbsa_bound(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw ParameterError("hgbsa_bound needs 1 <= k <= n");
  return log2_big(binomial(n, k)) + static_cast<double>(k);
}

/// sum_{i=1}^{beta} i 2^{i-1} = (beta - 1) 2^beta + 1.
inline std::uint64_t appendix_sum_identity(unsigned beta) {
  if (beta < 1 || beta > 57) throw ParameterError("beta must lie in [1, 57]");
  return (std::uint64_t{beta} - 1) * (std::uint64_t{1} << beta) + 1;
}

/// sum_{i=1}^{beta} 2^{i-1} (d - i + 1) = (d + 1)(2^beta - 1) - ((beta - 1) 2^beta + 1).
inline double appendix_head_sum(unsigned d, unsigned beta) {
  return (d + 1.0) * (std::ldexp(1.0, static_cast<int>(beta)) - 1.0) -
         static_cast<double>(appendix_sum_identity(beta));
}

/// eps sum_{i=beta+1}^{d-1} 2^{i-1} (d - i + 1) = eps 2^beta (beta - d - 2) + (3/2) eps 2^d.
inline double appendix_tail_sum(unsigned d, unsigned beta, double epsilon) {
  return epsilon * std::ldexp(1.0, static_cast<int>(beta)) * (static_cast<double>(beta) - d - 2.0) +
         1.5 * epsilon * std::ldexp(1.0, static_cast<int>(d));
}

/// Asymptotic upper bound on DSA's expected tests, with C = -ln(1 - eps):
///   (1/C) log2 C(n, k) + (log2 C + 2) k / C + (3/2) eps n - 1.
inline double appendix_upper_bound(std::size_t n, std::size_t k, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  if (k < 1 || k > n) throw ParameterError("appendix bound needs 1 <= k <= n");
  const double c = -std::log1p(-epsilon);
  return log2_big(binomial(n, k)) / c + (std::log2(c) + 2.0) * static_cast<double>(k) / c +
         1.5 * epsilon * static_cast<double>(n) - 1.0;
}

struct BoundReportRow {
  std::size_t n;
  std::size_t k;
  double epsilon;
  double expected_tests;  // i.i.d. model, p = k / n
  double upper_bound;
  bool bound_holds;
};

/// Where the finite-n expectation sits relative to the asymptotic bound.
inline std::vector<BoundReportRow> appendix_bound_report(const std::vector<std::size_t>& ns,
                                                         std::size_t k, double epsilon) {
  std::vector<BoundReportRow> rows;
  for (std::size_t n : ns) {
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double expected = expected_tests_dsa({n, Probabilistic{p}});
    const double bound = appendix_upper_bound(n, k, epsilon);
    rows.push_back({n, k, epsilon, expected, bound, expected <= bound});
  }
  return rows;
}

}  // namespace dsgt
