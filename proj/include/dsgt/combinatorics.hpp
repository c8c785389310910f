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
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace dsgt {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// C(n, k), zero when k > n.
inline BigInt binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c *= n - k + i;
    c /= i;
  }
  return c;
}

/// C(n, 0..n).
inline std::vector<BigInt> binomial_row(std::size_t n) {
  std::vector<BigInt> row(n + 1);
  row[0] = 1;
  for (std::size_t k = 1; k <= n; ++k) row[k] = row[k - 1] * (n - k + 1) / k;
  return row;
}

/// log2 of a positive big integer, accurate to double precision.
inline double log2_big(const BigInt& x) {
  const std::size_t msb = boost::multiprecision::msb(x);
  if (msb < 63) return std::log2(x.convert_to<double>());
  const std::size_t shift = msb - 62;
  const BigInt top = x >> shift;
  return std::log2(top.convert_to<double>()) + static_cast<double>(shift);
}

/// Exact ceil(log2 x) for x >= 1.
inline std::size_t ceil_log2_big(const BigInt& x) {
  if (x <= 1) return 0;
  return boost::multiprecision::msb(BigInt(x - 1)) + 1;
}

inline double ratio_to_double(const BigInt& num, const BigInt& den) {
  return BigRational(num, den).convert_to<double>();
}

}  // namespace dsgt
