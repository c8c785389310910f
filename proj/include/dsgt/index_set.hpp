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
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dsgt/errors.hpp"

namespace dsgt {

// Closed interval of 1-based individual indices.
struct Interval {
  std::size_t lo = 1;
  std::size_t hi = 0;

  std::size_t size() const { return hi - lo + 1; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Ordered set of 1-based indices stored as sorted, disjoint, non-adjacent
// intervals. Every population subset the algorithms touch is a union of a
// few contiguous ranges, so pools of 512 members cost one interval.
class IndexSet {
 public:
  IndexSet() = default;

  static IndexSet range(std::size_t lo, std::size_t hi) {
    IndexSet s;
    if (lo == 0) throw ParameterError("IndexSet: indices are 1-based");
    if (lo <= hi) {
      s.runs_.push_back({lo, hi});
      s.size_ = hi - lo + 1;
    }
    return s;
  }

  // Throws ParameterError on a zero index or a duplicate.
  static IndexSet from_indices(std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    IndexSet s;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const std::size_t i = indices[k];
      if (i == 0) throw ParameterError("IndexSet: indices are 1-based");
      if (k > 0 && indices[k - 1] == i) {
        throw ParameterError("IndexSet: duplicate index " + std::to_string(i));
      }
      s.append(i, i);
    }
    return s;
  }

  static IndexSet of(std::initializer_list<std::size_t> indices) {
    return from_indices(std::vector<std::size_t>(indices));
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t front() const { return runs_.front().lo; }
  std::size_t back() const { return runs_.back().hi; }
  std::span<const Interval> intervals() const { return runs_; }

  bool contains(std::size_t i) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), i,
                               [](std::size_t v, const Interval& r) { return v < r.lo; });
    if (it == runs_.begin()) return false;
    return std::prev(it)->hi >= i;
  }

  // The first `count` members in ascending order.
  IndexSet prefix(std::size_t count) const {
    IndexSet out;
    for (const Interval& r : runs_) {
      if (count == 0) break;
      const std::size_t take = std::min(count, r.size());
      out.append(r.lo, r.lo + take - 1);
      count -= take;
    }
    return out;
  }

  IndexSet minus(const IndexSet& other) const {
    IndexSet out;
    auto o = other.runs_.begin();
    for (Interval r : runs_) {
      while (o != other.runs_.end() && o->hi < r.lo) ++o;
      auto p = o;
      std::size_t lo = r.lo;
      while (p != other.runs_.end() && p->lo <= r.hi) {
        if (p->lo > lo) out.append(lo, p->lo - 1);
        lo = std::max(lo, p->hi + 1);
        ++p;
      }
      if (lo <= r.hi) out.append(lo, r.hi);
    }
    return out;
  }

  IndexSet merged(const IndexSet& other) const {
    std::vector<Interval> all;
    all.reserve(runs_.size() + other.runs_.size());
    std::merge(runs_.begin(), runs_.end(), other.runs_.begin(), other.runs_.end(),
               std::back_inserter(all),
               [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    IndexSet out;
    for (const Interval& r : all) {
      if (!out.runs_.empty() && r.lo <= out.runs_.back().hi) {
        throw ParameterError("IndexSet: merged sets overlap");
      }
      out.append(r.lo, r.hi);
    }
    return out;
  }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(size_);
    for (const Interval& r : runs_) {
      for (std::size_t i = r.lo; i <= r.hi; ++i) out.push_back(i);
    }
    return out;
  }

  // "1-4", "7", "1-2,5,9-12".
  std::string to_string() const {
    std::string out;
    for (const Interval& r : runs_) {
      if (!out.empty()) out += ',';
      out += std::to_string(r.lo);
      if (r.hi != r.lo) out += '-' + std::to_string(r.hi);
    }
    return out;
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  // Requires lo > back() (or the set empty).
  void append(std::size_t lo, std::size_t hi) {
    if (!runs_.empty() && runs_.back().hi + 1 == lo) {
      runs_.back().hi = hi;
    } else {
      runs_.push_back({lo, hi});
    }
    size_ += hi - lo + 1;
  }

  std::vector<Interval> runs_;
  std::size_t size_ = 0;
};

}  // namespace dsgt
