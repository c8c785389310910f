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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsgt/core.hpp"
#include "dsgt/likelihood.hpp"
#include "dsgt/tree.hpp"

namespace dsgt {

enum class Strategy { Bsa, Hgbsa, Dsa, Hybrid };

inline std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Bsa: return "bsa";
    case Strategy::Hgbsa: return "hgbsa";
    case Strategy::Dsa: return "dsa";
    case Strategy::Hybrid: return "hybrid";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::Bsa, Strategy::Hgbsa, Strategy::Dsa, Strategy::Hybrid}) {
    if (strategy_name(s) == name) return s;
  }
  throw ParameterError("unknown algorithm '" + std::string(name) + "'");
}

// How HGBSA treats its defective count.
//   Exact:    the count is the truth; once it is used up the rest is healthy.
//   Estimate: the count is a guess; once it is used up, leftovers are
//             verified with one pooled test and, if positive, searched
//             again with the original density rescaled to what is left.
enum class CountTrust { Exact, Estimate };

struct AlgorithmConfig {
  Strategy strategy = Strategy::Dsa;
  std::size_t k_input = 0;  // HGBSA only
  CountTrust trust = CountTrust::Exact;  // HGBSA only
  // Spend one test on the whole population first. BSA already opens with
  // that test, so the flag does not change it.
  bool initial_screen = false;

  static AlgorithmConfig bsa() { return {Strategy::Bsa}; }
  static AlgorithmConfig dsa() { return {Strategy::Dsa}; }
  static AlgorithmConfig hybrid() { return {Strategy::Hybrid}; }
  static AlgorithmConfig hgbsa(std::size_t k, CountTrust trust = CountTrust::Exact) {
    return {Strategy::Hgbsa, k, trust};
  }
};

inline void validate_config(const AlgorithmConfig& config, std::size_t n) {
  if (n == 0) throw ParameterError("population size must be at least 1");
  switch (config.strategy) {
    case Strategy::Hgbsa:
      if (config.k_input > n) {
        throw ParameterError("hgbsa k_input=" + std::to_string(config.k_input) + " exceeds n=" +
                             std::to_string(n));
      }
      break;
    case Strategy::Dsa:
    case Strategy::Hybrid:
      if (tree_height(n) < 1) throw ParameterError("diagonal splitting needs n >= 2");
      break;
    case Strategy::Bsa:
      break;
  }
}

/// Diagnosis plus the hybrid's estimate of k (other strategies leave it empty).
struct Resolution {
  Diagnosis diagnosis;
  std::optional<std::size_t> k_estimate;
};

struct RunResult {
  Diagnosis diagnosis;
  TestLedger ledger;
  std::optional<std::size_t> k_estimate;
};

namespace detail {

template <BatchOracle O>
bool test_one(O& oracle, const IndexSet& members) {
  const Pool pool(members);
  return oracle.submit(std::span<const Pool>(&pool, 1)).front();
}

inline std::vector<bool> slice(const std::vector<bool>& v, std::size_t offset, std::size_t count) {
  return {v.begin() + static_cast<std::ptrdiff_t>(offset),
          v.begin() + static_cast<std::ptrdiff_t>(offset + count)};
}

}  // namespace detail

/// Hwang's generalized binary splitting over one item set, written as a
/// round-by-round state machine so several searches can share stages.
///
/// With k' defectives believed among n' unresolved items:
///   k' == 0            -> done (Exact) or one verification pool (Estimate),
///                         restarting at the initial density if it is positive;
///   2k' >= n' + 1      -> every item tested individually in one round;
///   otherwise          -> pool the first 2^a items, a = floor(log2((n'-k'+1)/k')),
///                         and binary-search a positive pool down to one defective.
/// A set already known to be positive skips the pool test that would cover
/// all of it.
class HgbsaSearch {
 public:
  HgbsaSearch(IndexSet items, std::size_t believed, CountTrust trust, bool known_positive)
      : unresolved_(std::move(items)),
        believed_(believed),
        initial_believed_(believed),
        initial_size_(unresolved_.size()),
        trust_(trust),
        known_positive_(known_positive) {}

  bool done() const { return phase_ == Phase::Done; }
  const IndexSet& infected() const { return infected_; }
  const IndexSet& healthy() const { return healthy_; }

  /// Pools for the next round; empty once the search is finished. Each
  /// non-empty round must be answered by accept() before the next call.
  std::vector<Pool> next_round() {
    for (;;) {
      switch (phase_) {
        case Phase::Done:
          return {};
        case Phase::Search:
          if (candidate_.size() == 1) {
            found(candidate_);
            continue;
          }
          probe_ = candidate_.prefix(candidate_.size() / 2);
          pending_ = Pending::Half;
          return {Pool(probe_)};
        case Phase::Choose: {
          if (unresolved_.empty()) {
            phase_ = Phase::Done;
            return {};
          }
          if (believed_ == 0) {
            if (known_positive_) {
              believed_ = 1;
            } else if (trust_ == CountTrust::Exact) {
              clear(unresolved_);
              phase_ = Phase::Done;
              return {};
            } else {
              probe_ = unresolved_;
              pending_ = Pending::Verify;
              return {Pool(probe_)};
            }
          }
          const std::size_t remaining = unresolved_.size();
          if (2 * believed_ >= remaining + 1) {
            pending_ = Pending::Individual;
            std::vector<Pool> pools;
            pools.reserve(remaining);
            for (std::size_t i : unresolved_.indices()) pools.push_back(Pool::range(i, i));
            return pools;
          }
          std::size_t group = 1;
          while (believed_ * group * 2 <= remaining - believed_ + 1) group *= 2;
          probe_ = unresolved_.prefix(group);
          if (known_positive_ && probe_.size() == remaining) {
            candidate_ = probe_;
            phase_ = Phase::Search;
            continue;
          }
          pending_ = Pending::Group;
          return {Pool(probe_)};
        }
      }
    }
  }

  void accept(const std::vector<bool>& outcomes) {
    switch (pending_) {
      case Pending::None:
        throw ProtocolError("no round is awaiting outcomes");
      case Pending::Verify:
        if (outcomes.front()) {
          known_positive_ = true;
          believed_ = std::max<std::size_t>(1, rescaled_count());
        } else {
          clear(unresolved_);
          phase_ = Phase::Done;
        }
        break;
      case Pending::Individual: {
        const std::vector<std::size_t> items = unresolved_.indices();
        if (outcomes.size() != items.size()) throw ProtocolError("individual round size mismatch");
        std::vector<std::size_t> pos, neg;
        for (std::size_t j = 0; j < items.size(); ++j) (outcomes[j] ? pos : neg).push_back(items[j]);
        infected_ = infected_.merged(IndexSet::from_indices(std::move(pos)));
        healthy_ = healthy_.merged(IndexSet::from_indices(std::move(neg)));
        unresolved_ = IndexSet();
        phase_ = Phase::Done;
        break;
      }
      case Pending::Group:
        if (outcomes.front()) {
          candidate_ = probe_;
          phase_ = Phase::Search;
        } else {
          clear(probe_);
        }
        break;
      case Pending::Half:
        if (outcomes.front()) {
          candidate_ = probe_;
        } else {
          clear(probe_);
          candidate_ = candidate_.minus(probe_);
        }
        break;
    }
    pending_ = Pending::None;
  }

 private:
  enum class Phase { Choose, Search, Done };
  enum class Pending { None, Verify, Individual, Group, Half };

  // round(initial_believed * |unresolved| / initial_size)
  std::size_t rescaled_count() const {
    if (initial_size_ == 0) return 0;
    return (2 * initial_believed_ * unresolved_.size() + initial_size_) / (2 * initial_size_);
  }

  void clear(const IndexSet& members) {
    healthy_ = healthy_.merged(members);
    unresolved_ = unresolved_.minus(members);
  }

  void found(const IndexSet& single) {
    infected_ = infected_.merged(single);
    unresolved_ = unresolved_.minus(single);
    if (believed_ > 0) --believed_;
    known_positive_ = false;
    phase_ = Phase::Choose;
  }

  IndexSet unresolved_;
  std::size_t believed_;
  std::size_t initial_believed_;
  std::size_t initial_size_;
  CountTrust trust_;
  bool known_positive_;
  Phase phase_ = Phase::Choose;
  Pending pending_ = Pending::None;
  IndexSet probe_;
  IndexSet candidate_;
  IndexSet infected_;
  IndexSet healthy_;
};

/// Steps all searches in lockstep; each round's pools from every search go
/// out as one stage.
template <BatchOracle O>
void run_in_lockstep(O& oracle, std::vector<HgbsaSearch>& searches) {
  for (;;) {
    std::vector<Pool> batch;
    std::vector<std::size_t> counts(searches.size());
    for (std::size_t j = 0; j < searches.size(); ++j) {
      std::vector<Pool> pools = searches[j].next_round();
      counts[j] = pools.size();
      for (Pool& p : pools) batch.push_back(std::move(p));
    }
    if (batch.empty()) return;
    const std::vector<bool> outcomes = oracle.submit(batch);
    std::size_t offset = 0;
    for (std::size_t j = 0; j < searches.size(); ++j) {
      if (counts[j] == 0) continue;
      searches[j].accept(detail::slice(outcomes, offset, counts[j]));
      offset += counts[j];
    }
  }
}

/// Sequential binary splitting: test everything unresolved; if positive,
/// halve down to one defective (a negative left half clears itself and
/// certifies the right half untested), then start over on what is left.
template <BatchOracle O>
Resolution solve_bsa(O& oracle, const AlgorithmConfig& config) {
  const std::size_t n = oracle.population();
  validate_config(config, n);
  DiagnosisBuilder diag(n);
  IndexSet unresolved = IndexSet::range(1, n);
  while (!unresolved.empty()) {
    if (!detail::test_one(oracle, unresolved)) {
      diag.mark(unresolved, Status::Healthy);
      break;
    }
    IndexSet candidate = unresolved;
    while (candidate.size() > 1) {
      const IndexSet left = candidate.prefix((candidate.size() + 1) / 2);
      if (detail::test_one(oracle, left)) {
        candidate = left;
      } else {
        diag.mark(left, Status::Healthy);
        unresolved = unresolved.minus(left);
        candidate = candidate.minus(left);
      }
    }
    diag.mark(candidate, Status::Infected);
    unresolved = unresolved.minus(candidate);
  }
  return {diag.finish(), std::nullopt};
}

template <BatchOracle O>
Resolution solve_hgbsa(O& oracle, const AlgorithmConfig& config) {
  const std::size_t n = oracle.population();
  validate_config(config, n);
  DiagnosisBuilder diag(n);
  const IndexSet everyone = IndexSet::range(1, n);
  bool known_positive = false;
  if (config.initial_screen) {
    if (!detail::test_one(oracle, everyone)) {
      diag.mark(everyone, Status::Healthy);
      return {diag.finish(), std::nullopt};
    }
    known_positive = true;
  }
  std::vector<HgbsaSearch> searches{HgbsaSearch(everyone, config.k_input, config.trust, known_positive)};
  run_in_lockstep(oracle, searches);
  diag.mark(searches.front().infected(), Status::Infected);
  diag.mark(searches.front().healthy(), Status::Healthy);
  return {diag.finish(), std::nullopt};
}

namespace detail {

// Resolves one stage of diagonal layouts: negatives are healthy, positive
// single leaves infected. Returns the positive subtrees still to split.
inline std::vector<SubtreeRef> resolve_layouts(const std::vector<DiagonalLayout>& layouts,
                                               const std::vector<bool>& outcomes,
                                               DiagnosisBuilder& diag) {
  std::vector<SubtreeRef> next;
  std::size_t offset = 0;
  for (const DiagonalLayout& layout : layouts) {
    const std::vector<bool> mine = slice(outcomes, offset, layout.nodes.size());
    offset += layout.nodes.size();
    for (std::size_t j = 0; j < mine.size(); ++j) {
      const SubtreeRef& node = layout.nodes[j];
      if (!mine[j]) {
        diag.mark(node.pool().members(), Status::Healthy);
      } else if (node.leaves() == 1) {
        diag.mark(node.leaf_lo, Status::Infected);
      }
    }
    for (const SubtreeRef& child : children_layouts(layout, mine)) next.push_back(child);
  }
  return next;
}

template <BatchOracle O>
bool screen_population(O& oracle, DiagnosisBuilder& diag) {
  const IndexSet everyone = IndexSet::range(1, oracle.population());
  if (test_one(oracle, everyone)) return true;
  diag.mark(everyone, Status::Healthy);
  return false;
}

}  // namespace detail

/// Diagonal splitting: slice every positive subtree diagonally, all
/// subtrees of one generation in a single stage, until no positive pool
/// with two or more members is left.
template <BatchOracle O>
Resolution solve_dsa(O& oracle, const AlgorithmConfig& config) {
  const std::size_t n = oracle.population();
  validate_config(config, n);
  DiagnosisBuilder diag(n);
  if (config.initial_screen && !detail::screen_population(oracle, diag)) {
    return {diag.finish(), std::nullopt};
  }
  std::vector<SubtreeRef> frontier{SubtreeRef::root(n)};
  while (!frontier.empty()) {
    std::vector<DiagonalLayout> layouts;
    std::vector<Pool> batch;
    for (const SubtreeRef& subtree : frontier) {
      layouts.push_back(diagonal_layout(subtree));
      const auto& pools = layouts.back().pools;
      batch.insert(batch.end(), pools.begin(), pools.end());
    }
    frontier = detail::resolve_layouts(layouts, oracle.submit(batch), diag);
  }
  return {diag.finish(), std::nullopt};
}

/// One diagonal stage, a likelihood estimate of k from its outcome
/// pattern, then HGBSA in every positive subtree with its share of the
/// estimate (after subtracting infections the stage already certified).
template <BatchOracle O>
Resolution solve_hybrid(O& oracle, const AlgorithmConfig& config) {
  const std::size_t n = oracle.population();
  validate_config(config, n);
  DiagnosisBuilder diag(n);
  if (config.initial_screen && !detail::screen_population(oracle, diag)) {
    return {diag.finish(), std::size_t{0}};
  }
  const DiagonalLayout root = diagonal_layout(SubtreeRef::root(n));
  const std::vector<bool> outcomes = oracle.submit(root.pools);
  const std::size_t k_hat = EstimateCache::global().estimate(OutcomePattern(n, outcomes));

  std::size_t certified = 0;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    if (outcomes[j] && root.nodes[j].leaves() == 1) ++certified;
  }
  const std::vector<SubtreeRef> positive = detail::resolve_layouts({root}, outcomes, diag);
  std::vector<std::size_t> leaves;
  for (const SubtreeRef& s : positive) leaves.push_back(s.leaves());
  const std::vector<std::size_t> shares = allocate_estimate(k_hat, certified, leaves);

  std::vector<HgbsaSearch> searches;
  for (std::size_t j = 0; j < positive.size(); ++j) {
    searches.emplace_back(IndexSet::range(positive[j].leaf_lo, positive[j].leaf_hi), shares[j],
                          CountTrust::Estimate, true);
  }
  run_in_lockstep(oracle, searches);
  for (const HgbsaSearch& s : searches) {
    diag.mark(s.infected(), Status::Infected);
    diag.mark(s.healthy(), Status::Healthy);
  }
  return {diag.finish(), k_hat};
}

template <BatchOracle O>
Resolution solve(O& oracle, const AlgorithmConfig& config) {
  switch (config.strategy) {
    case Strategy::Bsa: return solve_bsa(oracle, config);
    case Strategy::Hgbsa: return solve_hgbsa(oracle, config);
    case Strategy::Dsa: return solve_dsa(oracle, config);
    case Strategy::Hybrid: return solve_hybrid(oracle, config);
  }
  throw ParameterError("unknown strategy");
}

/// Runs `config` against a simulated instance and returns the full ledger.
inline RunResult run(const InfectionInstance& instance, const AlgorithmConfig& config) {
  TestLedger ledger;
  SimulatedOracle oracle(instance, ledger);
  Resolution r = solve(oracle, config);
  return {std::move(r.diagnosis), std::move(ledger), r.k_estimate};
}

inline RunResult run_bsa(const InfectionInstance& instance, AlgorithmConfig config = {}) {
  config.strategy = Strategy::Bsa;
  return run(instance, config);
}

inline RunResult run_hgbsa(const InfectionInstance& instance, AlgorithmConfig config) {
  config.strategy = Strategy::Hgbsa;
  return run(instance, config);
}

inline RunResult run_dsa(const InfectionInstance& instance, AlgorithmConfig config = {}) {
  config.strategy = Strategy::Dsa;
  return run(instance, config);
}

inline RunResult run_hybrid(const InfectionInstance& instance, AlgorithmConfig config = {}) {
  config.strategy = Strategy::Hybrid;
  return run(instance, config);
}

}  // namespace dsgt
