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

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dsgt/errors.hpp"
#include "dsgt/index_set.hpp"
#include "dsgt/rng.hpp"

namespace dsgt {

/// Exactly `k` of the population infected, every k-subset equally likely.
struct Combinatorial {
  std::size_t k = 0;
  friend bool operator==(const Combinatorial&, const Combinatorial&) = default;
};

/// Every individual infected independently with probability `p`.
struct Probabilistic {
  double p = 0.0;
  friend bool operator==(const Probabilistic&, const Probabilistic&) = default;
};

using InfectionModel = std::variant<Combinatorial, Probabilistic>;

inline void validate_model(const InfectionModel& model, std::size_t n) {
  if (n == 0) throw ParameterError("population size must be at least 1");
  if (const auto* c = std::get_if<Combinatorial>(&model)) {
    if (c->k > n) {
      throw ParameterError("combinatorial k=" + std::to_string(c->k) + " exceeds n=" +
                           std::to_string(n));
    }
  } else {
    const double p = std::get<Probabilistic>(model).p;
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("probability p must lie in [0, 1]");
  }
}

/// Ground truth for one simulated population.
class InfectionInstance {
 public:
  InfectionInstance(std::vector<bool> statuses, InfectionModel model, std::uint64_t seed)
      : statuses_(std::move(statuses)), model_(model), seed_(seed) {
    validate_model(model_, statuses_.size());
    prefix_.resize(statuses_.size() + 1, 0);
    for (std::size_t i = 0; i < statuses_.size(); ++i) {
      prefix_[i + 1] = prefix_[i] + (statuses_[i] ? 1 : 0);
    }
    if (const auto* c = std::get_if<Combinatorial>(&model_); c && c->k != infected_count()) {
      throw ParameterError("instance does not hold exactly k infections");
    }
  }

  std::size_t n() const { return statuses_.size(); }
  const std::vector<bool>& statuses() const { return statuses_; }
  const InfectionModel& model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t infected_count() const { return prefix_.back(); }

  // 1-based.
  bool infected(std::size_t i) const { return statuses_.at(i - 1); }

  std::size_t infected_in(const IndexSet& members) const {
    std::size_t count = 0;
    for (const Interval& r : members.intervals()) {
      if (r.hi > n()) throw ProtocolError("pool index " + std::to_string(r.hi) + " out of range");
      count += prefix_[r.hi] - prefix_[r.lo - 1];
    }
    return count;
  }

  IndexSet infected_set() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < statuses_.size(); ++i) {
      if (statuses_[i]) idx.push_back(i + 1);
    }
    return IndexSet::from_indices(std::move(idx));
  }

 private:
  std::vector<bool> statuses_;
  InfectionModel model_;
  std::uint64_t seed_;
  std::vector<std::size_t> prefix_;
};

/// Draws an instance: a uniform k-subset (partial Fisher-Yates) or i.i.d.
/// Bernoulli(p) statuses. Bit-identical for identical (model, n, seed).
inline InfectionInstance generate_instance(const InfectionModel& model, std::size_t n,
                                           std::uint64_t seed) {
  validate_model(model, n);
  Rng rng(seed);
  std::vector<bool> statuses(n, false);
  if (const auto* c = std::get_if<Combinatorial>(&model)) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t j = 0; j < c->k; ++j) {
      const std::size_t pick = j + uniform_below(rng, n - j);
      std::swap(order[j], order[pick]);
      statuses[order[j]] = true;
    }
  } else {
    const double p = std::get<Probabilistic>(model).p;
    for (std::size_t i = 0; i < n; ++i) statuses[i] = uniform_unit(rng) < p;
  }
  return InfectionInstance(std::move(statuses), model, seed);
}

/// Instance with a chosen infected set; tagged Combinatorial(|infected|).
inline InfectionInstance instance_with_infected(std::size_t n, const IndexSet& infected) {
  if (n == 0) throw ParameterError("population size must be at least 1");
  std::vector<bool> statuses(n, false);
  for (std::size_t i : infected.indices()) {
    if (i > n) throw ParameterError("infected index " + std::to_string(i) + " out of range");
    statuses[i - 1] = true;
  }
  return InfectionInstance(std::move(statuses), Combinatorial{infected.size()}, 0);
}

/// Non-empty set of individuals whose samples are mixed into one test.
class Pool {
 public:
  explicit Pool(IndexSet members) : members_(std::move(members)) {
    if (members_.empty()) throw ParameterError("a pool must contain at least one individual");
  }
  static Pool range(std::size_t lo, std::size_t hi) { return Pool(IndexSet::range(lo, hi)); }

  const IndexSet& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  std::string to_string() const { return members_.to_string(); }

  friend bool operator==(const Pool&, const Pool&) = default;

 private:
  IndexSet members_;
};

/// Noiseless OR channel: positive iff some member is infected.
inline bool evaluate_pool(const InfectionInstance& instance, const Pool& pool) {
  return instance.infected_in(pool.members()) > 0;
}

struct TestRecord {
  Pool pool;
  bool positive;
};

using Stage = std::vector<TestRecord>;

/// Metered record of every pooled test, grouped into stages.
class TestLedger {
 public:
  const std::vector<Stage>& stages() const { return stages_; }
  std::size_t tests_total() const { return tests_; }
  std::size_t stages_total() const { return stages_.size(); }

  void record_stage(std::span<const Pool> pools, const std::vector<bool>& outcomes) {
    if (pools.empty()) throw ProtocolError("a stage must contain at least one test");
    if (pools.size() != outcomes.size()) {
      throw ProtocolError("stage has " + std::to_string(pools.size()) + " pools but " +
                          std::to_string(outcomes.size()) + " outcomes");
    }
    Stage stage;
    stage.reserve(pools.size());
    for (std::size_t j = 0; j < pools.size(); ++j) stage.push_back({pools[j], outcomes[j]});
    stages_.push_back(std::move(stage));
    tests_ += pools.size();
  }

 private:
  std::vector<Stage> stages_;
  std::size_t tests_ = 0;
};

/// Runs one stage against the ground truth: all pools are evaluated before
/// any outcome is returned. Outcomes come back in input order.
inline std::vector<bool> submit_batch(TestLedger& ledger, const InfectionInstance& instance,
                                      std::span<const Pool> pools) {
  if (pools.empty()) throw ProtocolError("cannot submit an empty batch");
  std::vector<bool> outcomes;
  outcomes.reserve(pools.size());
  for (const Pool& pool : pools) outcomes.push_back(evaluate_pool(instance, pool));
  ledger.record_stage(pools, outcomes);
  return outcomes;
}

enum class Status { Healthy, Infected };

/// Resolved status of every individual.
class Diagnosis {
 public:
  explicit Diagnosis(std::vector<Status> statuses) : statuses_(std::move(statuses)) {}

  std::size_t n() const { return statuses_.size(); }
  const std::vector<Status>& statuses() const { return statuses_; }
  Status status(std::size_t i) const { return statuses_.at(i - 1); }

  IndexSet infected_set() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < statuses_.size(); ++i) {
      if (statuses_[i] == Status::Infected) idx.push_back(i + 1);
    }
    return IndexSet::from_indices(std::move(idx));
  }

  bool matches(const InfectionInstance& truth) const {
    if (truth.n() != n()) return false;
    for (std::size_t i = 0; i < n(); ++i) {
      if ((statuses_[i] == Status::Infected) != truth.statuses()[i]) return false;
    }
    return true;
  }

  friend bool operator==(const Diagnosis&, const Diagnosis&) = default;

 private:
  std::vector<Status> statuses_;
};

/// Accumulates per-individual conclusions while an algorithm runs.
class DiagnosisBuilder {
 public:
  explicit DiagnosisBuilder(std::size_t n) : slots_(n) {}

  void mark(const IndexSet& members, Status status) {
    for (const Interval& r : members.intervals()) {
      for (std::size_t i = r.lo; i <= r.hi; ++i) mark(i, status);
    }
  }

  void mark(std::size_t i, Status status) {
    auto& slot = slots_.at(i - 1);
    if (slot && *slot != status) {
      throw std::logic_error("conflicting conclusions for individual " + std::to_string(i));
    }
    slot = status;
  }

  Diagnosis finish() const {
    std::vector<Status> out;
    out.reserve(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (!slots_[i]) {
        throw std::logic_error("individual " + std::to_string(i + 1) + " left unresolved");
      }
      out.push_back(*slots_[i]);
    }
    return Diagnosis(std::move(out));
  }

 private:
  std::vector<std::optional<Status>> slots_;
};

/// Anything that answers one stage of pooled tests at a time.
template <class O>
concept BatchOracle = requires(O& oracle, std::span<const Pool> pools) {
  { oracle.population() } -> std::convertible_to<std::size_t>;
  { oracle.submit(pools) } -> std::same_as<std::vector<bool>>;
};

/// Oracle backed by a simulated instance; every stage lands in `ledger`.
class SimulatedOracle {
 public:
  SimulatedOracle(const InfectionInstance& instance, TestLedger& ledger)
      : instance_(&instance), ledger_(&ledger) {}

  std::size_t population() const { return instance_->n(); }
  std::vector<bool> submit(std::span<const Pool> pools) {
    return submit_batch(*ledger_, *instance_, pools);
  }

 private:
  const InfectionInstance* instance_;
  TestLedger* ledger_;
};

}  // namespace dsgt
