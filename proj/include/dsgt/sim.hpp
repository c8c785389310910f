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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "dsgt/algorithms.hpp"
#include "dsgt/core.hpp"
#include "dsgt/rng.hpp"

namespace dsgt {

struct CombinatorialSweep {
  std::vector<std::size_t> k_values;
};

struct ProbabilisticSweep {
  std::vector<double> p_values;
};

using SweepRegime = std::variant<CombinatorialSweep, ProbabilisticSweep>;

struct SweepSpec {
  std::size_t n = 16;
  SweepRegime regime = CombinatorialSweep{};
  std::size_t trials = 500;
  std::vector<AlgorithmConfig> algorithms;
  std::uint64_t base_seed = 1;
  // 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
};

struct AggregateRow {
  std::string algorithm;
  std::size_t n = 0;
  std::string regime;  // "comb" or "prob"
  double param = 0.0;
  std::size_t trials = 0;
  double mean_tests = 0.0;
  double std_tests = 0.0;
  double mean_stages = 0.0;
  double std_stages = 0.0;
  std::uint64_t seed = 0;
};

inline std::size_t sweep_points(const SweepRegime& regime) {
  return std::visit(
      [](const auto& r) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, CombinatorialSweep>) {
          return r.k_values.size();
        } else {
          return r.p_values.size();
        }
      },
      regime);
}

inline InfectionModel sweep_model(const SweepRegime& regime, std::size_t index) {
  if (const auto* c = std::get_if<CombinatorialSweep>(&regime)) return Combinatorial{c->k_values[index]};
  return Probabilistic{std::get<ProbabilisticSweep>(regime).p_values[index]};
}

inline void validate_spec(const SweepSpec& spec) {
  if (spec.trials < 1) throw ParameterError("sweep needs at least one trial per point");
  if (spec.algorithms.empty()) throw ParameterError("sweep needs at least one algorithm");
  if (sweep_points(spec.regime) == 0) throw ParameterError("sweep needs at least one parameter value");
  for (std::size_t j = 0; j < sweep_points(spec.regime); ++j) validate_model(sweep_model(spec.regime, j), spec.n);
  for (const AlgorithmConfig& a : spec.algorithms) validate_config(a, spec.n);
}

/// HGBSA is told the true k under the combinatorial model and the mean
/// round(p n) under the i.i.d. model; every other strategy runs as given.
inline AlgorithmConfig config_for_instance(AlgorithmConfig config, const InfectionModel& model,
                                           std::size_t n) {
  if (config.strategy != Strategy::Hgbsa) return config;
  if (const auto* c = std::get_if<Combinatorial>(&model)) {
    config.k_input = c->k;
    config.trust = CountTrust::Exact;
  } else {
    const double mean = std::get<Probabilistic>(model).p * static_cast<double>(n);
    config.k_input = std::min(n, static_cast<std::size_t>(std::llround(mean)));
    config.trust = CountTrust::Estimate;
  }
  return config;
}

namespace detail {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

// Two-pass mean and sample (n - 1) standard deviation, summed in index
// order so results do not depend on thread scheduling.
inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

inline std::string describe_model(const InfectionModel& model) {
  if (const auto* c = std::get_if<Combinatorial>(&model)) return "comb:" + std::to_string(c->k);
  char buf[64];
  std::snprintf(buf, sizeof buf, "prob:%.6g", std::get<Probabilistic>(model).p);
  return buf;
}

}  // namespace detail

/// Runs every (algorithm, parameter) point for `trials` instances. Trial t
/// of parameter j uses seed derive_seed(base_seed, {j, t}) for every
/// algorithm, so algorithms are compared on identical instances.
inline std::vector<AggregateRow> run_sweep(const SweepSpec& spec) {
  validate_spec(spec);
  const std::size_t points = sweep_points(spec.regime);
  const std::size_t algos = spec.algorithms.size();

  // tests[point][algo][trial], stages likewise.
  using Grid = std::vector<std::vector<std::vector<double>>>;
  Grid tests(points, std::vector<std::vector<double>>(algos, std::vector<double>(spec.trials)));
  Grid stages = tests;
  std::vector<std::string> errors(points);

  auto work = [&](std::size_t j) {
    const InfectionModel model = sweep_model(spec.regime, j);
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const std::uint64_t seed = derive_seed(spec.base_seed, {j, t});
      const InfectionInstance instance = generate_instance(model, spec.n, seed);
      for (std::size_t a = 0; a < algos; ++a) {
        const AlgorithmConfig cfg = config_for_instance(spec.algorithms[a], model, spec.n);
        try {
          const RunResult r = run(instance, cfg);
          if (!r.diagnosis.matches(instance)) throw std::logic_error("diagnosis differs from ground truth");
          tests[j][a][t] = static_cast<double>(r.ledger.tests_total());
          stages[j][a][t] = static_cast<double>(r.ledger.stages_total());
        } catch (const std::exception& e) {
          errors[j] = std::string(strategy_name(cfg.strategy)) + " at " + detail::describe_model(model) +
                      " seed " + std::to_string(seed) + ": " + e.what();
          return;
        }
      }
    }
  };

  unsigned workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, points));
  if (workers <= 1) {
    for (std::size_t j = 0; j < points; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < points; j = next++) work(j);
      });
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error("sweep failed: " + e);
  }

  std::vector<AggregateRow> rows;
  const bool combinatorial = std::holds_alternative<CombinatorialSweep>(spec.regime);
  for (std::size_t a = 0; a < algos; ++a) {
    for (std::size_t j = 0; j < points; ++j) {
      const InfectionModel model = sweep_model(spec.regime, j);
      const auto t = detail::moments(tests[j][a]);
      const auto s = detail::moments(stages[j][a]);
      AggregateRow row;
      row.algorithm = std::string(strategy_name(spec.algorithms[a].strategy));
      row.n = spec.n;
      row.regime = combinatorial ? "comb" : "prob";
      row.param = combinatorial ? static_cast<double>(std::get<Combinatorial>(model).k)
                                : std::get<Probabilistic>(model).p;
      row.trials = spec.trials;
      row.mean_tests = t.mean;
      row.std_tests = t.stddev;
      row.mean_stages = s.mean;
      row.std_stages = s.stddev;
      row.seed = spec.base_seed;
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AggregateRow& x, const AggregateRow& y) {
    if (x.algorithm != y.algorithm) return x.algorithm < y.algorithm;
    return x.param < y.param;
  });
  return rows;
}

inline constexpr std::string_view kCsvHeader =
    "algorithm,n,regime,param,trials,mean_tests,std_tests,mean_stages,std_stages,seed";

inline std::string format_param(const AggregateRow& row) {
  char buf[64];
  if (row.regime == "comb") {
    std::snprintf(buf, sizeof buf, "%.0f", row.param);
  } else {
    std::snprintf(buf, sizeof buf, "%.6g", row.param);
  }
  return buf;
}

inline std::string format_csv(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) throw ParameterError("no rows to write");
  std::string out(kCsvHeader);
  out += '\n';
  char buf[256];
  for (const AggregateRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%s,%s,%zu,%.6f,%.6f,%.6f,%.6f,%llu\n", r.algorithm.c_str(), r.n,
                  r.regime.c_str(), format_param(r).c_str(), r.trials, r.mean_tests, r.std_tests,
                  r.mean_stages, r.std_stages, static_cast<unsigned long long>(r.seed));
    out += buf;
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline void write_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  write_text_file(path, format_csv(rows));
}

enum class ChartMetric { Tests, Stages };

/// Line chart (SVG) of mean tests or stages against the sweep parameter,
/// one polyline per algorithm.
inline std::string format_chart(const std::vector<AggregateRow>& rows, ChartMetric metric) {
  if (rows.empty()) throw ParameterError("no rows to chart");
  constexpr double width = 720, height = 440, left = 70, right = 130, top = 30, bottom = 50;
  const auto value = [&](const AggregateRow& r) {
    return metric == ChartMetric::Tests ? r.mean_tests : r.mean_stages;
  };
  double x_lo = rows.front().param, x_hi = x_lo, y_hi = 0.0;
  for (const auto& r : rows) {
    x_lo = std::min(x_lo, r.param);
    x_hi = std::max(x_hi, r.param);
    y_hi = std::max(y_hi, value(r));
  }
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi <= 0) y_hi = 1;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  const auto py = [&](double y) { return top + plot_h - y / y_hi * plot_h; };

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double xv = x_lo + (x_hi - x_lo) * tick / 5.0, yv = y_hi * tick / 5.0;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << xv
        << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv
        << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << (rows.front().regime == "comb" ? "k" : "p") << "</text>\n";
  svg << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 16 " << top + plot_h / 2
      << ")\" text-anchor=\"middle\">"
      << (metric == ChartMetric::Tests ? "Number of tests" : "Number of stages") << "</text>\n";

  std::vector<std::string> names;
  for (const auto& r : rows) {
    if (std::find(names.begin(), names.end(), r.algorithm) == names.end()) names.push_back(r.algorithm);
  }
  for (std::size_t a = 0; a < names.size(); ++a) {
    const char* color = kColors[a % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : rows) {
      if (r.algorithm == names[a]) svg << px(r.param) << ',' << py(value(r)) << ' ';
    }
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(a);
    svg << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly + 4 << "\">" << names[a] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void render_chart(const std::vector<AggregateRow>& rows, const std::string& path,
                         ChartMetric metric = ChartMetric::Tests) {
  write_text_file(path, format_chart(rows, metric));
}

// ---- Text formats shared by the CLI and sweep-spec files ------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::size_t parse_count(const std::string& s, std::string_view what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw ParameterError(std::string(what) + ": '" + s + "' is not a non-negative integer");
  }
  if (pos != s.size()) throw ParameterError(std::string(what) + ": '" + s + "' is not a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline double parse_real(const std::string& s, std::string_view what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParameterError(std::string(what) + ": '" + s + "' is not a number");
  }
  if (pos != s.size()) throw ParameterError(std::string(what) + ": '" + s + "' is not a number");
  return v;
}

inline bool parse_bool(const std::string& s, std::string_view what) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParameterError(std::string(what) + ": '" + s + "' is not a boolean");
}

}  // namespace detail

/// "comb:K" or "prob:P".
inline InfectionModel parse_model(std::string_view text) {
  const std::string s = detail::trim(text);
  if (s.rfind("comb:", 0) == 0) return Combinatorial{detail::parse_count(s.substr(5), "model")};
  if (s.rfind("prob:", 0) == 0) return Probabilistic{detail::parse_real(s.substr(5), "model")};
  throw ParameterError("model must look like comb:K or prob:P, got '" + s + "'");
}

/// Parameter lists for sweeps:
///   comb:1,2,8     comb:all (k = 1..n)     comb:1-16
///   prob:0.1,0.5   prob:grid:20 (21 evenly spaced values in [0, 1])
inline SweepRegime parse_model_list(std::string_view text, std::size_t n) {
  const std::string s = detail::trim(text);
  if (s.rfind("comb:", 0) == 0) {
    CombinatorialSweep sweep;
    const std::string body = s.substr(5);
    if (body == "all") {
      for (std::size_t k = 1; k <= n; ++k) sweep.k_values.push_back(k);
      return sweep;
    }
    for (const std::string& item : detail::split(body, ',')) {
      const auto dash = item.find('-');
      if (dash != std::string::npos && dash > 0) {
        const std::size_t lo = detail::parse_count(item.substr(0, dash), "model");
        const std::size_t hi = detail::parse_count(item.substr(dash + 1), "model");
        for (std::size_t k = lo; k <= hi; ++k) sweep.k_values.push_back(k);
      } else {
        sweep.k_values.push_back(detail::parse_count(item, "model"));
      }
    }
    return sweep;
  }
  if (s.rfind("prob:", 0) == 0) {
    ProbabilisticSweep sweep;
    const std::string body = s.substr(5);
    if (body.rfind("grid:", 0) == 0) {
      const std::size_t steps = detail::parse_count(body.substr(5), "model");
      if (steps == 0) throw ParameterError("model: prob:grid needs at least one step");
      for (std::size_t j = 0; j <= steps; ++j) {
        sweep.p_values.push_back(static_cast<double>(j) / static_cast<double>(steps));
      }
      return sweep;
    }
    for (const std::string& item : detail::split(body, ',')) {
      sweep.p_values.push_back(detail::parse_real(item, "model"));
    }
    return sweep;
  }
  throw ParameterError("model must start with comb: or prob:, got '" + s + "'");
}

inline std::vector<AlgorithmConfig> parse_algorithm_list(std::string_view text, bool initial_screen) {
  std::vector<AlgorithmConfig> out;
  for (const std::string& name : detail::split(text, ',')) {
    AlgorithmConfig cfg;
    cfg.strategy = parse_strategy(name);
    cfg.initial_screen = initial_screen;
    out.push_back(cfg);
  }
  return out;
}

/// A sweep spec file plus the output paths it names.
struct SweepJob {
  SweepSpec spec;
  std::string csv_path;
  std::string chart_path;
};

/// Key = value lines mirroring the CLI flags (n, model, algo, trials,
/// seed, out, chart, initial-screen, workers); '#' starts a comment.
inline SweepJob parse_sweep_spec(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("spec line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  static const char* kKnown[] = {"n", "model", "algo", "trials", "seed", "out", "chart", "initial-screen",
                                 "workers"};
  for (const auto& [key, value] : kv) {
    if (std::find_if(std::begin(kKnown), std::end(kKnown), [&](const char* k) { return key == k; }) ==
        std::end(kKnown)) {
      throw ParameterError("spec: unknown key '" + key + "'");
    }
  }
  for (const char* required : {"n", "model", "algo"}) {
    if (!kv.count(required)) throw ParameterError(std::string("spec: missing key '") + required + "'");
  }
  SweepJob job;
  job.spec.n = detail::parse_count(kv["n"], "n");
  job.spec.regime = parse_model_list(kv["model"], job.spec.n);
  const bool screen = kv.count("initial-screen") && detail::parse_bool(kv["initial-screen"], "initial-screen");
  job.spec.algorithms = parse_algorithm_list(kv["algo"], screen);
  if (kv.count("trials")) job.spec.trials = detail::parse_count(kv["trials"], "trials");
  if (kv.count("seed")) job.spec.base_seed = detail::parse_count(kv["seed"], "seed");
  if (kv.count("workers")) job.spec.workers = static_cast<unsigned>(detail::parse_count(kv["workers"], "workers"));
  if (kv.count("out")) job.csv_path = kv["out"];
  if (kv.count("chart")) job.chart_path = kv["chart"];
  return job;
}

}  // namespace dsgt
