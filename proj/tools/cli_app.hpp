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

// Command-line front end. Everything lives here, behind run_cli(), so tests
// can drive it with string streams; dsgt_cli.cpp only forwards argv.

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsgt/algorithms.hpp"
#include "dsgt/analytics.hpp"
#include "dsgt/likelihood.hpp"
#include "dsgt/sim.hpp"

namespace dsgt::cli {

inline constexpr const char* kOutDirEnv = "DSGT_OUT_DIR";

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Bad flag value or combination; `flag` is echoed to the user.
struct UsageError : std::runtime_error {
  UsageError(std::string flag_name, const std::string& what)
      : std::runtime_error(what), flag(std::move(flag_name)) {}
  std::string flag;
};

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

template <class F>
auto check_flag(const std::string& flag, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParameterError& e) {
    throw UsageError(flag, e.what());
  }
}

/// Relative output paths land in $DSGT_OUT_DIR when it is set.
inline std::string output_path(const std::string& path) {
  const char* dir = std::getenv(kOutDirEnv);
  if (!dir || !*dir || std::filesystem::path(path).is_absolute()) return path;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / path).string();
}

inline std::string stage_line(const Stage& stage) {
  std::string line;
  for (const TestRecord& t : stage) {
    if (!line.empty()) line += ' ';
    line += t.pool.to_string();
    line += t.positive ? '+' : '-';
  }
  return line;
}

inline std::string describe(const InfectionModel& model) {
  if (const auto* c = std::get_if<Combinatorial>(&model)) return "comb:" + std::to_string(c->k);
  char buf[64];
  std::snprintf(buf, sizeof buf, "prob:%.6g", std::get<Probabilistic>(model).p);
  return buf;
}

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline AlgorithmConfig make_config(const std::string& algo, bool screen, std::optional<std::size_t> k,
                                   std::size_t n) {
  AlgorithmConfig cfg;
  cfg.strategy = check_flag("--algo", [&] { return parse_strategy(algo); });
  cfg.initial_screen = screen;
  if (k) {
    if (cfg.strategy != Strategy::Hgbsa) throw UsageError("--k", "--k only applies to --algo hgbsa");
    cfg.k_input = *k;
  }
  check_flag("--k", [&] {
    if (cfg.k_input > n) throw ParameterError("k=" + std::to_string(cfg.k_input) + " exceeds n");
  });
  check_flag("--n", [&] { validate_config(cfg, n); });
  return cfg;
}

// Reads one stage's outcomes per line. Accepts compact strings ("+-+",
// "101") or whitespace-separated words (true/false, pos/neg, y/n, 1/0).
inline std::optional<std::vector<bool>> parse_outcomes(const std::string& line, std::size_t expected) {
  auto word = [](std::string w) -> std::optional<bool> {
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (w == "1" || w == "+" || w == "t" || w == "true" || w == "y" || w == "yes" || w == "pos" ||
        w == "positive") {
      return true;
    }
    if (w == "0" || w == "-" || w == "f" || w == "false" || w == "n" || w == "no" || w == "neg" ||
        w == "negative") {
      return false;
    }
    return std::nullopt;
  };
  std::vector<std::string> words;
  std::istringstream ss(line);
  for (std::string w; ss >> w;) words.push_back(w);
  if (words.size() == 1 && expected > 1 && words[0].size() == expected) {
    std::vector<std::string> chars;
    for (char c : words[0]) chars.emplace_back(1, c);
    words = chars;
  }
  if (words.size() != expected) return std::nullopt;
  std::vector<bool> out;
  for (const auto& w : words) {
    const auto v = word(w);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

/// Oracle whose answers come from an operator: prints a stage, then blocks
/// on one line of outcomes. Every pool of a stage is shown before any
/// outcome of that stage is read.
class PromptOracle {
 public:
  PromptOracle(std::size_t n, Streams io, TestLedger& ledger) : n_(n), io_(io), ledger_(&ledger) {}

  std::size_t population() const { return n_; }

  std::vector<bool> submit(std::span<const Pool> pools) {
    const std::size_t stage = ledger_->stages_total() + 1;
    io_.out << "stage " << stage << ": " << pools.size() << (pools.size() == 1 ? " pool\n" : " pools\n");
    for (std::size_t j = 0; j < pools.size(); ++j) io_.out << "  pool " << j + 1 << ": " << pools[j].to_string() << '\n';
    for (;;) {
      io_.out << "outcomes> " << std::flush;
      std::string line;
      if (!std::getline(io_.in, line)) {
        throw IoError("input ended before stage " + std::to_string(stage) + " was answered");
      }
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (auto outcomes = parse_outcomes(line, pools.size())) {
        ledger_->record_stage(pools, *outcomes);
        return *outcomes;
      }
      io_.out << "expected " << pools.size() << " outcomes (e.g. '+' / '-' or 1 / 0), try again\n";
    }
  }

 private:
  std::size_t n_;
  Streams io_;
  TestLedger* ledger_;
};

inline void print_ledger(std::ostream& out, const TestLedger& ledger) {
  for (std::size_t s = 0; s < ledger.stages().size(); ++s) {
    out << "stage " << s + 1 << ": " << stage_line(ledger.stages()[s]) << '\n';
  }
}

inline void write_ledger_csv(const TestLedger& ledger, const std::string& path) {
  std::string text = "stage,test,pool,size,positive\n";
  for (std::size_t s = 0; s < ledger.stages().size(); ++s) {
    const Stage& stage = ledger.stages()[s];
    for (std::size_t j = 0; j < stage.size(); ++j) {
      text += std::to_string(s + 1) + ',' + std::to_string(j + 1) + ",\"" + stage[j].pool.to_string() + "\"," +
              std::to_string(stage[j].pool.size()) + ',' + (stage[j].positive ? "1" : "0") + '\n';
    }
  }
  write_text_file(path, text);
}

}  // namespace detail

/// Parses and executes one command line. Never throws; returns the exit code.
inline int run_cli(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Adaptive group testing simulator: diagonal splitting, hybrid estimation, and baselines",
               "dsgt"};
  app.require_subcommand(1);
  app.footer(std::string("Relative output paths are placed under $") + kOutDirEnv + " when it is set.");

  // run
  struct {
    std::size_t n = 0;
    std::string model, algo = "dsa", infected, out;
    std::uint64_t seed = 1;
    std::optional<std::size_t> k;
    bool screen = false;
  } run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Solve one simulated instance and print its ledger");
  run_cmd->add_option("--n", run_opts.n, "Population size")->required();
  auto* run_model = run_cmd->add_option("--model", run_opts.model, "comb:K or prob:P");
  auto* run_inf = run_cmd->add_option("--infected", run_opts.infected, "Explicit infected set, e.g. 1,5-7");
  run_model->excludes(run_inf);
  run_cmd->add_option("--algo", run_opts.algo, "bsa | hgbsa | dsa | hybrid")->capture_default_str();
  run_cmd->add_option("--seed", run_opts.seed, "Instance seed")->capture_default_str();
  run_cmd->add_option("--k", run_opts.k, "Count given to hgbsa (default: k, or round(p n))");
  run_cmd->add_option("--out", run_opts.out, "Also write the ledger as CSV");
  run_cmd->add_flag("--initial-screen", run_opts.screen, "Test the whole population first");

  // sweep
  struct {
    std::optional<std::size_t> n, trials;
    std::string model, algo = "bsa,hgbsa,dsa,hybrid", out = "sweep.csv", chart, spec;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    bool screen = false, no_chart = false;
  } sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over k or p; writes CSV and charts");
  sweep_cmd->add_option("--spec", sweep_opts.spec, "Key = value sweep-spec file (replaces the flags below)");
  sweep_cmd->add_option("--n", sweep_opts.n, "Population size");
  sweep_cmd->add_option("--model", sweep_opts.model, "comb:1,2,8 | comb:1-16 | comb:all | prob:0.1,0.2 | prob:grid:20");
  sweep_cmd->add_option("--algo", sweep_opts.algo, "Comma-separated algorithms")->capture_default_str();
  sweep_cmd->add_option("--trials", sweep_opts.trials, "Instances per point (default 500 for n <= 16, else 1000)");
  sweep_cmd->add_option("--seed", sweep_opts.seed, "Base seed")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_opts.out, "CSV path")->capture_default_str();
  sweep_cmd->add_option("--chart", sweep_opts.chart, "Chart path stem (default: CSV path without extension)");
  sweep_cmd->add_option("--workers", sweep_opts.workers, "Worker threads (0 = all cores)");
  sweep_cmd->add_flag("--no-chart", sweep_opts.no_chart, "Skip the SVG charts");
  sweep_cmd->add_flag("--initial-screen", sweep_opts.screen, "Test the whole population first");

  // analytic
  struct {
    std::size_t n = 0;
    std::string model, out;
    bool appendix = false;
    double epsilon = 0.01;
  } an_opts;
  CLI::App* an_cmd = app.add_subcommand("analytic", "Tabulate E[T] and the test-count bounds as CSV");
  an_cmd->add_option("--n", an_opts.n, "Population size (power of two)")->required();
  an_cmd->add_option("--model", an_opts.model, "comb:K list or prob:P list, as for sweep")->required();
  an_cmd->add_option("--out", an_opts.out, "CSV path (default: stdout)");
  an_cmd->add_flag("--appendix-report", an_opts.appendix,
                   "Compare E[T] with the asymptotic upper bound for n = 16 .. --n (k from comb:K)");
  an_cmd->add_option("--epsilon", an_opts.epsilon, "Epsilon of the upper bound")->capture_default_str();

  // matrix
  struct {
    std::size_t n = 0;
    std::optional<std::size_t> k;
    std::string pattern, out;
  } mx_opts;
  CLI::App* mx_cmd = app.add_subcommand("matrix", "Occurrence counts of first-stage outcome patterns (n <= 16)");
  mx_cmd->add_option("--n", mx_opts.n, "Population size (power of two, <= 16)")->required();
  mx_cmd->add_option("--k", mx_opts.k, "Number infected");
  mx_cmd->add_option("--pattern", mx_opts.pattern, "Big-endian bitstring, largest pool first, e.g. 1100");
  mx_cmd->add_option("--out", mx_opts.out, "CSV path for the full matrix (default: stdout)");

  // session
  struct {
    std::size_t n = 0;
    std::string algo = "dsa";
    std::optional<std::size_t> k;
    bool screen = false, estimate = false;
  } ss_opts;
  CLI::App* ss_cmd = app.add_subcommand("session", "Interactive run: print each stage, read outcomes from stdin");
  ss_cmd->add_option("--n", ss_opts.n, "Population size")->required();
  ss_cmd->add_option("--algo", ss_opts.algo, "bsa | hgbsa | dsa | hybrid")->capture_default_str();
  ss_cmd->add_option("--k", ss_opts.k, "Count given to hgbsa");
  ss_cmd->add_flag("--k-estimate", ss_opts.estimate, "Treat --k as an estimate rather than exact");
  ss_cmd->add_flag("--initial-screen", ss_opts.screen, "Test the whole population first");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run_cmd->parsed()) {
      const std::size_t n = run_opts.n;
      std::optional<InfectionInstance> inst;
      if (!run_opts.infected.empty()) {
        inst = detail::check_flag("--infected", [&] {
          IndexSet set;
          for (const std::string& part : dsgt::detail::split(run_opts.infected, ',')) {
            const auto dash = part.find('-');
            const std::size_t lo = dsgt::detail::parse_count(part.substr(0, dash), "--infected");
            const std::size_t hi =
                dash == std::string::npos ? lo : dsgt::detail::parse_count(part.substr(dash + 1), "--infected");
            if (lo < 1 || hi < lo || hi > n) throw ParameterError("'" + part + "' is outside 1.." + std::to_string(n));
            set = set.merged(IndexSet::range(lo, hi));
          }
          return instance_with_infected(n, set);
        });
      } else {
        if (run_opts.model.empty()) throw UsageError("--model", "one of --model or --infected is required");
        const InfectionModel model = detail::check_flag("--model", [&] {
          InfectionModel m = parse_model(run_opts.model);
          validate_model(m, n);
          return m;
        });
        inst = generate_instance(model, n, run_opts.seed);
      }
      AlgorithmConfig cfg = detail::make_config(run_opts.algo, run_opts.screen, run_opts.k, n);
      if (!run_opts.k) cfg = config_for_instance(cfg, inst->model(), n);
      const RunResult r = run(*inst, cfg);
      if (!r.diagnosis.matches(*inst)) throw std::logic_error("diagnosis differs from ground truth");
      io.out << "algorithm=" << strategy_name(cfg.strategy) << " n=" << n;
      if (run_opts.infected.empty()) io.out << " model=" << detail::describe(inst->model()) << " seed=" << run_opts.seed;
      if (cfg.strategy == Strategy::Hgbsa) io.out << " k_input=" << cfg.k_input;
      io.out << '\n';
      detail::print_ledger(io.out, r.ledger);
      io.out << "infected=" << (inst->infected_count() ? r.diagnosis.infected_set().to_string() : "none") << '\n';
      if (r.k_estimate) io.out << "k_estimate=" << *r.k_estimate << '\n';
      io.out << "tests=" << r.ledger.tests_total() << " stages=" << r.ledger.stages_total() << '\n';
      if (!run_opts.out.empty()) detail::write_ledger_csv(r.ledger, detail::output_path(run_opts.out));
      return kOk;
    }

    if (sweep_cmd->parsed()) {
      SweepJob job;
      if (!sweep_opts.spec.empty()) {
        for (const char* flag : {"--n", "--model", "--algo", "--trials", "--seed", "--workers", "--initial-screen"}) {
          if (sweep_cmd->count(flag)) throw UsageError(flag, std::string(flag) + " cannot be combined with --spec");
        }
        std::ifstream in(sweep_opts.spec);
        if (!in) throw UsageError("--spec", "cannot read '" + sweep_opts.spec + "'");
        job = detail::check_flag("--spec", [&] { return parse_sweep_spec(in); });
        if (!job.spec.n) throw UsageError("--spec", "n must be at least 1");
      } else {
        if (!sweep_opts.n) throw UsageError("--n", "--n is required");
        if (sweep_opts.model.empty()) throw UsageError("--model", "--model is required");
        job.spec.n = *sweep_opts.n;
        job.spec.regime = detail::check_flag("--model", [&] { return parse_model_list(sweep_opts.model, job.spec.n); });
        job.spec.algorithms =
            detail::check_flag("--algo", [&] { return parse_algorithm_list(sweep_opts.algo, sweep_opts.screen); });
        job.spec.base_seed = sweep_opts.seed;
        job.spec.workers = sweep_opts.workers;
        job.spec.trials = sweep_opts.trials ? *sweep_opts.trials : (job.spec.n <= 16 ? 500 : 1000);
      }
      if (sweep_cmd->count("--out") || job.csv_path.empty()) job.csv_path = sweep_opts.out;
      if (sweep_cmd->count("--chart")) job.chart_path = sweep_opts.chart;
      // Validate everything up front so a bad flag fails before any trial runs.
      if (job.spec.trials < 1) throw UsageError("--trials", "--trials must be at least 1");
      for (std::size_t j = 0; j < sweep_points(job.spec.regime); ++j) {
        detail::check_flag("--model", [&] { validate_model(sweep_model(job.spec.regime, j), job.spec.n); });
      }
      if (sweep_points(job.spec.regime) == 0) throw UsageError("--model", "no parameter values given");
      for (const AlgorithmConfig& a : job.spec.algorithms) {
        detail::check_flag("--n", [&] { validate_config(a, job.spec.n); });
      }

      const auto rows = run_sweep(job.spec);
      const std::string csv = detail::output_path(job.csv_path);
      write_csv(rows, csv);
      io.out << "wrote " << csv << " (" << rows.size() << " rows)\n";
      if (!sweep_opts.no_chart) {
        std::string stem = job.chart_path.empty() ? std::filesystem::path(job.csv_path).replace_extension().string()
                                                  : std::filesystem::path(job.chart_path).replace_extension().string();
        stem = detail::output_path(stem);
        render_chart(rows, stem + "_tests.svg", ChartMetric::Tests);
        render_chart(rows, stem + "_stages.svg", ChartMetric::Stages);
        io.out << "wrote " << stem << "_tests.svg and " << stem << "_stages.svg\n";
      }
      return kOk;
    }

    if (an_cmd->parsed()) {
      const std::size_t n = an_opts.n;
      detail::check_flag("--n", [&] { tree_height(n); });
      const SweepRegime regime = detail::check_flag("--model", [&] {
        SweepRegime r = parse_model_list(an_opts.model, n);
        for (std::size_t j = 0; j < sweep_points(r); ++j) validate_model(sweep_model(r, j), n);
        if (sweep_points(r) == 0) throw ParameterError("no parameter values given");
        return r;
      });
      std::ostringstream csv;
      if (an_opts.appendix) {
        const auto* comb = std::get_if<CombinatorialSweep>(&regime);
        if (!comb || comb->k_values.size() != 1) {
          throw UsageError("--model", "--appendix-report needs a single comb:K");
        }
        if (!(an_opts.epsilon > 0 && an_opts.epsilon < 1)) throw UsageError("--epsilon", "epsilon must lie in (0, 1)");
        const std::size_t k = comb->k_values.front();
        if (k < 1 || 16 < k) throw UsageError("--model", "--appendix-report needs 1 <= k <= 16");
        std::vector<std::size_t> ns;
        for (std::size_t m = 16; m <= n; m *= 2) ns.push_back(m);
        if (ns.empty()) throw UsageError("--n", "--appendix-report needs n >= 16");
        csv << "n,k,epsilon,expected_tests,upper_bound,bound_holds\n";
        for (const auto& row : appendix_bound_report(ns, k, an_opts.epsilon)) {
          csv << row.n << ',' << row.k << ',' << detail::num(row.epsilon) << ',' << detail::num(row.expected_tests)
              << ',' << detail::num(row.upper_bound) << ',' << (row.bound_holds ? "yes" : "no") << '\n';
        }
      } else {
        csv << "n,regime,param,expected_tests,counting_bound,hgbsa_bound,bsa_bound\n";
        for (std::size_t j = 0; j < sweep_points(regime); ++j) {
          const InfectionModel model = sweep_model(regime, j);
          std::size_t k = 0;
          std::string param;
          if (const auto* c = std::get_if<Combinatorial>(&model)) {
            k = c->k;
            param = std::to_string(k);
          } else {
            const double p = std::get<Probabilistic>(model).p;
            k = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
            param = detail::num(p);
          }
          // Both guarantees read 0 at k = 0.
          const double hg = k ? hgbsa_bound(n, k) : 0.0, bs = k ? bsa_bound(n, k) : 0.0;
          csv << n << ',' << (std::holds_alternative<Combinatorial>(model) ? "comb" : "prob") << ',' << param << ','
              << detail::num(expected_tests_dsa({n, model})) << ',' << detail::num(counting_bound({n, model})) << ','
              << detail::num(hg) << ',' << detail::num(bs) << '\n';
        }
      }
      if (an_opts.out.empty()) {
        io.out << csv.str();
      } else {
        const std::string path = detail::output_path(an_opts.out);
        write_text_file(path, csv.str());
        io.out << "wrote " << path << '\n';
      }
      return kOk;
    }

    if (mx_cmd->parsed()) {
      const std::size_t n = mx_opts.n;
      detail::check_flag("--n", [&] {
        tree_height(n);
        if (n < 2 || n > 16) throw ParameterError("matrix needs 2 <= n <= 16");
      });
      if (mx_opts.k && *mx_opts.k > n) throw UsageError("--k", "k exceeds n");
      if (mx_opts.pattern.empty()) {
        if (mx_opts.k) throw UsageError("--k", "--k needs --pattern");
        std::ostringstream csv;
        write_matrix_csv(n, csv);
        if (mx_opts.out.empty()) {
          io.out << csv.str();
        } else {
          const std::string path = detail::output_path(mx_opts.out);
          write_text_file(path, csv.str());
          io.out << "wrote " << path << '\n';
        }
        return kOk;
      }
      const OutcomePattern s = detail::check_flag("--pattern", [&] { return OutcomePattern::parse(n, mx_opts.pattern); });
      if (mx_opts.k) {
        io.out << occurrence_count(n, *mx_opts.k, s) << '\n';
        return kOk;
      }
      const LikelihoodColumn col = likelihood_column(n, s);
      io.out << "k,count,likelihood\n";
      for (std::size_t k = 0; k <= n; ++k) {
        io.out << k << ',' << col.counts[k] << ',' << detail::num(col.likelihoods[k]) << '\n';
      }
      if (std::any_of(col.counts.begin(), col.counts.end(), [](const BigInt& c) { return c != 0; })) {
        io.out << "k_hat=" << estimate_k(col) << '\n';
      } else {
        io.out << "k_hat=none (pattern cannot occur)\n";
      }
      return kOk;
    }

    if (ss_cmd->parsed()) {
      const std::size_t n = ss_opts.n;
      AlgorithmConfig cfg = detail::make_config(ss_opts.algo, ss_opts.screen, ss_opts.k, n);
      if (cfg.strategy == Strategy::Hgbsa && !ss_opts.k) throw UsageError("--k", "--algo hgbsa needs --k");
      if (ss_opts.estimate) cfg.trust = CountTrust::Estimate;
      TestLedger ledger;
      detail::PromptOracle oracle(n, io, ledger);
      io.out << "session: algorithm=" << strategy_name(cfg.strategy) << " n=" << n
             << "; answer each stage with one outcome per pool, in order\n";
      const Resolution r = solve(oracle, cfg);
      io.out << "done\n";
      const IndexSet infected = r.diagnosis.infected_set();
      io.out << "infected=" << (infected.empty() ? std::string("none") : infected.to_string()) << '\n';
      if (r.k_estimate) io.out << "k_estimate=" << *r.k_estimate << '\n';
      io.out << "tests=" << ledger.tests_total() << " stages=" << ledger.stages_total() << '\n';
      return kOk;
    }
  } catch (const UsageError& e) {
    io.err << "usage error: " << e.flag << ": " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace dsgt::cli
