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

#include "dsgt/sim.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace dsgt {
namespace {

AlgorithmConfig Algo(Strategy s) {
  AlgorithmConfig c;
  c.strategy = s;
  return c;
}

SweepSpec Spec(std::size_t n, std::vector<std::size_t> ks, std::size_t trials,
               std::vector<Strategy> strategies) {
  SweepSpec spec;
  spec.n = n;
  spec.regime = CombinatorialSweep{std::move(ks)};
  spec.trials = trials;
  for (Strategy s : strategies) spec.algorithms.push_back(Algo(s));
  spec.base_seed = 7;
  spec.workers = 1;
  return spec;
}

std::size_t CountLines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(Sweep, AllInfectedDsaIsDeterministic) {
  const auto rows = run_sweep(Spec(16, {16}, 25, {Strategy::Dsa}));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].mean_tests, 23.0);
  EXPECT_EQ(rows[0].std_tests, 0.0);
  EXPECT_EQ(rows[0].mean_stages, 4.0);
  EXPECT_EQ(rows[0].std_stages, 0.0);
  EXPECT_EQ(rows[0].regime, "comb");
  EXPECT_EQ(rows[0].trials, 25u);
}

TEST(Sweep, SingleInfectionMeanNearClosedForm) {
  const auto rows = run_sweep(Spec(16, {1}, 500, {Strategy::Dsa}));
  ASSERT_EQ(rows.size(), 1u);
  const double tol = 3.0 * rows[0].std_tests / std::sqrt(500.0);
  EXPECT_NEAR(rows[0].mean_tests, 9.5, tol);
  EXPECT_LE(rows[0].mean_stages, 4.0);
}

TEST(Sweep, RowsMatchDirectRunsOnPairedInstances) {
  // Recompute every aggregate by hand from the documented seed rule.
  const SweepSpec spec = Spec(16, {3, 9}, 12, {Strategy::Dsa, Strategy::Bsa, Strategy::Hgbsa});
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 6u);
  for (const AggregateRow& row : rows) {
    const std::size_t k = static_cast<std::size_t>(row.param);
    const std::size_t j = k == 3 ? 0 : 1;
    const Strategy s = parse_strategy(row.algorithm);
    double sum = 0, sum_sq = 0;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const auto inst = generate_instance(Combinatorial{k}, 16, derive_seed(spec.base_seed, {j, t}));
      AlgorithmConfig cfg = Algo(s);
      if (s == Strategy::Hgbsa) cfg.k_input = k;
      const double tests = static_cast<double>(run(inst, cfg).ledger.tests_total());
      sum += tests;
      sum_sq += tests * tests;
    }
    const double mean = sum / 12.0;
    const double var = (sum_sq - 12.0 * mean * mean) / 11.0;
    EXPECT_NEAR(row.mean_tests, mean, 1e-9) << row.algorithm << " k=" << k;
    EXPECT_NEAR(row.std_tests, std::sqrt(std::max(0.0, var)), 1e-9) << row.algorithm << " k=" << k;
  }
}

TEST(Sweep, RowOrderIsAlgorithmThenParam) {
  const auto rows = run_sweep(Spec(8, {5, 1, 3}, 3, {Strategy::Hybrid, Strategy::Bsa}));
  std::vector<std::string> seen;
  for (const auto& r : rows) seen.push_back(r.algorithm + ":" + format_param(r));
  EXPECT_EQ(seen, (std::vector<std::string>{"bsa:1", "bsa:3", "bsa:5", "hybrid:1", "hybrid:3", "hybrid:5"}));
}

TEST(Sweep, ProbabilisticHgbsaGetsRoundedMean) {
  const AlgorithmConfig c = config_for_instance(Algo(Strategy::Hgbsa), Probabilistic{0.3}, 16);
  EXPECT_EQ(c.k_input, 5u);  // round(4.8)
  EXPECT_EQ(c.trust, CountTrust::Estimate);
  const AlgorithmConfig e = config_for_instance(Algo(Strategy::Hgbsa), Combinatorial{6}, 16);
  EXPECT_EQ(e.k_input, 6u);
  EXPECT_EQ(e.trust, CountTrust::Exact);

  SweepSpec spec = Spec(16, {}, 40, {Strategy::Hgbsa, Strategy::Dsa, Strategy::Hybrid});
  spec.regime = ProbabilisticSweep{{0.0, 0.05, 0.5, 1.0}};
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.regime, "prob");
    if (r.algorithm == "dsa" && r.param == 1.0) {
      EXPECT_EQ(r.mean_tests, 23.0);
    }
  }
}

TEST(Sweep, ParallelAndSerialAgreeByteForByte) {
  SweepSpec spec = Spec(16, {1, 2, 4, 8, 12, 16}, 30, {Strategy::Dsa, Strategy::Hybrid, Strategy::Hgbsa});
  const std::string serial = format_csv(run_sweep(spec));
  EXPECT_EQ(serial, format_csv(run_sweep(spec)));
  spec.workers = 3;
  EXPECT_EQ(serial, format_csv(run_sweep(spec)));
}

TEST(Sweep, DifferentSeedsGiveDifferentResults) {
  SweepSpec a = Spec(16, {4}, 50, {Strategy::Bsa});
  SweepSpec b = a;
  b.base_seed = 8;
  EXPECT_NE(format_csv(run_sweep(a)), format_csv(run_sweep(b)));
}

TEST(Sweep, RejectsInvalidSpecs) {
  EXPECT_THROW(run_sweep(Spec(16, {1}, 0, {Strategy::Dsa})), ParameterError);
  EXPECT_THROW(run_sweep(Spec(16, {1}, 5, {})), ParameterError);
  EXPECT_THROW(run_sweep(Spec(16, {}, 5, {Strategy::Dsa})), ParameterError);
  EXPECT_THROW(run_sweep(Spec(16, {17}, 5, {Strategy::Dsa})), ParameterError);
  EXPECT_THROW(run_sweep(Spec(12, {1}, 5, {Strategy::Dsa})), ParameterError);
  EXPECT_NO_THROW(run_sweep(Spec(12, {0, 1, 12}, 5, {Strategy::Bsa, Strategy::Hgbsa})));
  SweepSpec p = Spec(16, {}, 5, {Strategy::Dsa});
  p.regime = ProbabilisticSweep{{1.5}};
  EXPECT_THROW(run_sweep(p), ParameterError);
}

TEST(Csv, HeaderAndOneRow) {
  AggregateRow row{"dsa", 16, "comb", 16, 500, 23, 0, 4, 0, 7};
  const std::string csv = format_csv({row});
  EXPECT_EQ(csv,
            "algorithm,n,regime,param,trials,mean_tests,std_tests,mean_stages,std_stages,seed\n"
            "dsa,16,comb,16,500,23.000000,0.000000,4.000000,0.000000,7\n");
  EXPECT_EQ(CountLines(csv), 2u);
  row.regime = "prob";
  row.param = 0.125;
  EXPECT_NE(format_csv({row}).find(",prob,0.125,"), std::string::npos);
}

TEST(Csv, EmptyRowsRejected) {
  EXPECT_THROW(format_csv({}), ParameterError);
  EXPECT_THROW(write_csv({}, "/tmp/never.csv"), ParameterError);
  EXPECT_THROW(format_chart({}, ChartMetric::Tests), ParameterError);
}

TEST(Csv, WritesFileAndReportsUnwritablePath) {
  const auto rows = run_sweep(Spec(8, {2}, 4, {Strategy::Dsa}));
  const auto path = std::filesystem::temp_directory_path() / "dsgt_sim_test.csv";
  write_csv(rows, path.string());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), format_csv(rows));
  std::filesystem::remove(path);
  EXPECT_THROW(write_csv(rows, "/nonexistent-dir/x.csv"), IoError);
}

TEST(Chart, OnePolylinePerAlgorithm) {
  const auto rows = run_sweep(Spec(8, {1, 4, 8}, 3, {Strategy::Dsa, Strategy::Bsa}));
  const std::string svg = format_chart(rows, ChartMetric::Stages);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t count = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
  EXPECT_EQ(count, 2u);
  EXPECT_NE(svg.find("Number of stages"), std::string::npos);
  EXPECT_NE(format_chart(rows, ChartMetric::Tests).find("Number of tests"), std::string::npos);
}

TEST(Parse, SingleModels) {
  EXPECT_EQ(std::get<Combinatorial>(parse_model("comb:12")).k, 12u);
  EXPECT_DOUBLE_EQ(std::get<Probabilistic>(parse_model("prob:0.25")).p, 0.25);
  EXPECT_THROW(parse_model("comb:-1"), ParameterError);
  EXPECT_THROW(parse_model("comb:3x"), ParameterError);
  EXPECT_THROW(parse_model("gauss:1"), ParameterError);
}

TEST(Parse, ModelLists) {
  EXPECT_EQ(std::get<CombinatorialSweep>(parse_model_list("comb:all", 4)).k_values,
            (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(std::get<CombinatorialSweep>(parse_model_list("comb:1,3-5,8", 16)).k_values,
            (std::vector<std::size_t>{1, 3, 4, 5, 8}));
  EXPECT_EQ(std::get<ProbabilisticSweep>(parse_model_list("prob:grid:4", 16)).p_values,
            (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_EQ(std::get<ProbabilisticSweep>(parse_model_list("prob:0.1, 0.2", 16)).p_values,
            (std::vector<double>{0.1, 0.2}));
  EXPECT_THROW(parse_model_list("prob:grid:0", 16), ParameterError);
  EXPECT_THROW(parse_model_list("k:1", 16), ParameterError);
}

TEST(Parse, SweepSpecFile) {
  std::istringstream in(
      "# figure 2 at desk scale\n"
      "n = 16\n"
      "model = comb:1-3\n"
      "algo = dsa, hgbsa\n"
      "trials = 20   # per point\n"
      "seed = 99\n"
      "initial_screen = true\n"
      "out = fig2.csv\n"
      "chart = fig2.svg\n");
  const SweepJob job = parse_sweep_spec(in);
  EXPECT_EQ(job.spec.n, 16u);
  EXPECT_EQ(job.spec.trials, 20u);
  EXPECT_EQ(job.spec.base_seed, 99u);
  ASSERT_EQ(job.spec.algorithms.size(), 2u);
  EXPECT_EQ(job.spec.algorithms[1].strategy, Strategy::Hgbsa);
  EXPECT_TRUE(job.spec.algorithms[0].initial_screen);
  EXPECT_EQ(std::get<CombinatorialSweep>(job.spec.regime).k_values, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(job.csv_path, "fig2.csv");
  EXPECT_EQ(job.chart_path, "fig2.svg");
  EXPECT_EQ(run_sweep(job.spec).size(), 6u);
}

TEST(Parse, SweepSpecErrors) {
  std::istringstream missing("n = 16\nalgo = dsa\n");
  EXPECT_THROW(parse_sweep_spec(missing), ParameterError);
  std::istringstream unknown("n = 16\nmodel = comb:1\nalgo = dsa\ncolour = red\n");
  EXPECT_THROW(parse_sweep_spec(unknown), ParameterError);
  std::istringstream garbled("n 16\n");
  EXPECT_THROW(parse_sweep_spec(garbled), ParameterError);
  std::istringstream algo("n = 16\nmodel = comb:1\nalgo = quick\n");
  EXPECT_THROW(parse_sweep_spec(algo), ParameterError);
}

}  // namespace
}  // namespace dsgt
