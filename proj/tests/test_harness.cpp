// SPDX-License-Identifier: Apache-2.0
#include "nkai/harness.hpp"
#include "nkai/serialize.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace nkai;

namespace {

const std::vector<double> kTruth{15.0, 17.0};

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "small";
  c.sweep = SweepKind::Snr;
  c.snr_db = {0.0, 10.0};
  c.snapshots = {60};
  c.trials = 6;
  c.seed = 31;
  c.kai.grid_step_deg = 0.5;
  c.kai.mu_increment = 0.5;
  return c;
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream os;
  write_sweep_csv(os, r);
  return os.str();
}

}  // namespace

TEST(Rmse, ExactEstimatesGiveZero) {
  const std::vector<std::vector<double>> est{{15.0, 17.0}, {17.0, 15.0}};
  const auto r = rmse(est, kTruth);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.used, 2);
}

TEST(Rmse, SingleSourceTwoDegreeError) {
  const std::vector<std::vector<double>> est{{12.0}};
  const std::vector<double> truth{10.0};
  EXPECT_DOUBLE_EQ(rmse(est, truth).value, 2.0);
}

TEST(Rmse, OppositeUnitErrors) {
  const std::vector<std::vector<double>> est{{16.0, 16.0}};
  EXPECT_DOUBLE_EQ(rmse(est, kTruth).value, 1.0);
}

TEST(Rmse, ShortTrialsAreExcluded) {
  const std::vector<std::vector<double>> est{{15.0, 17.0}, {15.0}, {14.0, 18.0}};
  const auto r = rmse(est, kTruth);
  EXPECT_EQ(r.used, 2);
  EXPECT_EQ(r.excluded, 1);
  EXPECT_DOUBLE_EQ(r.value, std::sqrt(2.0 / 4.0));
  const std::vector<std::vector<double>> none{{1.0}};
  EXPECT_TRUE(std::isnan(rmse(none, kTruth).value));
}

TEST(Rmse, PermutationInvariantOverTrials) {
  std::mt19937 gen(3);
  std::normal_distribution<double> noise(0.0, 0.7);
  std::vector<std::vector<double>> est;
  for (int i = 0; i < 40; ++i) est.push_back({15.0 + noise(gen), 17.0 + noise(gen)});
  const double base = rmse(est, kTruth).value;
  for (int k = 0; k < 5; ++k) {
    std::shuffle(est.begin(), est.end(), gen);
    EXPECT_NEAR(rmse(est, kTruth).value, base, 1e-12);
  }
}

TEST(IsResolved, Examples) {
  EXPECT_TRUE(is_resolved(std::vector<double>{15.5, 16.6}, kTruth));
  EXPECT_FALSE(is_resolved(std::vector<double>{15.0, 18.1}, kTruth));
  EXPECT_TRUE(is_resolved(kTruth, kTruth));
  EXPECT_TRUE(is_resolved(std::vector<double>{16.6, 15.5}, kTruth));
  EXPECT_FALSE(is_resolved(std::vector<double>{16.0, 17.0}, kTruth));  // boundary is exclusive
  EXPECT_THROW(is_resolved(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
}

TEST(Aggregate, CountsFailuresAndResolution) {
  std::vector<TrialRecord> recs;
  auto add = [&](bool failed, std::vector<double> doas) {
    TrialRecord r;
    r.trial = static_cast<int>(recs.size());
    r.failed = failed;
    r.doas = std::move(doas);
    recs.push_back(r);
  };
  add(false, {15.0, 17.0});
  add(false, {15.0, 18.5});
  add(true, {});
  add(false, {16.0});
  const SweepRow row = aggregate(recs, kTruth, 3.33, Estimator::NestedMusic);
  EXPECT_EQ(row.trials, 4);
  EXPECT_EQ(row.failures, 2);
  EXPECT_DOUBLE_EQ(row.prob_resolution, 0.5);
  EXPECT_DOUBLE_EQ(row.rmse_deg, std::sqrt(1.5 * 1.5 / 4.0));
  EXPECT_GE(row.prob_resolution, 0.0);
  EXPECT_LE(row.prob_resolution, 1.0);
}

TEST(ExperimentConfig, ValidationNamesTheField) {
  auto expect_field = [](ExperimentConfig c, const std::string& field) {
    try {
      c.validate();
      FAIL() << "no error for " << field;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  auto c = small_config();
  c.trials = 0;
  expect_field(c, "'trials'");
  c = small_config();
  c.estimators.clear();
  expect_field(c, "'estimators'");
  c = small_config();
  c.snr_db.clear();
  expect_field(c, "snr_db");
  c = small_config();
  c.snapshots = {0};
  expect_field(c, "n_snapshots");
  c = small_config();
  c.geometry = ArrayGeometry::ula(8);
  expect_field(c, "geometry");
  EXPECT_NO_THROW(small_config().validate());
}

TEST(ExperimentConfig, SweepAccessors) {
  auto c = small_config();
  EXPECT_EQ(c.points(), 2u);
  EXPECT_EQ(c.snr_at(1), 10.0);
  EXPECT_EQ(c.snapshots_at(1), 60);
  c.sweep = SweepKind::Snapshots;
  c.snapshots = {50, 100, 150};
  EXPECT_EQ(c.points(), 3u);
  EXPECT_EQ(c.snr_at(2), 0.0);
  EXPECT_EQ(c.sweep_value(2), 150.0);
  EXPECT_EQ(c.baseline_ula().size(), 20);
}

TEST(RunSweep, HighSnrReachesGridQuantizationFloor) {
  ExperimentConfig c;
  c.snr_db = {60.0};
  c.snapshots = {10000};
  c.trials = 1;
  c.seed = 5;
  // Off-grid truth so quantization actually matters.
  c.doas_deg = {15.013, 17.031};
  const SweepResult r = run_sweep(c);
  const double floor = 0.05 / std::sqrt(12.0);
  for (Estimator e : c.estimators) {
    const auto& row = r.row(0, e);
    EXPECT_EQ(row.failures, 0);
    EXPECT_EQ(row.prob_resolution, 1.0) << to_string(e);
    // Nearest grid points are at most 0.025 away.
    EXPECT_LE(row.rmse_deg, floor + 0.025) << to_string(e);
  }
}

TEST(RunSweep, SameInputsSameBytesAcrossWorkerCounts) {
  auto c = small_config();
  c.workers = 1;
  const std::string one = csv_of(run_sweep(c));
  c.workers = 3;
  const std::string three = csv_of(run_sweep(c));
  const std::string again = csv_of(run_sweep(c));
  EXPECT_EQ(one, three);
  EXPECT_EQ(three, again);
  c.seed = 32;
  EXPECT_NE(csv_of(run_sweep(c)), one);
}

TEST(RunSweep, RowsArePointMajorAndRecordsSorted) {
  auto c = small_config();
  std::size_t last_done = 0;
  const SweepResult r = run_sweep(c, [&](std::size_t done, std::size_t total) {
    EXPECT_LE(done, total);
    last_done = std::max(last_done, done);
  });
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.rows[0].sweep_value, 0.0);
  EXPECT_EQ(r.rows[3].sweep_value, 10.0);
  EXPECT_EQ(r.rows[1].estimator, Estimator::NestedMusic);
  EXPECT_EQ(last_done, 12u);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    const auto& a = r.records[i - 1];
    const auto& b = r.records[i];
    EXPECT_TRUE(std::tie(a.point, a.trial) <= std::tie(b.point, b.trial));
  }
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.trials, 6);
    EXPECT_GE(row.rmse_deg, 0.0);
  }
}

TEST(RunSweep, CsvHeaderFollowsSweepKind) {
  auto c = small_config();
  c.sweep = SweepKind::Snapshots;
  c.snapshots = {40};
  c.trials = 1;
  c.estimators = {Estimator::NestedMusic};
  const std::string csv = csv_of(run_sweep(c));
  EXPECT_EQ(csv.rfind("n_snapshots,estimator,rmse_deg,prob_resolution,trials,failures\n40,nested-music,", 0), 0u)
      << csv;
}

TEST(EstimatorNames, RoundTrip) {
  for (Estimator e : {Estimator::MusicUla, Estimator::NestedMusic, Estimator::MsKaiNestedMusic}) {
    EXPECT_EQ(estimator_from_string(to_string(e)), e);
  }
  EXPECT_EQ(estimator_from_string("ms-kai"), Estimator::MsKaiNestedMusic);
  EXPECT_THROW(estimator_from_string("esprit"), InvalidArgument);
}
