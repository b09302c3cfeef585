// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/kai.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nkai {

enum class Estimator { MusicUla, NestedMusic, MsKaiNestedMusic };

std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view name);

enum class SweepKind { Snr, Snapshots };

std::string_view to_string(SweepKind k);

struct ExperimentConfig {
  std::string name = "experiment";
  SweepKind sweep = SweepKind::Snr;

  ArrayGeometry geometry = ArrayGeometry::nested(4, 4);
  // Physical ULA for the classic MUSIC baseline; defaults to the length of
  // the nested array's virtual ULA.
  std::optional<ArrayGeometry> ula_geometry;

  std::vector<double> doas_deg{15.0, 17.0};
  double noise_power = 1.0;
  std::vector<double> snr_db{3.33};  // swept for SweepKind::Snr, else first entry
  std::vector<int> snapshots{150};   // swept for SweepKind::Snapshots, else first entry

  int trials = 250;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators{Estimator::MusicUla, Estimator::NestedMusic,
                                    Estimator::MsKaiNestedMusic};
  KaiConfig kai;
  int workers = 0;  // 0: one per hardware thread
  std::string output_dir = "results";

  void validate() const;
  int sources() const { return static_cast<int>(doas_deg.size()); }
  std::size_t points() const;
  double snr_at(std::size_t point) const;
  int snapshots_at(std::size_t point) const;
  /// The swept value at a point (dB or snapshot count).
  double sweep_value(std::size_t point) const;
  ArrayGeometry baseline_ula() const;
};

struct RmseSummary {
  double value = 0.0;  // degrees; NaN when no trial is usable
  int used = 0;
  int excluded = 0;  // trials without exactly P estimates
};

/// sqrt(1/(Lr P) sum_l sum_p (theta_p - est_p(l))^2) with estimates paired to
/// truth by ascending order.
RmseSummary rmse(std::span<const std::vector<double>> estimates, std::span<const double> truth);

/// Both estimates within half the source separation of their sources. Only
/// defined for two sources; other counts throw InvalidArgument.
bool is_resolved(std::span<const double> estimates, std::span<const double> truth);

struct TrialRecord {
  std::size_t point = 0;
  int trial = 0;
  Estimator estimator = Estimator::NestedMusic;
  bool failed = false;
  bool complete = true;
  std::vector<double> doas;
  double seconds = 0.0;
};

struct SweepRow {
  double sweep_value = 0.0;
  Estimator estimator = Estimator::NestedMusic;
  double rmse_deg = 0.0;
  double prob_resolution = 0.0;
  int trials = 0;
  int failures = 0;
  int incomplete = 0;
  double mean_seconds = 0.0;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<SweepRow> rows;        // point-major, estimators in config order
  std::vector<TrialRecord> records;  // sorted by (point, trial, estimator)

  const SweepRow& row(std::size_t point, Estimator e) const;
};

/// Aggregates per-trial records for one estimator at one sweep point.
SweepRow aggregate(std::span<const TrialRecord> records, std::span<const double> truth,
                   double sweep_value, Estimator estimator);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every (point, trial) task on a worker pool. Each trial draws from its
/// own generator keyed by (seed, trial index), shared across sweep points and
/// across estimators, so the output does not depend on scheduling.
SweepResult run_sweep(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Aggregate table: <sweep column>,estimator,rmse_deg,prob_resolution,trials,failures
void write_sweep_csv(std::ostream& os, const SweepResult& result);

/// Config echo plus timing and diagnostics (not byte-stable: contains runtimes).
void write_sweep_summary_json(std::ostream& os, const SweepResult& result);

}  // namespace nkai
