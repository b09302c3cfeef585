// SPDX-License-Identifier: Apache-2.0
#include "nkai/harness.hpp"

#include "nkai/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace nkai {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::MusicUla: return "music-ula";
    case Estimator::NestedMusic: return "nested-music";
    case Estimator::MsKaiNestedMusic: return "ms-kai-nested-music";
  }
  return "unknown";
}

Estimator estimator_from_string(std::string_view name) {
  if (name == "music-ula") return Estimator::MusicUla;
  if (name == "nested-music") return Estimator::NestedMusic;
  if (name == "ms-kai-nested-music" || name == "ms-kai") return Estimator::MsKaiNestedMusic;
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(SweepKind k) { return k == SweepKind::Snr ? "snr" : "snapshots"; }

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("config field 'trials': must be >= 1");
  if (workers < 0) throw ConfigError("config field 'workers': must be >= 0");
  if (estimators.empty()) throw ConfigError("config field 'estimators': must not be empty");
  if (snr_db.empty()) throw ConfigError("config field 'scenario.snr_db': must not be empty");
  if (snapshots.empty()) throw ConfigError("config field 'scenario.n_snapshots': must not be empty");
  for (int n : snapshots) {
    if (n < 1) throw ConfigError("config field 'scenario.n_snapshots': entries must be >= 1");
  }
  if (geometry.kind() != ArrayKind::Nested) {
    throw ConfigError("config field 'geometry.kind': sweeps need a nested geometry");
  }
  try {
    SourceScenario::equal_power(doas_deg, snr_db.front(), noise_power).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config field 'scenario': ") + e.what());
  }
  const int aperture = difference_coarray(geometry).virtual_aperture;
  if (sources() >= aperture) {
    throw ConfigError("config field 'scenario.doas_deg': more sources than the coarray supports");
  }
  if (std::find(estimators.begin(), estimators.end(), Estimator::MusicUla) != estimators.end() &&
      sources() >= baseline_ula().size()) {
    throw ConfigError("config field 'baseline_geometry.M': must exceed the source count");
  }
  try {
    kai.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config field 'kai': ") + e.what());
  }
}

std::size_t ExperimentConfig::points() const {
  return sweep == SweepKind::Snr ? snr_db.size() : snapshots.size();
}

double ExperimentConfig::snr_at(std::size_t point) const {
  return sweep == SweepKind::Snr ? snr_db.at(point) : snr_db.front();
}

int ExperimentConfig::snapshots_at(std::size_t point) const {
  return sweep == SweepKind::Snapshots ? snapshots.at(point) : snapshots.front();
}

double ExperimentConfig::sweep_value(std::size_t point) const {
  return sweep == SweepKind::Snr ? snr_at(point) : static_cast<double>(snapshots_at(point));
}

ArrayGeometry ExperimentConfig::baseline_ula() const {
  if (ula_geometry) return *ula_geometry;
  return ArrayGeometry::ula(difference_coarray(geometry).virtual_aperture, geometry.d1());
}

RmseSummary rmse(std::span<const std::vector<double>> estimates, std::span<const double> truth) {
  std::vector<double> sorted_truth(truth.begin(), truth.end());
  std::sort(sorted_truth.begin(), sorted_truth.end());
  RmseSummary out;
  double sum = 0.0;
  for (const auto& trial : estimates) {
    if (trial.size() != sorted_truth.size()) {
      ++out.excluded;
      continue;
    }
    std::vector<double> est = trial;
    std::sort(est.begin(), est.end());
    for (std::size_t p = 0; p < est.size(); ++p) {
      const double e = sorted_truth[p] - est[p];
      sum += e * e;
    }
    ++out.used;
  }
  out.value = out.used == 0 || sorted_truth.empty()
                  ? std::numeric_limits<double>::quiet_NaN()
                  : std::sqrt(sum / (static_cast<double>(out.used) * static_cast<double>(sorted_truth.size())));
  return out;
}

bool is_resolved(std::span<const double> estimates, std::span<const double> truth) {
  if (truth.size() != 2 || estimates.size() != 2) {
    throw InvalidArgument("resolution criterion is defined for two sources only");
  }
  const double t1 = std::min(truth[0], truth[1]);
  const double t2 = std::max(truth[0], truth[1]);
  const double e1 = std::min(estimates[0], estimates[1]);
  const double e2 = std::max(estimates[0], estimates[1]);
  const double half_gap = (t2 - t1) / 2.0;
  return std::abs(e1 - t1) < half_gap && std::abs(e2 - t2) < half_gap;
}

const SweepRow& SweepResult::row(std::size_t point, Estimator e) const {
  const auto& ests = config.estimators;
  const auto idx = static_cast<std::size_t>(std::find(ests.begin(), ests.end(), e) - ests.begin());
  if (idx == ests.size()) throw InvalidArgument("estimator not part of this sweep");
  return rows.at(point * ests.size() + idx);
}

SweepRow aggregate(std::span<const TrialRecord> records, std::span<const double> truth,
                   double sweep_value, Estimator estimator) {
  SweepRow row;
  row.sweep_value = sweep_value;
  row.estimator = estimator;
  std::vector<std::vector<double>> valid;
  double seconds = 0.0;
  int resolved = 0;
  for (const auto& rec : records) {
    if (rec.estimator != estimator) continue;
    ++row.trials;
    seconds += rec.seconds;
    if (rec.failed) {
      ++row.failures;
      continue;
    }
    if (!rec.complete) ++row.incomplete;
    valid.push_back(rec.doas);
    if (truth.size() == 2 && rec.doas.size() == 2 && is_resolved(rec.doas, truth)) ++resolved;
  }
  const RmseSummary r = rmse(valid, truth);
  row.rmse_deg = r.value;
  row.failures += r.excluded;
  row.prob_resolution = r.used == 0 || truth.size() != 2
                            ? std::numeric_limits<double>::quiet_NaN()
                            : static_cast<double>(resolved) / static_cast<double>(r.used);
  row.mean_seconds = row.trials ? seconds / row.trials : 0.0;
  return row;
}

namespace {

struct SharedGrids {
  ScanGrid coarray;
  std::optional<ScanGrid> ula;
};

template <typename F>
void timed(TrialRecord& rec, F&& run) {
  const auto start = std::chrono::steady_clock::now();
  try {
    DoaEstimates est = run();
    rec.doas = std::move(est.angles);
    rec.complete = est.complete;
  } catch (const std::exception&) {
    rec.failed = true;
    rec.doas.clear();
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void run_trial(const ExperimentConfig& config, const SharedGrids& grids, std::size_t point, int trial,
               std::vector<TrialRecord>& out) {
  const auto scenario =
      SourceScenario::equal_power(config.doas_deg, config.snr_at(point), config.noise_power);
  const int snapshots = config.snapshots_at(point);
  const int p = config.sources();

  std::optional<HermitianCovariance> smoothed;
  auto nested_smoothed = [&]() -> const HermitianCovariance& {
    if (!smoothed) {
      Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(trial));
      smoothed = smoothed_covariance(synthesize(config.geometry, scenario, snapshots, rng),
                                     config.kai.duplicate_policy);
    }
    return *smoothed;
  };

  for (std::size_t k = 0; k < config.estimators.size(); ++k) {
    TrialRecord& rec = out[k];
    rec.point = point;
    rec.trial = trial;
    rec.estimator = config.estimators[k];
    switch (rec.estimator) {
      case Estimator::MusicUla:
        timed(rec, [&] {
          // Same stream as the nested array: identical source waveforms.
          Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(trial));
          const SnapshotMatrix y = synthesize(config.baseline_ula(), scenario, snapshots, rng);
          return music_estimate(sample_covariance(y.data), p, *grids.ula);
        });
        break;
      case Estimator::NestedMusic:
        timed(rec, [&] { return music_estimate(nested_smoothed(), p, grids.coarray); });
        break;
      case Estimator::MsKaiNestedMusic:
        timed(rec, [&] { return ms_kai_music(nested_smoothed(), p, config.kai, grids.coarray).estimates; });
        break;
    }
  }
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const double step = config.kai.grid_step_deg;
  SharedGrids grids{coarray_scan_grid(config.geometry, step), std::nullopt};
  if (std::find(config.estimators.begin(), config.estimators.end(), Estimator::MusicUla) !=
      config.estimators.end()) {
    const ArrayGeometry ula = config.baseline_ula();
    grids.ula.emplace(ula.positions(), ula.d1(), step);
  }

  const std::size_t points = config.points();
  const auto trials = static_cast<std::size_t>(config.trials);
  const std::size_t n_est = config.estimators.size();
  const std::size_t total = points * trials;

  // Slot (point, trial, estimator) is written by exactly one task.
  std::vector<TrialRecord> records(total * n_est);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    std::vector<TrialRecord> scratch(n_est);
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t point = task / trials;
      const int trial = static_cast<int>(task % trials);
      std::fill(scratch.begin(), scratch.end(), TrialRecord{});
      run_trial(config, grids, point, trial, scratch);
      std::move(scratch.begin(), scratch.end(), records.begin() + static_cast<std::ptrdiff_t>(task * n_est));
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, total);
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_workers = static_cast<std::size_t>(config.workers > 0 ? config.workers : static_cast<int>(hw));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, total); ++w) pool.emplace_back(worker);
  }

  SweepResult result;
  result.config = config;
  for (std::size_t point = 0; point < points; ++point) {
    const std::span<const TrialRecord> slice(records.data() + point * trials * n_est, trials * n_est);
    for (Estimator e : config.estimators) {
      result.rows.push_back(aggregate(slice, config.doas_deg, config.sweep_value(point), e));
    }
  }
  result.records = std::move(records);
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << (result.config.sweep == SweepKind::Snr ? "snr_db" : "n_snapshots")
     << ",estimator,rmse_deg,prob_resolution,trials,failures\n";
  for (const auto& row : result.rows) {
    os << format_number(row.sweep_value) << ',' << to_string(row.estimator) << ','
       << format_number(row.rmse_deg) << ',' << format_number(row.prob_resolution) << ',' << row.trials
       << ',' << row.failures << '\n';
  }
}

void write_sweep_summary_json(std::ostream& os, const SweepResult& result) {
  Json j;
  j["config"] = to_json(result.config);
  Json rows = Json::array();
  for (const auto& row : result.rows) {
    rows.push_back({{"sweep_value", row.sweep_value},
                    {"estimator", std::string(to_string(row.estimator))},
                    {"rmse_deg", std::isfinite(row.rmse_deg) ? Json(row.rmse_deg) : Json(nullptr)},
                    {"prob_resolution",
                     std::isfinite(row.prob_resolution) ? Json(row.prob_resolution) : Json(nullptr)},
                    {"trials", row.trials},
                    {"failures", row.failures},
                    {"incomplete", row.incomplete},
                    {"mean_seconds", row.mean_seconds}});
  }
  j["rows"] = rows;
  os << j.dump(2) << '\n';
}

}  // namespace nkai
