// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/covariance.hpp"
#include "nkai/geometry.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace nkai {

/// Uncorrelated far-field narrowband sources in white noise.
struct SourceScenario {
  std::vector<double> doas_deg;
  std::vector<double> powers;  // linear source variances
  double noise_power = 1.0;
  std::optional<double> snr_db;  // set when built from equal_power()

  /// Equal-power sources with per-source SNR sigma_p^2 / sigma_n^2 in dB.
  static SourceScenario equal_power(std::vector<double> doas_deg, double snr_db,
                                    double noise_power = 1.0);

  int sources() const { return static_cast<int>(doas_deg.size()); }

  /// Throws InvalidArgument on any broken invariant. `allow_degenerate`
  /// admits zero source or noise power for limit-case experiments.
  void validate(bool allow_degenerate = false) const;
};

struct SnapshotMatrix {
  CMatrix data;  // sensors x snapshots
  ArrayGeometry geometry;

  Eigen::Index snapshots() const { return data.cols(); }
};

/// Generator used for all synthesized data. Seeded through std::seed_seq so
/// (master, stream) pairs map to independent, reproducible streams.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t master_seed, std::uint64_t stream = 0);

/// Draws y(i) = F s(i) + n(i), i = 1..N. Source waveforms are drawn before
/// noise, so two geometries fed the same seed see identical source signals.
SnapshotMatrix synthesize(const ArrayGeometry& geom, const SourceScenario& scenario, int snapshots,
                          std::uint64_t seed);
SnapshotMatrix synthesize(const ArrayGeometry& geom, const SourceScenario& scenario, int snapshots,
                          Rng& rng);

/// F R_s F^H + sigma_n^2 I.
HermitianCovariance analytic_covariance(const ArrayGeometry& geom, const SourceScenario& scenario);

}  // namespace nkai
