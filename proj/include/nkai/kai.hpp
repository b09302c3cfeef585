// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/signal.hpp"
#include "nkai/subspace.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace nkai {

/// Settings of the multi-step knowledge-aided refinement.
struct KaiConfig {
  std::optional<int> iterations;  // unset: P + 1
  double mu_increment = 0.1;      // 1 / mu_increment must be an integer
  double grid_step_deg = kDefaultGridStepDeg;
  DuplicatePolicy duplicate_policy = DuplicatePolicy::SelectFirst;

  void validate() const;
  int iterations_for(int sources) const { return iterations.value_or(sources + 1); }
  /// {0, iota, 2 iota, ..., 1}; tau = 1/iota + 1 points, last exactly 1.
  std::vector<double> mu_grid() const;
};

struct ProjectionPair {
  CMatrix signal;  // A (A^H A)^-1 A^H
  CMatrix noise;   // I - signal
};

/// Largest condition number of A^H A accepted before the manifold counts as
/// rank deficient.
inline constexpr double kMaxGramCondition = 1e12;

/// Throws DegenerateManifold when A is numerically rank deficient.
ProjectionPair projection_pair(const CMatrix& manifold);

/// V = Q_A R Q_A_perp, the estimated signal-noise cross term.
CMatrix cross_term(const CMatrix& signal_projector, const HermitianCovariance& r);

/// R - mu (V + V^H). Hermitian, not necessarily PSD.
HermitianCovariance modified_covariance(const HermitianCovariance& r, const CMatrix& cross, double mu);

/// ln det(Q_B R Q_B + tr(Q_B_perp R) / (L - P) Q_B_perp). Returns +infinity
/// when the inner matrix is not positive definite.
double sml_objective(const CMatrix& signal_projector, const CMatrix& noise_projector,
                     const HermitianCovariance& r, int length, int sources);

struct KaiIterationRecord {
  int iteration = 0;                                  // n = 1..I
  std::vector<double> manifold_angles;                // angles behind A^(n)
  std::vector<double> mu;                             // the mu grid
  std::vector<double> objective;                      // U^(n+1)(mu), +inf when skipped
  std::vector<std::vector<double>> candidate_doas;    // MUSIC output per mu
  std::size_t best = 0;                               // index of mu_o
  double mu_opt = 0.0;
  std::vector<double> doas;                           // DOAs^(n+1) at mu_o
};

struct KaiTrace {
  std::vector<double> initial_doas;
  std::vector<KaiIterationRecord> iterations;
  // Set when an iteration had to be abandoned (degenerate A^(n) or every
  // candidate scored +inf); the last good estimates are returned.
  bool degenerate_fallback = false;
};

struct KaiResult {
  DoaEstimates estimates;
  DoaEstimates initial;  // first-step estimates, i.e. plain Nested-MUSIC
  KaiTrace trace;
};

/// Runs the refinement on a precomputed smoothed covariance over the virtual
/// ULA described by `grid`.
KaiResult ms_kai_music(const HermitianCovariance& smoothed, int sources, const KaiConfig& config,
                       const ScanGrid& grid);

/// Smoothed coarray covariance from nested-array snapshots.
HermitianCovariance smoothed_covariance(const SnapshotMatrix& y,
                                        DuplicatePolicy policy = DuplicatePolicy::SelectFirst);

/// Scan grid over the filled virtual ULA of a geometry's coarray.
ScanGrid coarray_scan_grid(const ArrayGeometry& geom, double step_deg = kDefaultGridStepDeg);

/// Baseline: MUSIC on the smoothed coarray covariance.
DoaEstimates nested_music(const SnapshotMatrix& y, int sources, double step_deg = kDefaultGridStepDeg,
                          DuplicatePolicy policy = DuplicatePolicy::SelectFirst);

/// Full pipeline: snapshots -> smoothed covariance -> knowledge-aided MUSIC.
KaiResult ms_kai_nested_music(const SnapshotMatrix& y, int sources, const KaiConfig& config = {});

/// Operation counts of the refinement, evaluated from closed-form expressions
/// in the array size M, snapshots N, sources P, grid step, mu increment and
/// iteration count. `grid_*` hold the search-grid share (the 180/step term).
struct ComplexityCounts {
  double multiplications = 0.0;
  double additions = 0.0;
  double grid_multiplications = 0.0;
  double grid_additions = 0.0;
  double tau = 0.0;
  double virtual_length = 0.0;
};

ComplexityCounts complexity_estimate(int sensors, int snapshots, int sources, double step_deg,
                                     double mu_increment, int iterations);

}  // namespace nkai
