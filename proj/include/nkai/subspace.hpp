// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/covariance.hpp"

#include <functional>
#include <span>
#include <vector>

namespace nkai {

inline constexpr double kDefaultGridStepDeg = 0.05;

/// Eigendecomposition split into signal and noise parts. Eigenvalues ascend;
/// each eigenvector is phase-normalized so its first non-negligible entry is
/// real and positive.
struct SubspaceSplit {
  RVector eigenvalues;
  CMatrix noise;   // L x (L-P), eigenvectors of the L-P smallest eigenvalues
  CMatrix signal;  // L x P
};

SubspaceSplit subspace_split(const HermitianCovariance& r, int sources);

/// Orthonormal basis of the noise subspace.
inline CMatrix noise_subspace(const HermitianCovariance& r, int sources) {
  return subspace_split(r, sources).noise;
}

/// Search grid -90+step, ..., 90-step in degrees.
std::vector<double> angle_grid(double step_deg);

/// Steering vectors evaluated once for every grid angle, so repeated MUSIC
/// runs over the same array reuse them.
class ScanGrid {
 public:
  ScanGrid(std::span<const int> positions, double d1, double step_deg = kDefaultGridStepDeg);
  /// Filled ULA {0, ..., length-1}; covers both the physical ULA and the
  /// virtual coarray ULA.
  static ScanGrid ula(int length, double d1, double step_deg = kDefaultGridStepDeg);

  double step() const { return step_; }
  const std::vector<double>& angles() const { return angles_; }
  const CMatrix& steering() const { return steering_; }  // L x G
  Eigen::Index sensors() const { return steering_.rows(); }
  const std::vector<int>& positions() const { return positions_; }
  double d1() const { return d1_; }

 private:
  std::vector<int> positions_;
  double d1_;
  double step_;
  std::vector<double> angles_;
  CMatrix steering_;
};

struct Pseudospectrum {
  std::vector<double> grid;    // degrees, ascending, uniform step
  std::vector<double> values;  // 1 / (a^H Pn a)
  int clamped = 0;             // samples whose denominator hit the 1e-300 floor
};

inline constexpr double kSpectrumFloor = 1e-300;

/// Evaluates the MUSIC pseudospectrum against a noise-subspace basis.
Pseudospectrum pseudospectrum(const CMatrix& noise_basis, const ScanGrid& grid);

Pseudospectrum pseudospectrum(const HermitianCovariance& r, int sources, const ScanGrid& grid);

/// Generic form taking any steering-vector generator theta -> a(theta).
Pseudospectrum pseudospectrum(const HermitianCovariance& r, int sources,
                              const std::function<CVector(double)>& steering,
                              double step_deg = kDefaultGridStepDeg);

struct DoaEstimates {
  std::vector<double> angles;       // ascending
  std::vector<double> peak_values;  // matching angles
  bool complete = false;            // all P came from genuine local maxima
};

/// Picks the P largest strict local maxima. Missing slots are filled from the
/// largest unused grid samples and flagged incomplete.
DoaEstimates peak_search(const Pseudospectrum& spectrum, int sources);

DoaEstimates music_estimate(const HermitianCovariance& r, int sources, const ScanGrid& grid);

}  // namespace nkai
