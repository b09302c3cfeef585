// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/geometry.hpp"

#include <string_view>

namespace nkai {

/// Square complex Hermitian matrix. Construction symmetrizes (R + R^H) / 2 so
/// downstream eigensolvers never see rounding asymmetry.
class HermitianCovariance {
 public:
  HermitianCovariance() = default;
  explicit HermitianCovariance(const CMatrix& m);

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  /// Eigenvalues in ascending order.
  RVector eigenvalues() const;

 private:
  CMatrix m_;
};

/// Relative PSD slack shared by every PSD check in the library.
inline constexpr double kPsdTolerance = 1e-10;

/// min eigenvalue >= -tol * max |eigenvalue|.
bool is_psd(const HermitianCovariance& r, double rel_tol = kPsdTolerance);

/// How entries of the sample covariance that map to the same coarray lag
/// are reconciled.
enum class DuplicatePolicy {
  SelectFirst,  // first occurrence in column-major vec(R); negative lags mirror positive ones
  Average,      // mean over every sensor pair at that lag
};

std::string_view to_string(DuplicatePolicy policy);
DuplicatePolicy duplicate_policy_from_string(std::string_view name);

/// Coarray signal z sorted by lag: entry i (zero-based) has lag i - (M̄ - 1).
struct CoarrayVector {
  CVector values;
  DuplicatePolicy policy = DuplicatePolicy::SelectFirst;

  /// M̄, the number of non-negative lags.
  int half_length() const { return static_cast<int>((values.size() + 1) / 2); }
  int lag_of(Eigen::Index i) const { return static_cast<int>(i) - (half_length() - 1); }
  Complex at_lag(int lag) const { return values(lag + half_length() - 1); }
};

/// (1/N) sum_i y(i) y(i)^H for any sensors x snapshots expression.
template <typename Derived>
HermitianCovariance sample_covariance(const Eigen::MatrixBase<Derived>& snapshots) {
  if (snapshots.cols() < 1) throw InvalidArgument("sample covariance needs at least one snapshot");
  const double scale = 1.0 / static_cast<double>(snapshots.cols());
  CMatrix r = CMatrix::Zero(snapshots.rows(), snapshots.rows());
  r.template selfadjointView<Eigen::Lower>().rankUpdate(snapshots.derived().template cast<Complex>(),
                                                        scale);
  r.template triangularView<Eigen::StrictlyUpper>() = r.adjoint();
  return HermitianCovariance(r);
}

/// Rearranges the physical covariance onto the difference coarray. Throws
/// UnsupportedGeometry when the coarray has holes.
CoarrayVector vectorize_to_coarray(const HermitianCovariance& r, const ArrayGeometry& geom,
                                   DuplicatePolicy policy = DuplicatePolicy::SelectFirst);

/// (1/M̄) sum_{i=1..M̄} z_i z_i^H, z_i = entries (M̄-i+1)..(2M̄-i) of z (one-based).
HermitianCovariance spatial_smoothing(const CoarrayVector& z);

/// Principal square root of a PSD smoothed covariance: same eigenvectors,
/// square-rooted eigenvalues. Throws NotPsd below the clamp tolerance.
HermitianCovariance equivalent_ula_covariance(const HermitianCovariance& smoothed);

}  // namespace nkai
