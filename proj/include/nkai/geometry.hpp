// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/types.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace nkai {

enum class ArrayKind { Ula, Nested, Sparse };

/// Linear array with sensors at integer multiples of the unit spacing d1.
/// d1 is expressed in carrier wavelengths. Positions are zero-based, so the
/// reference sensor always sits at 0.
class ArrayGeometry {
 public:
  static ArrayGeometry ula(int sensors, double d1 = 0.5);
  static ArrayGeometry nested(int inner, int outer, double d1 = 0.5);
  /// Arbitrary integer positions; must be distinct, non-negative and include 0.
  static ArrayGeometry sparse(std::vector<int> positions, double d1 = 0.5);

  ArrayKind kind() const { return kind_; }
  const std::vector<int>& positions() const { return positions_; }
  double d1() const { return d1_; }
  int size() const { return static_cast<int>(positions_.size()); }
  // Level sizes; for a ULA or sparse array inner() == size() and outer() == 0.
  int inner() const { return inner_; }
  int outer() const { return outer_; }

  bool operator==(const ArrayGeometry&) const = default;

 private:
  ArrayGeometry(ArrayKind kind, std::vector<int> positions, double d1, int inner, int outer);

  ArrayKind kind_;
  std::vector<int> positions_;
  double d1_;
  int inner_;
  int outer_;
};

/// Zero-based two-level nested positions {0..M1-1} U {n(M1+1)-1 : n = 1..M2}.
std::vector<int> nested_positions(int inner, int outer);

struct Coarray {
  std::vector<int> lags;          // ascending, distinct
  std::vector<int> multiplicity;  // pair count per lag
  bool contiguous = false;
  // Length of the hole-free non-negative segment {0, 1, ..., U}, i.e. U + 1.
  // Equals M^2/4 + M/2 for a nested array with equal levels.
  int virtual_aperture = 0;

  int multiplicity_of(int lag) const;
};

Coarray difference_coarray(std::span<const int> positions);
inline Coarray difference_coarray(const ArrayGeometry& geom) {
  return difference_coarray(geom.positions());
}

/// Element n is exp(-j 2 pi d1 r_n sin(theta)).
template <typename Real>
CVectorT<Real> steering_vector(std::span<const int> positions, Real d1, Real theta_deg) {
  if (!(std::abs(theta_deg) < Real(90))) {
    throw InvalidArgument("steering angle must lie in (-90, 90) degrees");
  }
  const Real phase = -Real(2) * std::numbers::pi_v<Real> * d1 * std::sin(deg2rad(theta_deg));
  CVectorT<Real> v(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t n = 0; n < positions.size(); ++n) {
    v(static_cast<Eigen::Index>(n)) = std::polar(Real(1), phase * Real(positions[n]));
  }
  return v;
}

/// Steering vector of a filled ULA at positions {0, ..., length-1}.
template <typename Real>
CVectorT<Real> ula_steering_vector(int length, Real d1, Real theta_deg) {
  std::vector<int> positions(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) positions[static_cast<std::size_t>(i)] = i;
  return steering_vector<Real>(positions, d1, theta_deg);
}

struct SteeringManifold {
  std::vector<double> angles_deg;
  CMatrix matrix;  // rows = sensors, one column per angle

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

/// Manifold over arbitrary positions; angles must be distinct.
SteeringManifold steering_manifold(std::span<const int> positions, double d1,
                                   std::span<const double> angles_deg);

/// Manifold of the filled virtual ULA {0, ..., length-1} seen through the coarray.
SteeringManifold virtual_ula_manifold(int length, double d1, std::span<const double> angles_deg);

}  // namespace nkai
