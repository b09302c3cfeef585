// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nkai {

template <typename Real>
using CMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVectorT = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using CMatrix = CMatrixT<double>;
using CVector = CVectorT<double>;
using RVector = RVectorT<double>;

// Error taxonomy. Every library failure is one of these.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPsd : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateManifold : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Real>
constexpr Real deg2rad(Real deg) {
  return deg * std::numbers::pi_v<Real> / Real(180);
}

template <typename Real>
constexpr Real rad2deg(Real rad) {
  return rad * Real(180) / std::numbers::pi_v<Real>;
}

inline double db2pow(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace nkai
