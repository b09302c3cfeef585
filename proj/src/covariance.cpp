// SPDX-License-Identifier: Apache-2.0
#include "nkai/covariance.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace nkai {

HermitianCovariance::HermitianCovariance(const CMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("covariance must be square");
  m_ = (m + m.adjoint()) * 0.5;
}

RVector HermitianCovariance::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver did not converge");
  return es.eigenvalues();
}

bool is_psd(const HermitianCovariance& r, double rel_tol) {
  if (r.dim() == 0) return true;
  const RVector ev = r.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -rel_tol * scale;
}

std::string_view to_string(DuplicatePolicy policy) {
  return policy == DuplicatePolicy::Average ? "average" : "select-first";
}

DuplicatePolicy duplicate_policy_from_string(std::string_view name) {
  if (name == "select-first") return DuplicatePolicy::SelectFirst;
  if (name == "average") return DuplicatePolicy::Average;
  throw InvalidArgument("unknown duplicate policy '" + std::string(name) + "'");
}

CoarrayVector vectorize_to_coarray(const HermitianCovariance& r, const ArrayGeometry& geom,
                                   DuplicatePolicy policy) {
  const auto& pos = geom.positions();
  const auto m = static_cast<Eigen::Index>(pos.size());
  if (r.dim() != m) throw InvalidArgument("covariance dimension does not match geometry");
  const Coarray co = difference_coarray(geom);
  if (!co.contiguous) throw UnsupportedGeometry("difference coarray has holes");

  const int half = co.virtual_aperture;
  const auto len = static_cast<Eigen::Index>(2 * half - 1);
  CVector z = CVector::Zero(len);
  const CMatrix& rm = r.matrix();

  if (policy == DuplicatePolicy::SelectFirst) {
    std::vector<bool> seen(static_cast<std::size_t>(half), false);
    // Column-major scan of vec(R), keeping the first pair seen per lag >= 0.
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index a = 0; a < m; ++a) {
        const int lag = pos[static_cast<std::size_t>(a)] - pos[static_cast<std::size_t>(b)];
        if (lag < 0 || seen[static_cast<std::size_t>(lag)]) continue;
        seen[static_cast<std::size_t>(lag)] = true;
        z(lag + half - 1) = rm(a, b);
        z(-lag + half - 1) = std::conj(rm(a, b));
      }
    }
    // Lag 0 comes from the diagonal, which is real after symmetrization.
  } else {
    Eigen::VectorXi count = Eigen::VectorXi::Zero(len);
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index a = 0; a < m; ++a) {
        const int lag = pos[static_cast<std::size_t>(a)] - pos[static_cast<std::size_t>(b)];
        z(lag + half - 1) += rm(a, b);
        ++count(lag + half - 1);
      }
    }
    for (Eigen::Index i = 0; i < len; ++i) z(i) /= static_cast<double>(count(i));
  }
  return {std::move(z), policy};
}

HermitianCovariance spatial_smoothing(const CoarrayVector& z) {
  const auto len = z.values.size();
  if (len % 2 == 0) throw InvalidArgument("coarray vector must have odd length 2M-1");
  const Eigen::Index half = (len + 1) / 2;
  if (half < 2) throw InvalidArgument("coarray vector too short to smooth");

  // Column i-1 holds window z_i, which starts at zero-based row half - i.
  CMatrix windows(half, half);
  for (Eigen::Index i = 1; i <= half; ++i) {
    windows.col(i - 1) = z.values.segment(half - i, half);
  }
  CMatrix smoothed = CMatrix::Zero(half, half);
  smoothed.selfadjointView<Eigen::Lower>().rankUpdate(windows, 1.0 / static_cast<double>(half));
  smoothed.triangularView<Eigen::StrictlyUpper>() = smoothed.adjoint();
  return HermitianCovariance(smoothed);
}

HermitianCovariance equivalent_ula_covariance(const HermitianCovariance& smoothed) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(smoothed.matrix());
  if (es.info() != Eigen::Success) throw NumericError("eigensolver did not converge");
  RVector ev = es.eigenvalues();
  const double scale = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kPsdTolerance * scale) throw NotPsd("smoothed covariance is not PSD");
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  const CMatrix& u = es.eigenvectors();
  return HermitianCovariance(u * ev.asDiagonal() * u.adjoint());
}

}  // namespace nkai
