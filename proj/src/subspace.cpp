// SPDX-License-Identifier: Apache-2.0
#include "nkai/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nkai {

namespace {

void normalize_phase(CMatrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    auto col = vectors.col(c);
    const double tol = 1e-12 * col.norm();
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      const double mag = std::abs(col(r));
      if (mag > tol) {
        col *= std::conj(col(r)) / mag;
        break;
      }
    }
  }
}

}  // namespace

SubspaceSplit subspace_split(const HermitianCovariance& r, int sources) {
  const auto dim = r.dim();
  if (sources < 0 || sources >= dim) {
    throw InvalidArgument("source count must satisfy 0 <= P < L");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(r.matrix());
  if (es.info() != Eigen::Success) throw NumericError("eigensolver did not converge");
  CMatrix vectors = es.eigenvectors();
  normalize_phase(vectors);
  const Eigen::Index noise_dim = dim - sources;
  return {es.eigenvalues(), vectors.leftCols(noise_dim), vectors.rightCols(sources)};
}

std::vector<double> angle_grid(double step_deg) {
  if (!(step_deg > 0.0) || step_deg >= 90.0) throw InvalidArgument("grid step must lie in (0, 90)");
  std::vector<double> grid;
  for (long k = 1;; ++k) {
    // Rounded to 1e-9 deg so grid angles print and compare cleanly.
    const double angle = std::round((-90.0 + static_cast<double>(k) * step_deg) * 1e9) / 1e9;
    if (angle >= 90.0 - 1e-9) break;
    grid.push_back(angle);
  }
  return grid;
}

ScanGrid::ScanGrid(std::span<const int> positions, double d1, double step_deg)
    : positions_(positions.begin(), positions.end()),
      d1_(d1),
      step_(step_deg),
      angles_(angle_grid(step_deg)) {
  steering_.resize(static_cast<Eigen::Index>(positions_.size()),
                   static_cast<Eigen::Index>(angles_.size()));
  for (std::size_t g = 0; g < angles_.size(); ++g) {
    steering_.col(static_cast<Eigen::Index>(g)) = steering_vector<double>(positions_, d1, angles_[g]);
  }
}

ScanGrid ScanGrid::ula(int length, double d1, double step_deg) {
  std::vector<int> positions(static_cast<std::size_t>(length));
  std::iota(positions.begin(), positions.end(), 0);
  return ScanGrid(positions, d1, step_deg);
}

Pseudospectrum pseudospectrum(const CMatrix& noise_basis, const ScanGrid& grid) {
  if (noise_basis.rows() != grid.sensors()) {
    throw InvalidArgument("noise subspace and scan grid disagree on sensor count");
  }
  Pseudospectrum out;
  out.grid = grid.angles();
  // Row g of the projection holds Pn^H a(theta_g).
  const CMatrix proj = grid.steering().adjoint() * noise_basis;
  const RVector denom = proj.rowwise().squaredNorm();
  out.values.resize(out.grid.size());
  for (Eigen::Index g = 0; g < denom.size(); ++g) {
    double d = denom(g);
    if (d < kSpectrumFloor) {
      d = kSpectrumFloor;
      ++out.clamped;
    }
    out.values[static_cast<std::size_t>(g)] = 1.0 / d;
  }
  return out;
}

Pseudospectrum pseudospectrum(const HermitianCovariance& r, int sources, const ScanGrid& grid) {
  return pseudospectrum(subspace_split(r, sources).noise, grid);
}

Pseudospectrum pseudospectrum(const HermitianCovariance& r, int sources,
                              const std::function<CVector(double)>& steering, double step_deg) {
  const CMatrix noise = subspace_split(r, sources).noise;
  Pseudospectrum out;
  out.grid = angle_grid(step_deg);
  out.values.reserve(out.grid.size());
  for (double theta : out.grid) {
    const CVector a = steering(theta);
    if (a.size() != noise.rows()) throw InvalidArgument("steering vector has the wrong length");
    double d = (noise.adjoint() * a).squaredNorm();
    if (d < kSpectrumFloor) {
      d = kSpectrumFloor;
      ++out.clamped;
    }
    out.values.push_back(1.0 / d);
  }
  return out;
}

DoaEstimates peak_search(const Pseudospectrum& spectrum, int sources) {
  const auto& v = spectrum.values;
  if (v.empty()) throw InvalidArgument("empty pseudospectrum");
  if (sources < 1) throw InvalidArgument("peak search needs P >= 1");
  if (static_cast<std::size_t>(sources) > v.size()) {
    throw InvalidArgument("more sources than grid points");
  }

  std::vector<std::size_t> peaks;
  for (std::size_t g = 1; g + 1 < v.size(); ++g) {
    if (v[g] > v[g - 1] && v[g] > v[g + 1]) peaks.push_back(g);
  }
  // Larger value first; equal values resolve toward the smaller angle.
  auto by_height = [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); };
  std::sort(peaks.begin(), peaks.end(), by_height);

  const auto wanted = static_cast<std::size_t>(sources);
  DoaEstimates est;
  est.complete = peaks.size() >= wanted;
  std::vector<std::size_t> chosen(peaks.begin(), peaks.begin() + std::min(wanted, peaks.size()));
  if (chosen.size() < wanted) {
    std::vector<std::size_t> rest(v.size());
    std::iota(rest.begin(), rest.end(), 0);
    std::sort(rest.begin(), rest.end(), by_height);
    for (std::size_t g : rest) {
      if (chosen.size() == wanted) break;
      if (std::find(chosen.begin(), chosen.end(), g) == chosen.end()) chosen.push_back(g);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t g : chosen) {
    est.angles.push_back(spectrum.grid[g]);
    est.peak_values.push_back(v[g]);
  }
  return est;
}

DoaEstimates music_estimate(const HermitianCovariance& r, int sources, const ScanGrid& grid) {
  return peak_search(pseudospectrum(r, sources, grid), sources);
}

}  // namespace nkai
