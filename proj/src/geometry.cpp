// SPDX-License-Identifier: Apache-2.0
#include "nkai/geometry.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace nkai {

namespace {

void check_spacing(double d1) {
  if (!(d1 > 0.0 && d1 <= 0.5)) {
    throw InvalidArgument("d1 must lie in (0, 0.5] wavelengths");
  }
}

}  // namespace

ArrayGeometry::ArrayGeometry(ArrayKind kind, std::vector<int> positions, double d1, int inner,
                             int outer)
    : kind_(kind), positions_(std::move(positions)), d1_(d1), inner_(inner), outer_(outer) {}

ArrayGeometry ArrayGeometry::ula(int sensors, double d1) {
  if (sensors < 1) throw InvalidArgument("ULA needs at least one sensor");
  check_spacing(d1);
  std::vector<int> positions(static_cast<std::size_t>(sensors));
  std::iota(positions.begin(), positions.end(), 0);
  return {ArrayKind::Ula, std::move(positions), d1, sensors, 0};
}

ArrayGeometry ArrayGeometry::nested(int inner, int outer, double d1) {
  check_spacing(d1);
  return {ArrayKind::Nested, nested_positions(inner, outer), d1, inner, outer};
}

ArrayGeometry ArrayGeometry::sparse(std::vector<int> positions, double d1) {
  check_spacing(d1);
  std::sort(positions.begin(), positions.end());
  if (positions.empty() || positions.front() != 0) {
    throw InvalidArgument("sparse array needs a reference sensor at position 0");
  }
  if (std::adjacent_find(positions.begin(), positions.end()) != positions.end()) {
    throw InvalidArgument("sensor positions must be distinct");
  }
  const int count = static_cast<int>(positions.size());
  return {ArrayKind::Sparse, std::move(positions), d1, count, 0};
}

std::vector<int> nested_positions(int inner, int outer) {
  if (inner < 1 || outer < 1) {
    throw InvalidArgument("nested array levels need at least one sensor each");
  }
  std::vector<int> positions;
  positions.reserve(static_cast<std::size_t>(inner + outer));
  for (int m = 0; m < inner; ++m) positions.push_back(m);
  // The first outer sensor, at (M1+1)-1 = M1, continues the inner ULA.
  for (int n = 1; n <= outer; ++n) positions.push_back(n * (inner + 1) - 1);
  return positions;
}

int Coarray::multiplicity_of(int lag) const {
  auto it = std::lower_bound(lags.begin(), lags.end(), lag);
  if (it == lags.end() || *it != lag) return 0;
  return multiplicity[static_cast<std::size_t>(it - lags.begin())];
}

Coarray difference_coarray(std::span<const int> positions) {
  std::map<int, int> counts;
  for (int a : positions) {
    for (int b : positions) ++counts[a - b];
  }
  Coarray c;
  c.lags.reserve(counts.size());
  c.multiplicity.reserve(counts.size());
  for (const auto& [lag, count] : counts) {
    c.lags.push_back(lag);
    c.multiplicity.push_back(count);
  }
  if (c.lags.empty()) return c;

  c.contiguous = c.lags.back() - c.lags.front() + 1 == static_cast<int>(c.lags.size());
  int upper = 0;
  while (counts.contains(upper + 1)) ++upper;
  c.virtual_aperture = counts.contains(0) ? upper + 1 : 0;
  return c;
}

SteeringManifold steering_manifold(std::span<const int> positions, double d1,
                                   std::span<const double> angles_deg) {
  std::vector<double> sorted(angles_deg.begin(), angles_deg.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("manifold angles must be distinct");
  }
  SteeringManifold m;
  m.angles_deg.assign(angles_deg.begin(), angles_deg.end());
  m.matrix.resize(static_cast<Eigen::Index>(positions.size()),
                  static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t p = 0; p < angles_deg.size(); ++p) {
    m.matrix.col(static_cast<Eigen::Index>(p)) = steering_vector<double>(positions, d1, angles_deg[p]);
  }
  return m;
}

SteeringManifold virtual_ula_manifold(int length, double d1, std::span<const double> angles_deg) {
  if (length < 1) throw InvalidArgument("virtual ULA length must be positive");
  if (angles_deg.size() > static_cast<std::size_t>(length)) {
    throw InvalidArgument("more angles than virtual sensors");
  }
  std::vector<int> positions(static_cast<std::size_t>(length));
  std::iota(positions.begin(), positions.end(), 0);
  return steering_manifold(positions, d1, angles_deg);
}

}  // namespace nkai
