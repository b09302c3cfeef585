// SPDX-License-Identifier: Apache-2.0
#include "nkai/signal.hpp"

#include <algorithm>
#include <cmath>

namespace nkai {

SourceScenario SourceScenario::equal_power(std::vector<double> doas_deg, double snr_db,
                                           double noise_power) {
  SourceScenario s;
  s.powers.assign(doas_deg.size(), noise_power * db2pow(snr_db));
  s.doas_deg = std::move(doas_deg);
  s.noise_power = noise_power;
  s.snr_db = snr_db;
  return s;
}

void SourceScenario::validate(bool allow_degenerate) const {
  if (doas_deg.empty()) throw InvalidArgument("scenario needs at least one source");
  if (powers.size() != doas_deg.size()) {
    throw InvalidArgument("scenario needs one power per DOA");
  }
  for (double doa : doas_deg) {
    if (!(std::abs(doa) < 90.0)) throw InvalidArgument("DOAs must lie in (-90, 90) degrees");
  }
  std::vector<double> sorted = doas_deg;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("DOAs must be distinct");
  }
  for (double p : powers) {
    if (!(allow_degenerate ? p >= 0.0 : p > 0.0)) {
      throw InvalidArgument("source powers must be positive");
    }
  }
  if (!(allow_degenerate ? noise_power >= 0.0 : noise_power > 0.0)) {
    throw InvalidArgument("noise power must be positive");
  }
}

Rng make_rng(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

SnapshotMatrix synthesize(const ArrayGeometry& geom, const SourceScenario& scenario, int snapshots,
                          std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return synthesize(geom, scenario, snapshots, rng);
}

SnapshotMatrix synthesize(const ArrayGeometry& geom, const SourceScenario& scenario, int snapshots,
                          Rng& rng) {
  if (snapshots < 1) throw InvalidArgument("snapshot count must be at least 1");
  scenario.validate(/*allow_degenerate=*/true);
  if (scenario.sources() >= difference_coarray(geom).virtual_aperture) {
    throw InvalidArgument("too many sources for the array's coarray");
  }

  const int p_count = scenario.sources();
  const int m = geom.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Circular complex Gaussian with variance sigma^2: (x + jy) sigma / sqrt(2).
  auto draw = [&](double sigma) {
    const double x = gauss(rng);
    const double y = gauss(rng);
    return Complex(x, y) * (sigma / std::numbers::sqrt2);
  };

  CMatrix s(p_count, snapshots);
  for (int p = 0; p < p_count; ++p) {
    const double sigma = std::sqrt(scenario.powers[static_cast<std::size_t>(p)]);
    for (int i = 0; i < snapshots; ++i) s(p, i) = draw(sigma);
  }
  CMatrix noise(m, snapshots);
  const double noise_sigma = std::sqrt(scenario.noise_power);
  for (int i = 0; i < snapshots; ++i) {
    for (int k = 0; k < m; ++k) noise(k, i) = draw(noise_sigma);
  }

  const SteeringManifold f = steering_manifold(geom.positions(), geom.d1(), scenario.doas_deg);
  return {f.matrix * s + noise, geom};
}

HermitianCovariance analytic_covariance(const ArrayGeometry& geom, const SourceScenario& scenario) {
  scenario.validate(/*allow_degenerate=*/true);
  const SteeringManifold f = steering_manifold(geom.positions(), geom.d1(), scenario.doas_deg);
  const RVector powers = Eigen::Map<const RVector>(scenario.powers.data(),
                                                   static_cast<Eigen::Index>(scenario.powers.size()));
  CMatrix r = f.matrix * powers.cast<Complex>().asDiagonal() * f.matrix.adjoint();
  r.diagonal().array() += scenario.noise_power;
  return HermitianCovariance(r);
}

}  // namespace nkai
