// SPDX-License-Identifier: Apache-2.0
#include "nkai/kai.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace nkai {

namespace {

// Unlike steering_manifold this tolerates repeated angles; rank problems are
// left for projection_pair to report.
CMatrix manifold_matrix(const ScanGrid& grid, const std::vector<double>& angles) {
  CMatrix a(grid.sensors(), static_cast<Eigen::Index>(angles.size()));
  for (std::size_t p = 0; p < angles.size(); ++p) {
    a.col(static_cast<Eigen::Index>(p)) = steering_vector<double>(grid.positions(), grid.d1(), angles[p]);
  }
  return a;
}

}  // namespace

void KaiConfig::validate() const {
  if (iterations && *iterations < 1) throw InvalidArgument("kai.iterations must be >= 1");
  if (!(mu_increment > 0.0 && mu_increment <= 1.0)) {
    throw InvalidArgument("kai.mu_increment must lie in (0, 1]");
  }
  const double steps = 1.0 / mu_increment;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
    throw InvalidArgument("kai.mu_increment must divide 1 into an integer number of steps");
  }
  if (!(grid_step_deg > 0.0 && grid_step_deg < 90.0)) {
    throw InvalidArgument("kai.grid_step_deg must lie in (0, 90)");
  }
}

std::vector<double> KaiConfig::mu_grid() const {
  validate();
  const auto steps = static_cast<int>(std::lround(1.0 / mu_increment));
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    grid[static_cast<std::size_t>(k)] = static_cast<double>(k) / static_cast<double>(steps);
  }
  return grid;
}

ProjectionPair projection_pair(const CMatrix& manifold) {
  const Eigen::Index l = manifold.rows();
  const CMatrix identity = CMatrix::Identity(l, l);
  if (manifold.cols() == 0) return {CMatrix::Zero(l, l), identity};
  if (manifold.cols() > l) throw DegenerateManifold("manifold has more columns than rows");

  const CMatrix gram = manifold.adjoint() * manifold;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxGramCondition) {
    throw DegenerateManifold("steering manifold is rank deficient");
  }
  CMatrix q = manifold * gram.ldlt().solve(manifold.adjoint());
  q = (q + q.adjoint()) * 0.5;
  return {q, identity - q};
}

CMatrix cross_term(const CMatrix& signal_projector, const HermitianCovariance& r) {
  const Eigen::Index l = r.dim();
  if (signal_projector.rows() != l || signal_projector.cols() != l) {
    throw InvalidArgument("projector and covariance dimensions differ");
  }
  const CMatrix noise_projector = CMatrix::Identity(l, l) - signal_projector;
  return signal_projector * r.matrix() * noise_projector;
}

HermitianCovariance modified_covariance(const HermitianCovariance& r, const CMatrix& cross, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("reliability factor mu must lie in [0, 1]");
  if (cross.rows() != r.dim() || cross.cols() != r.dim()) {
    throw InvalidArgument("cross term and covariance dimensions differ");
  }
  return HermitianCovariance(r.matrix() - mu * (cross + cross.adjoint()));
}

double sml_objective(const CMatrix& signal_projector, const CMatrix& noise_projector,
                     const HermitianCovariance& r, int length, int sources) {
  if (sources >= length) throw InvalidArgument("SML objective needs P < L");
  if (r.dim() != length || signal_projector.rows() != length || noise_projector.rows() != length) {
    throw InvalidArgument("SML objective dimensions differ");
  }
  const double noise_level =
      (noise_projector * r.matrix()).trace().real() / static_cast<double>(length - sources);
  CMatrix inner = signal_projector * r.matrix() * signal_projector + noise_level * noise_projector;
  inner = (inner + inner.adjoint()) * 0.5;

  Eigen::LLT<CMatrix> chol(inner);
  if (chol.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const auto diag = chol.matrixLLT().diagonal();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double d = diag(i).real();
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    log_det += 2.0 * std::log(d);
  }
  return std::isfinite(log_det) ? log_det : std::numeric_limits<double>::infinity();
}

KaiResult ms_kai_music(const HermitianCovariance& smoothed, int sources, const KaiConfig& config,
                       const ScanGrid& grid) {
  config.validate();
  const auto length = static_cast<int>(grid.sensors());
  if (smoothed.dim() != length) throw InvalidArgument("smoothed covariance does not match scan grid");
  if (sources < 1 || sources >= length) throw InvalidArgument("source count must satisfy 1 <= P < L");

  KaiResult result;
  result.initial = music_estimate(smoothed, sources, grid);
  result.estimates = result.initial;
  result.trace.initial_doas = result.initial.angles;

  const std::vector<double> mus = config.mu_grid();
  std::vector<double> manifold_angles = result.initial.angles;
  const int iterations = config.iterations_for(sources);

  for (int n = 1; n <= iterations; ++n) {
    ProjectionPair qa;
    try {
      qa = projection_pair(manifold_matrix(grid, manifold_angles));
    } catch (const DegenerateManifold&) {
      result.trace.degenerate_fallback = true;
      break;
    }
    const CMatrix cross = cross_term(qa.signal, smoothed);

    KaiIterationRecord rec;
    rec.iteration = n;
    rec.manifold_angles = manifold_angles;
    rec.mu = mus;
    std::vector<DoaEstimates> candidates;
    candidates.reserve(mus.size());
    for (double mu : mus) {
      candidates.push_back(music_estimate(modified_covariance(smoothed, cross, mu), sources, grid));
      double objective = std::numeric_limits<double>::infinity();
      try {
        const ProjectionPair qb = projection_pair(manifold_matrix(grid, candidates.back().angles));
        objective = sml_objective(qb.signal, qb.noise, smoothed, length, sources);
      } catch (const DegenerateManifold&) {
      }
      rec.objective.push_back(objective);
      rec.candidate_doas.push_back(candidates.back().angles);
    }

    // Strict comparison in ascending mu order breaks ties toward smaller mu.
    std::size_t best = 0;
    for (std::size_t k = 1; k < rec.objective.size(); ++k) {
      if (rec.objective[k] < rec.objective[best]) best = k;
    }
    if (!std::isfinite(rec.objective[best])) {
      result.trace.iterations.push_back(std::move(rec));
      result.trace.degenerate_fallback = true;
      break;
    }
    rec.best = best;
    rec.mu_opt = mus[best];
    rec.doas = candidates[best].angles;
    result.estimates = candidates[best];

    // Gradual update: the first n new estimates replace the first n initial
    // ones (both in ascending order); from n >= P on, all columns are new.
    const auto keep_new = static_cast<std::size_t>(std::min(n, sources));
    manifold_angles.assign(rec.doas.begin(), rec.doas.begin() + static_cast<std::ptrdiff_t>(keep_new));
    manifold_angles.insert(manifold_angles.end(),
                           result.initial.angles.begin() + static_cast<std::ptrdiff_t>(keep_new),
                           result.initial.angles.end());
    result.trace.iterations.push_back(std::move(rec));
  }
  return result;
}

HermitianCovariance smoothed_covariance(const SnapshotMatrix& y, DuplicatePolicy policy) {
  return spatial_smoothing(vectorize_to_coarray(sample_covariance(y.data), y.geometry, policy));
}

ScanGrid coarray_scan_grid(const ArrayGeometry& geom, double step_deg) {
  const Coarray co = difference_coarray(geom);
  if (!co.contiguous) throw UnsupportedGeometry("difference coarray has holes");
  return ScanGrid::ula(co.virtual_aperture, geom.d1(), step_deg);
}

DoaEstimates nested_music(const SnapshotMatrix& y, int sources, double step_deg,
                          DuplicatePolicy policy) {
  return music_estimate(smoothed_covariance(y, policy), sources, coarray_scan_grid(y.geometry, step_deg));
}

KaiResult ms_kai_nested_music(const SnapshotMatrix& y, int sources, const KaiConfig& config) {
  config.validate();
  return ms_kai_music(smoothed_covariance(y, config.duplicate_policy), sources, config,
                      coarray_scan_grid(y.geometry, config.grid_step_deg));
}

ComplexityCounts complexity_estimate(int sensors, int snapshots, int sources, double step_deg,
                                     double mu_increment, int iterations) {
  if (sensors < 1 || snapshots < 1 || sources < 1 || iterations < 1 || !(step_deg > 0.0) ||
      !(mu_increment > 0.0)) {
    throw InvalidArgument("complexity inputs must be positive");
  }
  const double m = sensors;
  const double n = snapshots;
  const double p = sources;
  const double lv = m * m / 4.0 + m / 2.0;
  const double tau = 1.0 / mu_increment + 1.0;
  const double loops = static_cast<double>(iterations) * tau;
  const double scan = 180.0 / step_deg;

  const double shared = lv * 8.0 * n * n + 10.0 / 3.0 * lv * lv * lv;
  const double grid_mul = scan * (lv * lv + lv * (2.0 - p) - p);
  const double grid_add = scan * (lv * lv - lv * (p - 1.0));
  const double rest_mul = shared + lv * lv * (p + 2.0) + lv * (p * p + 2.0 * p) + p * p * p / 2.0 +
                          3.0 * p * p / 2.0;
  const double rest_add =
      shared + lv * lv * (p - 1.0) + lv * (1.5 * p * p + 2.5 * p - 1.0) - p * p - p / 2.0;

  ComplexityCounts c;
  c.tau = tau;
  c.virtual_length = lv;
  c.grid_multiplications = loops * grid_mul;
  c.grid_additions = loops * grid_add;
  c.multiplications = loops * (grid_mul + rest_mul);
  c.additions = loops * (grid_add + rest_add);
  return c;
}

}  // namespace nkai
