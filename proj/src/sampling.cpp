#include "memobs/sampling.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "memobs/errors.hpp"
#include "multiprecision.hpp"

namespace memobs {

SamplingPlan::SamplingPlan(std::vector<SamplingInstant> instants) : instants_(std::move(instants)) {
  if (instants_.empty()) throw ValidationError("sampling plan needs at least one instant");
  for (const SamplingInstant& entry : instants_) {
    if (!(entry.time > 0.0) || !std::isfinite(entry.time)) {
      throw ValidationError(fmt::format("sampling instant must be positive, got {}", entry.time));
    }
  }
}

std::vector<double> SamplingPlan::times() const {
  std::vector<double> out;
  for (const SamplingInstant& entry : instants_) out.push_back(entry.time);
  return out;
}

double SamplingPlan::max_time() const {
  double t = 0.0;
  for (const SamplingInstant& entry : instants_) t = std::max(t, entry.time);
  return t;
}

void SamplingPlan::check_within(double length) const {
  for (const SamplingInstant& entry : instants_) entry.region.check_within(length);
}

NonvanishingCheck check_kernel_nonvanishing(const SamplingPlan& plan, const MemoryKernel& kernel, double tol) {
  NonvanishingCheck out;
  for (int j = 0; j < plan.size(); ++j) {
    if (std::abs(kernel(plan[j].time)) > tol) out.indices.push_back(j);
  }
  out.holds = !out.indices.empty();
  return out;
}

std::string_view to_string(CoverageVerdict verdict) {
  switch (verdict) {
    case CoverageVerdict::Strong: return "strong";
    case CoverageVerdict::Weak: return "weak";
    case CoverageVerdict::Fail: return "fail";
  }
  return "fail";
}

GeometricCheck check_geometric_condition(const SamplingPlan& plan, const MemoryKernel& kernel, double length) {
  if (!(length > 0.0)) throw ValidationError("domain length must be positive");
  plan.check_within(length);
  GeometricCheck out;
  out.active = check_kernel_nonvanishing(plan, kernel).indices;
  ObservationRegion cover;
  for (int j : out.active) cover = cover.united(plan[j].region);

  const double eps = 1e-12 * length;
  double cursor = 0.0;
  bool cursor_covered = false;
  auto gap = [&](double lo, double hi, bool lo_uncovered, bool hi_uncovered) {
    if (hi - lo > eps) {
      out.uncovered.push_back({lo, hi, lo_uncovered, hi_uncovered});
    } else {
      out.uncovered_points.push_back(0.5 * (lo + hi));
    }
  };
  for (const Interval& piece : cover.intervals()) {
    const double lo = std::max(piece.lo, 0.0);
    if (lo > cursor) {
      gap(cursor, lo, !cursor_covered, !piece.closed_lo);
    } else if (lo == cursor && !piece.closed_lo && !cursor_covered) {
      out.uncovered_points.push_back(cursor);
    }
    cursor = std::min(piece.hi, length);
    cursor_covered = piece.closed_hi || piece.hi > length;
  }
  if (length > cursor) {
    gap(cursor, length, !cursor_covered, true);
  } else if (!cursor_covered) {
    out.uncovered_points.push_back(length);
  }
  if (!out.uncovered.empty()) {
    out.verdict = CoverageVerdict::Fail;
  } else if (!out.uncovered_points.empty()) {
    out.verdict = CoverageVerdict::Weak;
  } else {
    out.verdict = CoverageVerdict::Strong;
  }
  return out;
}

namespace {

void check_table(const SamplingPlan& plan, const Eigen::MatrixXd& table, const SpectralBasis& basis) {
  if (table.rows() != basis.size() || table.cols() != plan.size()) {
    throw ValidationError(fmt::format("modal table is {}x{}, expected {}x{}", table.rows(), table.cols(),
                                      basis.size(), plan.size()));
  }
}

}  // namespace

Eigen::MatrixXd observation_gram(const SamplingPlan& plan, const Eigen::MatrixXd& modal_table,
                                 const SpectralBasis& basis) {
  check_table(plan, modal_table, basis);
  const int K = basis.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(K, K);
  for (int j = 0; j < plan.size(); ++j) {
    const Eigen::MatrixXd G = overlap_matrix(basis, plan[j].region);
    const Eigen::VectorXd d = modal_table.col(j);
#pragma omp parallel for schedule(static)
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) Q(k, l) += d[k] * G(k, l) * d[l];
    }
  }
  return 0.5 * (Q + Q.transpose());
}

Eigen::MatrixXd observation_gram(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                                 const SpectralBasis& basis) {
  const std::vector<double> times = plan.times();
  return observation_gram(plan, evaluator.table(basis, times), basis);
}

ObservabilityConstants observability_constants(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                                               const SpectralBasis& basis) {
  using detail::Extended;
  using MatrixX = Eigen::Matrix<Extended, Eigen::Dynamic, Eigen::Dynamic>;
  const int K = basis.size();
  if (K < 2) throw ValidationError("observability constants need K >= 2");
  plan.check_within(basis.length());
  const std::vector<double> times = plan.times();
  const Eigen::MatrixXd table = evaluator.table(basis, times);
  const Extended pi = detail::extended_pi();

  // S = Lambda^2 Q Lambda^2, i.e. sum_j E_j G_j E_j with E_j = diag(lambda^2 x_k(t_j)).
  MatrixX S = MatrixX::Zero(K, K);
  for (int j = 0; j < plan.size(); ++j) {
    const MatrixX G = detail::overlap_matrix_generic<Extended>(basis.length(), K, plan[j].region, pi);
    std::vector<Extended> e(K);
    for (int k = 0; k < K; ++k) {
      const Extended lambda(basis.eigenvalues()[k]);
      e[k] = lambda * lambda * Extended(table(k, j));
    }
    for (int l = 0; l < K; ++l) {
      for (int k = l; k < K; ++k) {
        const Extended v = e[k] * G(k, l) * e[l];
        S(k, l) += v;
        if (k != l) S(l, k) += v;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixX> solver(S, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("observability eigensolve did not converge");
  const Extended mu_min = solver.eigenvalues()(0);
  const Extended mu_max = solver.eigenvalues()(K - 1);

  ObservabilityConstants out;
  out.truncation = K;
  out.raw_min_eigenvalue = static_cast<double>(mu_min);
  out.conditioning_warning = mu_min < 0;
  out.c_min = mu_min > 0 ? static_cast<double>(boost::multiprecision::sqrt(mu_min)) : 0.0;
  out.c_max = mu_max > 0 ? static_cast<double>(boost::multiprecision::sqrt(mu_max)) : 0.0;
  out.lower_bracket = out.c_min;
  out.upper_bracket = std::sqrt(static_cast<double>(plan.size())) * out.c_max;
  return out;
}

std::vector<ProbeRow> probe_upper_bound(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                                        const SpectralBasis& basis, double x0, std::span<const double> radii) {
  const double L = basis.length();
  if (radii.empty()) throw ValidationError("probe needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ValidationError("probe radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw ValidationError("probe radii must decrease strictly");
  }
  plan.check_within(L);
  const std::vector<double> times = plan.times();
  const Eigen::MatrixXd table = evaluator.table(basis, times);
  std::vector<Eigen::MatrixXd> grams;
  for (const SamplingInstant& entry : plan.instants()) grams.push_back(overlap_matrix(basis, entry.region));
  const Eigen::ArrayXd lambda_sq = basis.eigenvalues().array().square();

  std::vector<ProbeRow> rows;
  for (double r : radii) {
    const double lo = std::max(0.0, x0 - r);
    const double hi = std::min(L, x0 + r);
    if (!(hi > lo)) {
      throw ValidationError(fmt::format("ball B({}, {}) does not meet (0, {})", x0, r, L));
    }
    // b = <|B|^{-1/2} chi_B, e_k> is the A^{-2} image; the probe is a = lambda^2 b.
    const Eigen::VectorXd b = indicator_coefficients(basis, lo, hi) / std::sqrt(2.0 * r);
    double observed = 0.0;
    for (int j = 0; j < plan.size(); ++j) {
      const Eigen::VectorXd c = (b.array() * lambda_sq * table.col(j).array()).matrix();
      observed += std::sqrt(std::max(0.0, c.dot(grams[j] * c)));
    }
    const double norm = b.norm();
    rows.push_back({r, observed / norm, observed, norm});
  }
  return rows;
}

namespace serial {

Eigen::MatrixXd overlap_matrix(const SpectralBasis& basis, const ObservationRegion& region) {
  region.check_within(basis.length());
  const int K = basis.size();
  const double L = basis.length();
  const double pi = std::numbers::pi;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, K);
  for (const Interval& piece : region.intervals()) {
    for (int k = 1; k <= K; ++k) {
      for (int l = 1; l <= K; ++l) {
        // antiderivative of (2/L) sin(k pi x/L) sin(l pi x/L)
        auto F = [&](double x) {
          if (k == l) return x / L - std::sin(2 * k * pi * x / L) / (2 * k * pi);
          return (std::sin((k - l) * pi * x / L) / (k - l) - std::sin((k + l) * pi * x / L) / (k + l)) / pi;
        };
        G(k - 1, l - 1) += F(piece.hi) - F(piece.lo);
      }
    }
  }
  return G;
}

Eigen::MatrixXd observation_gram(const SamplingPlan& plan, const Eigen::MatrixXd& modal_table,
                                 const SpectralBasis& basis) {
  check_table(plan, modal_table, basis);
  const int K = basis.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(K, K);
  for (int j = 0; j < plan.size(); ++j) {
    const Eigen::MatrixXd G = serial::overlap_matrix(basis, plan[j].region);
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) Q(k, l) += modal_table(k, j) * G(k, l) * modal_table(l, j);
    }
  }
  return 0.5 * (Q + Q.transpose());
}

}  // namespace serial

}  // namespace memobs
