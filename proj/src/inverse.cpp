#include "memobs/inverse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace memobs {

Certificate backward_uniqueness_certificate(std::span<const double> times, const ModalEvaluator& evaluator,
                                            const SpectralBasis& basis, double tol) {
  if (times.empty()) throw ValidationError("certificate needs at least one time instant");
  for (double t : times) {
    if (!(t > 0.0)) throw ValidationError(fmt::format("certificate instants must be positive, got {}", t));
  }
  if (!(tol > 0.0)) throw ValidationError("certificate tolerance must be positive");
  const double horizon = *std::max_element(times.begin(), times.end());
  const Eigen::MatrixXd table = evaluator.table(basis, times);
  const int K = basis.size();
  std::vector<double> scale(K);
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < K; ++k) scale[k] = evaluator.sup_abs(basis.eigenvalues()[k], horizon);

  Certificate cert;
  cert.tolerance = tol;
  for (int k = 0; k < K; ++k) {
    ModeWitness w{k + 1, -1, 0.0, scale[k]};
    for (int j = 0; j < table.cols(); ++j) {
      if (std::abs(table(k, j)) > tol * scale[k]) {
        w.instant = j;
        w.value = table(k, j);
        break;
      }
      if (std::abs(table(k, j)) >= std::abs(w.value)) w.value = table(k, j);
    }
    if (w.instant < 0) cert.failing_modes.push_back(k + 1);
    cert.modes.push_back(w);
  }
  return cert;
}

ObservationData simulate_observations(const SpectralField& y0, const SamplingPlan& plan,
                                      const ModalEvaluator& evaluator, int samples_per_unit, double sigma,
                                      std::uint64_t seed) {
  if (samples_per_unit < 16) {
    throw ValidationError(fmt::format("samples_per_unit must be at least 16, got {}", samples_per_unit));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("noise level must be nonnegative");
  const SpectralBasis& basis = y0.basis();
  plan.check_within(basis.length());
  ObservationData data{plan, sigma, seed, kNoiseGenerator, {}};
  for (const SamplingInstant& entry : plan.instants()) {
    const SpectralField state = propagate(y0, evaluator, entry.time);
    ObservationBlock block{entry.time, {}, {}};
    for (const Interval& piece : entry.region.intervals()) {
      const int n = std::max(1, static_cast<int>(std::ceil(piece.length() * samples_per_unit)));
      for (int i = 0; i <= n; ++i) {
        const double x = i == n ? piece.hi : piece.lo + piece.length() * i / n;
        block.xs.push_back(x);
        block.values.push_back(state(x));
      }
    }
    data.blocks.push_back(std::move(block));
  }
  if (sigma > 0.0) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (ObservationBlock& block : data.blocks) {
      for (double& v : block.values) v += noise(engine);
    }
  }
  return data;
}

namespace {

// Trapezoid weights for samples grouped by the region's intervals.
std::vector<double> quadrature_weights(const std::vector<double>& xs, const ObservationRegion& region) {
  std::vector<double> w(xs.size(), 0.0);
  std::vector<bool> seen(xs.size(), false);
  for (const Interval& piece : region.intervals()) {
    const double slack = 1e-12 * std::max(1.0, std::abs(piece.hi));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!seen[i] && xs[i] >= piece.lo - slack && xs[i] <= piece.hi + slack) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    for (std::size_t p = 0; p + 1 < idx.size(); ++p) {
      const double d = xs[idx[p + 1]] - xs[idx[p]];
      w[idx[p]] += 0.5 * d;
      w[idx[p + 1]] += 0.5 * d;
    }
    for (std::size_t i : idx) seen[i] = true;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!seen[i]) throw ValidationError(fmt::format("sample x = {} lies outside its observation region", xs[i]));
  }
  return w;
}

}  // namespace

Reconstruction reconstruct_initial(const ObservationData& data, const SamplingPlan& plan,
                                   const ModalEvaluator& evaluator, const SpectralBasis& basis, double reg) {
  if (!(reg >= 0.0)) throw ValidationError("regularization must be nonnegative");
  if (data.blocks.size() != static_cast<std::size_t>(plan.size())) {
    throw ValidationError("observation data and plan differ in the number of instants");
  }
  for (int j = 0; j < plan.size(); ++j) {
    if (data.blocks[j].time != plan[j].time) throw ValidationError("observation data times do not match the plan");
    if (data.blocks[j].xs.size() != data.blocks[j].values.size()) {
      throw ValidationError("observation block has mismatched xs and values");
    }
  }
  const int K = basis.size();
  const std::vector<double> times = plan.times();
  const Eigen::MatrixXd table = evaluator.table(basis, times);
  const Eigen::ArrayXd lambda_sq = basis.eigenvalues().array().square();
  const double norm_scale = std::sqrt(2.0 / basis.length());
  const double pi_over_L = std::numbers::pi / basis.length();

  // Unknowns b = Lambda^-2 a; the penalty reg * ||a||_{H^-4}^2 becomes reg * |b|^2.
  Eigen::MatrixXd normal = reg * Eigen::MatrixXd::Identity(K, K);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
  std::vector<Eigen::MatrixXd> designs;
  std::vector<Eigen::VectorXd> weights;
  for (int j = 0; j < plan.size(); ++j) {
    const ObservationBlock& block = data.blocks[j];
    const std::vector<double> w = quadrature_weights(block.xs, plan[j].region);
    const int n = static_cast<int>(block.xs.size());
    Eigen::MatrixXd design(n, K);
    const Eigen::ArrayXd column_scale = lambda_sq * table.col(j).array();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < K; ++k) {
        design(i, k) = column_scale[k] * norm_scale * std::sin((k + 1) * pi_over_L * block.xs[i]);
      }
    }
    const Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    const Eigen::Map<const Eigen::VectorXd> d(block.values.data(), n);
    normal.noalias() += design.transpose() * wv.asDiagonal() * design;
    rhs.noalias() += design.transpose() * wv.cwiseProduct(d);
    designs.push_back(std::move(design));
    weights.push_back(wv);
  }
  normal = 0.5 * (normal + normal.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(normal, Eigen::EigenvaluesOnly);
  if (spectrum.info() != Eigen::Success) throw NumericalError("normal-equation eigensolve failed");
  const double mu_min = spectrum.eigenvalues()(0);
  const double mu_max = spectrum.eigenvalues()(K - 1);
  if (!(mu_min > 1e-14 * mu_max)) {
    if (reg == 0.0) {
      throw NumericalError(
          fmt::format("normal equations are singular at reg = 0 (eigenvalues {} .. {})", mu_min, mu_max));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw NumericalError("normal equations are not positive definite");
  const Eigen::VectorXd b = llt.solve(rhs);

  double residual = 0.0;
  for (int j = 0; j < plan.size(); ++j) {
    const Eigen::Map<const Eigen::VectorXd> d(data.blocks[j].values.data(),
                                              static_cast<Eigen::Index>(data.blocks[j].values.size()));
    const Eigen::VectorXd misfit = designs[j] * b - d;
    residual += misfit.cwiseAbs2().dot(weights[j]);
  }
  Eigen::VectorXd a = (b.array() * lambda_sq).matrix();
  return {SpectralField(basis, std::move(a)), reg, mu_min > 0.0 ? mu_max / mu_min : HUGE_VAL, std::sqrt(residual)};
}

Eigen::MatrixXd control_gram(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                             const SpectralBasis& basis) {
  const std::vector<double> times = plan.times();
  const Eigen::MatrixXd table = evaluator.table(basis, times);
  const int K = basis.size();
  // Control map B_j = D_j G_j acting on c_j; its L^2(omega_j) adjoint in these
  // coordinates is c_j = D_j xi, so the Gram is sum_j (D_j G_j) D_j.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(K, K);
  for (int j = 0; j < plan.size(); ++j) {
    const Eigen::MatrixXd G = overlap_matrix(basis, plan[j].region);
    const Eigen::VectorXd d = table.col(j);
    const Eigen::MatrixXd control_map = d.asDiagonal() * G;
    gram.noalias() += control_map * d.asDiagonal();
  }
  return 0.5 * (gram + gram.transpose());
}

namespace {

struct MarchNodes {
  std::vector<double> t;
  std::vector<int> jump_node;  // node index of each jump time
};

MarchNodes build_nodes(std::span<const double> jump_times, double horizon, int steps, int refine) {
  std::vector<double> breaks(jump_times.begin(), jump_times.end());
  breaks.push_back(horizon);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const double h = horizon / steps;
  MarchNodes nodes;
  nodes.t.push_back(0.0);
  std::vector<std::pair<double, int>> break_nodes;
  double start = 0.0;
  for (double stop : breaks) {
    if (stop <= start) continue;
    const int n = refine * std::max(1, static_cast<int>(std::ceil((stop - start) / h - 1e-9)));
    for (int i = 1; i <= n; ++i) nodes.t.push_back(i == n ? stop : start + (stop - start) * i / n);
    break_nodes.emplace_back(stop, static_cast<int>(nodes.t.size()) - 1);
    start = stop;
  }
  for (double tau : jump_times) {
    int node = 0;
    for (const auto& [time, index] : break_nodes) {
      if (time == tau) node = index;
    }
    nodes.jump_node.push_back(node);
  }
  return nodes;
}

Eigen::VectorXd march_with_jumps(const Eigen::ArrayXd& lambda, const MemoryKernel& kernel,
                                 const Eigen::VectorXd& initial, const MarchNodes& nodes,
                                 const Eigen::MatrixXd& amounts) {
  const int K = static_cast<int>(lambda.size());
  const int N = static_cast<int>(nodes.t.size()) - 1;
  const auto& t = nodes.t;
  Eigen::MatrixXd jumps = Eigen::MatrixXd::Zero(K, N + 1);
  for (std::size_t j = 0; j < nodes.jump_node.size(); ++j) jumps.col(nodes.jump_node[j]) += amounts.col(j);

  // weighted history: V(:, i) = (d_{i-1}/2) x(t_i-) + (d_i/2) x(t_i+)
  Eigen::MatrixXd V(K, N + 1);
  Eigen::VectorXd m_row(N + 1);
  Eigen::ArrayXd left = initial.array() + jumps.col(0).array();  // x(t_n-) for n = 0 means x(0+)
  Eigen::ArrayXd right = left;
  Eigen::ArrayXd memory_now = Eigen::ArrayXd::Zero(K);
  Eigen::ArrayXd previous_left_weight = Eigen::ArrayXd::Zero(K);  // (d_{n-1}/2) x(t_n-)
  const bool memoryless = kernel.is_zero();
  const double m0 = memoryless ? 0.0 : kernel(0.0);
  for (int n = 0; n < N; ++n) {
    const double d = t[n + 1] - t[n];
    V.col(n) = (previous_left_weight + 0.5 * d * right).matrix();
    Eigen::ArrayXd known = Eigen::ArrayXd::Zero(K);
    if (!memoryless) {
      for (int i = 0; i <= n; ++i) m_row[i] = kernel(t[n + 1] - t[i]);
      known = (V.leftCols(n + 1) * m_row.head(n + 1)).array();
    }
    const Eigen::ArrayXd denom = 1.0 + 0.5 * d * lambda + 0.25 * d * d * m0;
    left = (right * (1.0 - 0.5 * d * lambda) - 0.5 * d * (memory_now + known)) / denom;
    memory_now = known + 0.5 * d * m0 * left;
    right = left + jumps.col(n + 1).array();
    previous_left_weight = 0.5 * d * left;
  }
  return left.matrix();
}

}  // namespace

Eigen::VectorXd simulate_controlled_modes(std::span<const double> lambdas, const MemoryKernel& kernel,
                                          const Eigen::VectorXd& initial, std::span<const double> jump_times,
                                          const Eigen::MatrixXd& amounts, double horizon, int steps) {
  const int K = static_cast<int>(lambdas.size());
  if (initial.size() != K || amounts.rows() != K || amounts.cols() != static_cast<Eigen::Index>(jump_times.size())) {
    throw ValidationError("controlled simulation: inconsistent dimensions");
  }
  if (!(horizon > 0.0) || steps < 8) throw ValidationError("controlled simulation needs horizon > 0, steps >= 8");
  for (double tau : jump_times) {
    if (!(tau > 0.0 && tau < horizon)) {
      throw ValidationError(fmt::format("jump time {} outside (0, {})", tau, horizon));
    }
  }
  const Eigen::ArrayXd lambda = Eigen::Map<const Eigen::ArrayXd>(lambdas.data(), K);
  if (lambda.maxCoeff() * horizon / steps > 2.0) throw ValidationError("controlled simulation step too large");
  const MarchNodes coarse = build_nodes(jump_times, horizon, steps, 1);
  const MarchNodes fine = build_nodes(jump_times, horizon, steps, 2);
  const Eigen::VectorXd zc = march_with_jumps(lambda, kernel, initial, coarse, amounts);
  const Eigen::VectorXd zf = march_with_jumps(lambda, kernel, initial, fine, amounts);
  return (4.0 * zf - zc) / 3.0;
}

double simulate_controlled_mode(double lambda, const MemoryKernel& kernel, double initial,
                                std::span<const Jump> jumps, double horizon, int steps) {
  std::vector<double> times;
  Eigen::MatrixXd amounts(1, static_cast<Eigen::Index>(jumps.size()));
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    times.push_back(jumps[j].time);
    amounts(0, j) = jumps[j].amount;
  }
  const std::array<double, 1> lambdas{lambda};
  return simulate_controlled_modes(lambdas, kernel, Eigen::VectorXd::Constant(1, initial), times, amounts, horizon,
                                   steps)[0];
}

ImpulseControl impulse_control(const SpectralField& y0, const SpectralField& y1, const SamplingPlan& plan,
                               double horizon, const ModalEvaluator& evaluator, int simulation_steps) {
  const SpectralBasis& basis = y0.basis();
  if (!(basis == y1.basis())) throw ValidationError("initial and target fields live on different bases");
  if (!(horizon > plan.max_time())) {
    throw ValidationError(fmt::format("control horizon {} must exceed every sampling instant", horizon));
  }
  plan.check_within(basis.length());
  const int K = basis.size();
  const int m = plan.size();
  const std::vector<double> times = plan.times();
  const Eigen::MatrixXd table = evaluator.table(basis, times);
  const Eigen::ArrayXd lambda_sq = basis.eigenvalues().array().square();

  const SpectralField free_state = propagate(y0, evaluator, horizon);
  const Eigen::VectorXd gap = y1.coeffs() - free_state.coeffs();

  std::vector<int> dead;
  for (int k = 0; k < K; ++k) {
    if (table.row(k).cwiseAbs().maxCoeff() <= 1e-10 && std::abs(gap[k]) > 1e-12 * std::max(1.0, gap.norm())) {
      dead.push_back(k + 1);
    }
  }
  if (!dead.empty()) {
    throw UnreachableTarget(fmt::format("target unreachable: {} mode(s) vanish at every instant", dead.size()), dead);
  }

  // Q xi = gap with Q = Lambda^-2 S Lambda^-2, solved through the better
  // scaled S by a thresholded spectral pseudo-inverse.
  const Eigen::MatrixXd Q = observation_gram(plan, table, basis);
  const Eigen::MatrixXd S = lambda_sq.matrix().asDiagonal() * Q * lambda_sq.matrix().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("control Gram eigensolve failed");
  const double cutoff = 1e-14 * eig.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = eig.eigenvalues();
  for (int k = 0; k < K; ++k) inv[k] = inv[k] > cutoff ? 1.0 / inv[k] : 0.0;
  const Eigen::VectorXd scaled_gap = (lambda_sq * gap.array()).matrix();
  const Eigen::VectorXd eta = eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * scaled_gap);
  const Eigen::VectorXd xi = (lambda_sq * eta.array()).matrix();

  ImpulseControl out{horizon, {}, SpectralField::zero(basis), SpectralField::zero(basis), 0.0, 0.0};
  Eigen::VectorXd delivered = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd amounts(K, m);
  std::vector<double> jump_times;
  for (int j = 0; j < m; ++j) {
    const Eigen::MatrixXd G = overlap_matrix(basis, plan[j].region);
    Eigen::VectorXd c = table.col(j).cwiseProduct(xi);
    const Eigen::VectorXd projected = G * c;  // <chi_j u_j, e_k>
    amounts.col(j) = projected;
    delivered += table.col(j).cwiseProduct(projected);
    out.control_norm += c.dot(projected);
    out.controls.push_back(std::move(c));
    jump_times.push_back(horizon - plan[j].time);
  }
  out.control_norm = std::sqrt(std::max(0.0, out.control_norm));
  out.predicted = SpectralField(basis, free_state.coeffs() + delivered);

  const double target_norm = y1.coeffs().norm();
  const double denom = target_norm > 0.0 ? target_norm : 1.0;
  const double predicted_error = (out.predicted.coeffs() - y1.coeffs()).norm() / denom;
  if (predicted_error > 1e-8) {
    std::vector<int> offending;
    const Eigen::VectorXd miss = out.predicted.coeffs() - y1.coeffs();
    for (int k = 0; k < K; ++k) {
      if (std::abs(miss[k]) > 1e-8 * denom) offending.push_back(k + 1);
    }
    throw UnreachableTarget(fmt::format("target unreachable: modal residual {:.3e}", predicted_error), offending);
  }

  int steps = simulation_steps;
  if (steps <= 0) {
    const ModalOptions& opts = evaluator.options();
    steps = std::max(opts.min_steps,
                     static_cast<int>(std::ceil(horizon * basis.eigenvalues()[K - 1] / opts.max_step_lambda)));
  }
  const std::vector<double> lambdas(basis.eigenvalues().data(), basis.eigenvalues().data() + K);
  const Eigen::VectorXd final_state =
      simulate_controlled_modes(lambdas, evaluator.kernel(), y0.coeffs(), jump_times, amounts, horizon, steps);
  out.simulated = SpectralField(basis, final_state);
  out.relative_error = (final_state - y1.coeffs()).norm() / denom;
  return out;
}

}  // namespace memobs
