#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memobs/errors.hpp"
#include "memobs/evolution.hpp"
#include "memobs/sampling.hpp"
#include "memobs/spectral.hpp"

namespace memobs {

struct ModeWitness {
  int k;
  int instant;   // first j with |x_k(t_j)| above tolerance, -1 if none
  double value;  // x_k(t_instant), or the largest |x_k(t_j)| on failure
  double scale;  // sup of |x_k| over [0, max t_j]
};

/// Finite-K backward-uniqueness certificate: every retained mode is
/// nonzero at some instant.
struct Certificate {
  std::vector<ModeWitness> modes;
  std::vector<int> failing_modes;
  double tolerance = 0.0;
  bool certified() const { return failing_modes.empty(); }
};

/// tol is relative to sup_{[0, max t_j]} |x_k|.
Certificate backward_uniqueness_certificate(std::span<const double> times, const ModalEvaluator& evaluator,
                                            const SpectralBasis& basis, double tol = 1e-10);

inline constexpr const char* kNoiseGenerator = "mt19937_64/std::normal_distribution";

struct ObservationBlock {
  double time;
  std::vector<double> xs;
  std::vector<double> values;
};

struct ObservationData {
  SamplingPlan plan;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string generator = kNoiseGenerator;
  std::vector<ObservationBlock> blocks;
};

/// Snapshots of y(t_j) on uniform grids over each region (both endpoints of
/// every interval included), plus seeded Gaussian noise drawn in block order.
ObservationData simulate_observations(const SpectralField& y0, const SamplingPlan& plan,
                                      const ModalEvaluator& evaluator, int samples_per_unit, double sigma,
                                      std::uint64_t seed);

struct Reconstruction {
  SpectralField field;
  double regularization;
  double condition_number;  // of the regularized system in H^-4 scaling
  double residual_norm;     // quadrature norm of model minus data
};

/// Tikhonov least squares with an H^-4 penalty, solved in the scaled unknowns
/// b = Lambda^-2 a. At reg = 0 a singular system throws NumericalError.
Reconstruction reconstruct_initial(const ObservationData& data, const SamplingPlan& plan,
                                   const ModalEvaluator& evaluator, const SpectralBasis& basis, double reg);

class UnreachableTarget : public NumericalError {
 public:
  UnreachableTarget(const std::string& what, std::vector<int> modes)
      : NumericalError(what), modes_(std::move(modes)) {}
  const std::vector<int>& modes() const { return modes_; }

 private:
  std::vector<int> modes_;
};

/// Matrix of the map (c_1..c_m) -> sum_j D_j G_j c_j composed with its
/// L^2(omega_j) adjoint; equal to the observation Gram by duality.
Eigen::MatrixXd control_gram(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                             const SpectralBasis& basis);

struct Jump {
  double time;
  double amount;
};

/// Controlled modal system: the Volterra march on segments split at the jump
/// times, with z(tau+) = z(tau-) + amount, Richardson-combined over `steps`
/// and 2 * `steps`. All modes advance together so the kernel is evaluated
/// once per node pair. amounts(k, j) is the jump of mode k at jump_times[j].
/// Returns z_k(horizon).
Eigen::VectorXd simulate_controlled_modes(std::span<const double> lambdas, const MemoryKernel& kernel,
                                          const Eigen::VectorXd& initial, std::span<const double> jump_times,
                                          const Eigen::MatrixXd& amounts, double horizon, int steps);

double simulate_controlled_mode(double lambda, const MemoryKernel& kernel, double initial,
                                std::span<const Jump> jumps, double horizon, int steps);

struct ImpulseControl {
  double horizon = 0.0;
  /// c_j: coefficients of u_j; the impulse at T - t_j is chi_{omega_j} u_j.
  std::vector<Eigen::VectorXd> controls;
  SpectralField predicted;  // modal prediction of y(T)
  SpectralField simulated;  // forward simulation with jump conditions
  double relative_error = 0.0;  // ||simulated - target|| / ||target|| (L^2)
  double control_norm = 0.0;    // sqrt(sum_j ||chi_j u_j||^2)
};

/// Minimum-norm impulse controls steering y0 to y1 at time T.
ImpulseControl impulse_control(const SpectralField& y0, const SpectralField& y1, const SamplingPlan& plan,
                               double horizon, const ModalEvaluator& evaluator, int simulation_steps = 0);

}  // namespace memobs
