#pragma once

#include <complex>
#include <string_view>
#include <vector>

#include "memobs/kernels.hpp"

namespace memobs {

/// Samples of the modal solution x' + lambda x + int_0^t M(t-s) x(s) ds = 0,
/// x(0) = 1, on a uniform grid.
struct ModalTrajectory {
  double lambda = 0.0;
  UniformGrid grid;
  std::vector<double> values;

  double time(int i) const { return grid.at(i); }
  double final_value() const { return values.back(); }
};

/// Implicit product-trapezoidal march, second order. Rejects step * lambda > 2.
ModalTrajectory solve_modal_volterra(double lambda, const MemoryKernel& kernel, double horizon, int steps);

/// Closed-form modal solution for M(t) = c exp(alpha t), c > 0.
double closed_form_exp(double lambda, double c, double alpha, double t);

/// Same formula without the sign restriction on c (constants of either sign,
/// and c = 0 for the memoryless case).
double exponential_kernel_mode(double lambda, double c, double alpha, double t);

/// x(t_it) = exp(-lambda t) + trapezoid of K_M(t, s) exp(-lambda s) over [0, t].
/// Throws NumericalError when the series did not converge.
double series_solution(double lambda, const KernelSeries& series, int it);
/// Builds its own series on a grid of `steps` intervals ending at t.
double series_solution(double lambda, const MemoryKernel& kernel, double t, double tol = 1e-12, int steps = 4096);

enum class ZeroKind { SignChange, SuspectedTangential };
std::string_view to_string(ZeroKind kind);

struct NodalPoint {
  double time;
  ZeroKind kind;
};

/// Zeros of one modal solution in (0, horizon], sorted.
struct NodalSet {
  double lambda = 0.0;
  double horizon = 0.0;
  std::vector<NodalPoint> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  std::vector<double> times() const;
};

/// Scans a Richardson-combined pair of Volterra trajectories (resolution and
/// twice the resolution) for sign changes, then bisects each bracket on a
/// local degree-5 interpolant down to 1e-10. Grid points with
/// |x| < 1e-9 max|x| and no sign change are flagged SuspectedTangential.
NodalSet nodal_set_numeric(double lambda, const MemoryKernel& kernel, double horizon, int resolution = 8192);

/// Closed-form nodal set for M(t) = c exp(alpha t).
NodalSet nodal_set_exp_closed(double lambda, double c, double alpha, double horizon);

/// Scan horizon: 10 / min(1, lambda), extended to cover at least four
/// oscillation periods when the exponential discriminant is negative.
double default_nodal_horizon(double lambda, const MemoryKernel& kernel);

/// Roots of r^3 + lambda r^2 + 1 = 0, the characteristic polynomial of the
/// modal equation when M(t) = t.
struct CubicExponents {
  double real_root;
  std::complex<double> complex_root;  // the one with positive imaginary part
  /// real_root - complex_root.real(): zeros solve exp(gap t) = C sin(beta t + phi).
  double gap_exponent() const { return real_root - complex_root.real(); }
};
CubicExponents linear_kernel_exponents(double lambda);

}  // namespace memobs
