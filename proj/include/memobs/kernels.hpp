#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace memobs {

struct ZeroKernel {};
struct ConstantKernel {
  double value = 0.0;
};
/// M(t) = t.
struct LinearKernel {};
/// M(t) = c exp(alpha t), c > 0.
struct ExponentialKernel {
  double c = 1.0;
  double alpha = 0.0;
};

/// Tabulated kernel interpolated by a natural cubic spline (C^2 inside the
/// table). Evaluation outside [times.front(), times.back()] throws.
class TabulatedKernel {
 public:
  TabulatedKernel(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  double t_max() const { return times_.back(); }

 private:
  struct Spline;
  std::vector<double> times_;
  std::vector<double> values_;
  std::shared_ptr<const Spline> spline_;
};

/// The memory kernel M of x' + lambda x + int_0^t M(t - s) x(s) ds = 0.
class MemoryKernel {
 public:
  using Variant = std::variant<ZeroKernel, ConstantKernel, LinearKernel, ExponentialKernel, TabulatedKernel>;

  MemoryKernel() = default;
  MemoryKernel(Variant v);  // NOLINT(google-explicit-constructor)

  static MemoryKernel zero() { return {ZeroKernel{}}; }
  static MemoryKernel constant(double value) { return {ConstantKernel{value}}; }
  static MemoryKernel linear() { return {LinearKernel{}}; }
  static MemoryKernel exponential(double c, double alpha);
  static MemoryKernel tabulated(std::vector<double> times, std::vector<double> values) {
    return {TabulatedKernel(std::move(times), std::move(values))};
  }

  double operator()(double t) const;

  const Variant& variant() const { return kernel_; }
  std::string_view kind() const;
  bool is_zero() const { return std::holds_alternative<ZeroKernel>(kernel_); }
  /// Largest admissible argument (tabulated kernels only).
  std::optional<double> horizon() const;
  /// (c, alpha) with M(t) = c exp(alpha t) when the kernel has that form;
  /// constants map to alpha = 0 with any sign of c.
  std::optional<ExponentialKernel> exponential_form() const;

 private:
  Variant kernel_ = ZeroKernel{};
};

double eval_kernel(const MemoryKernel& kernel, double t);

/// Uniform grid 0 = t_0 < ... < t_n = n * step.
struct UniformGrid {
  double step = 0.0;
  int intervals = 0;

  static UniformGrid over(double horizon, int intervals);
  double horizon() const { return step * intervals; }
  double at(int i) const { return step * i; }
  int points() const { return intervals + 1; }
};

/// Samples of a one-argument function on a uniform grid.
struct GridFunction {
  UniformGrid grid;
  std::vector<double> values;
};

/// samples of -M at grid points
std::vector<double> negated_samples(const MemoryKernel& kernel, const UniformGrid& grid);

/// Trapezoidal product convolution (f * g)(t_n) = int_0^{t_n} f(t_n - u) g(u) du
/// for all grid points. Parallel over output points; each output is summed in
/// a fixed order, so results do not depend on the thread count.
std::vector<double> convolve_trapezoid(std::span<const double> f, std::span<const double> g, double step);

/// (-M)^{*j} sampled on the grid.
GridFunction convolution_power(const MemoryKernel& kernel, int j, const UniformGrid& grid);

/// Partial sums of K_M(t, s) = sum_j s^j / j! (-M)^{*j}(t - s), t >= s,
/// stored as the convolution powers; samples are produced on demand.
class KernelSeries {
 public:
  KernelSeries(UniformGrid grid, std::vector<std::vector<double>> powers, bool converged, double last_term_sup);

  const UniformGrid& grid() const { return grid_; }
  int terms() const { return static_cast<int>(powers_.size()); }
  bool converged() const { return converged_; }
  double last_term_sup() const { return last_term_sup_; }
  const std::vector<double>& power(int j) const { return powers_.at(j - 1); }

  /// K_M(t_it, s_is); requires 0 <= is <= it.
  double operator()(int it, int is) const;
  /// Lower-triangular matrix with rows t and columns s.
  Eigen::MatrixXd dense() const;

 private:
  UniformGrid grid_;
  std::vector<std::vector<double>> powers_;
  bool converged_;
  double last_term_sup_;
};

inline constexpr int kMaxSeriesTerms = 64;

KernelSeries kernel_series_K(const MemoryKernel& kernel, const UniformGrid& grid, double tol = 1e-12);

namespace serial {

/// Single-threaded reference for convolve_trapezoid.
std::vector<double> convolve_trapezoid(std::span<const double> f, std::span<const double> g, double step);

}  // namespace serial

}  // namespace memobs
