#include "memobs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include "memobs/errors.hpp"

namespace memobs {

struct TabulatedKernel::Spline {
  gsl_spline* handle = nullptr;
  ~Spline() { gsl_spline_free(handle); }
};

TabulatedKernel::TabulatedKernel(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) {
    throw ValidationError("tabulated kernel: times and values differ in length");
  }
  if (times_.size() < 3) throw ValidationError("tabulated kernel needs at least 3 samples");
  if (times_.front() > 0.0) throw ValidationError("tabulated kernel must start at t = 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw ValidationError("tabulated kernel times must increase strictly");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("tabulated kernel values must be finite");
  }
  static std::once_flag gsl_quiet;
  std::call_once(gsl_quiet, [] { gsl_set_error_handler_off(); });
  auto spline = std::make_shared<Spline>();
  spline->handle = gsl_spline_alloc(gsl_interp_cspline, times_.size());
  if (spline->handle == nullptr ||
      gsl_spline_init(spline->handle, times_.data(), values_.data(), times_.size()) != GSL_SUCCESS) {
    throw NumericalError("tabulated kernel: spline construction failed");
  }
  spline_ = std::move(spline);
}

double TabulatedKernel::operator()(double t) const {
  if (t < times_.front() || t > times_.back()) {
    throw std::out_of_range(
        fmt::format("tabulated kernel evaluated at t = {} outside [{}, {}]", t, times_.front(), times_.back()));
  }
  // A null accelerator keeps evaluation reentrant.
  return gsl_spline_eval(spline_->handle, t, nullptr);
}

MemoryKernel::MemoryKernel(Variant v) : kernel_(std::move(v)) {
  if (const auto* e = std::get_if<ExponentialKernel>(&kernel_)) {
    if (!(e->c > 0.0) || !std::isfinite(e->c) || !std::isfinite(e->alpha)) {
      throw ValidationError(fmt::format("exponential kernel needs finite c > 0 and alpha, got c = {}", e->c));
    }
  }
  if (const auto* k = std::get_if<ConstantKernel>(&kernel_)) {
    if (!std::isfinite(k->value)) throw ValidationError("constant kernel value must be finite");
  }
}

MemoryKernel MemoryKernel::exponential(double c, double alpha) { return {ExponentialKernel{c, alpha}}; }

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

double MemoryKernel::operator()(double t) const {
  if (t < 0.0) throw std::out_of_range(fmt::format("kernel evaluated at negative time {}", t));
  return std::visit(Overloaded{
                        [](const ZeroKernel&) { return 0.0; },
                        [](const ConstantKernel& k) { return k.value; },
                        [t](const LinearKernel&) { return t; },
                        [t](const ExponentialKernel& k) { return k.c * std::exp(k.alpha * t); },
                        [t](const TabulatedKernel& k) { return k(t); },
                    },
                    kernel_);
}

std::string_view MemoryKernel::kind() const {
  return std::visit(Overloaded{
                        [](const ZeroKernel&) { return std::string_view("zero"); },
                        [](const ConstantKernel&) { return std::string_view("constant"); },
                        [](const LinearKernel&) { return std::string_view("linear"); },
                        [](const ExponentialKernel&) { return std::string_view("exponential"); },
                        [](const TabulatedKernel&) { return std::string_view("tabulated"); },
                    },
                    kernel_);
}

std::optional<double> MemoryKernel::horizon() const {
  if (const auto* k = std::get_if<TabulatedKernel>(&kernel_)) return k->t_max();
  return std::nullopt;
}

std::optional<ExponentialKernel> MemoryKernel::exponential_form() const {
  if (const auto* e = std::get_if<ExponentialKernel>(&kernel_)) return *e;
  if (const auto* k = std::get_if<ConstantKernel>(&kernel_)) return ExponentialKernel{k->value, 0.0};
  return std::nullopt;
}

double eval_kernel(const MemoryKernel& kernel, double t) { return kernel(t); }

UniformGrid UniformGrid::over(double horizon, int intervals) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError(fmt::format("grid horizon must be positive, got {}", horizon));
  }
  if (intervals < 1) throw ValidationError(fmt::format("grid needs at least one interval, got {}", intervals));
  return {horizon / intervals, intervals};
}

std::vector<double> negated_samples(const MemoryKernel& kernel, const UniformGrid& grid) {
  std::vector<double> m(grid.points());
  for (int i = 0; i < grid.points(); ++i) m[i] = -kernel(grid.at(i));
  return m;
}

namespace {

inline double convolve_at(std::span<const double> f, std::span<const double> g, double step, int n) {
  if (n == 0) return 0.0;
  double acc = 0.5 * (f[n] * g[0] + f[0] * g[n]);
  for (int i = 1; i < n; ++i) acc += f[n - i] * g[i];
  return step * acc;
}

void check_conv_inputs(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size()) throw ValidationError("convolution operands differ in length");
}

}  // namespace

std::vector<double> convolve_trapezoid(std::span<const double> f, std::span<const double> g, double step) {
  check_conv_inputs(f, g);
  const int n = static_cast<int>(f.size());
  std::vector<double> out(n);
  // Cost grows with n; interleaved chunks balance the triangle.
#pragma omp parallel for schedule(static, 16)
  for (int i = 0; i < n; ++i) out[i] = convolve_at(f, g, step, i);
  return out;
}

namespace serial {

std::vector<double> convolve_trapezoid(std::span<const double> f, std::span<const double> g, double step) {
  check_conv_inputs(f, g);
  const int n = static_cast<int>(f.size());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = convolve_at(f, g, step, i);
  return out;
}

}  // namespace serial

GridFunction convolution_power(const MemoryKernel& kernel, int j, const UniformGrid& grid) {
  if (j < 1) throw ValidationError(fmt::format("convolution power needs j >= 1, got {}", j));
  if (!(grid.step > 0.0) || grid.intervals < 1) throw ValidationError("invalid grid");
  const std::vector<double> minus_m = negated_samples(kernel, grid);
  std::vector<double> power = minus_m;
  for (int i = 1; i < j; ++i) power = convolve_trapezoid(minus_m, power, grid.step);
  return {grid, std::move(power)};
}

KernelSeries::KernelSeries(UniformGrid grid, std::vector<std::vector<double>> powers, bool converged,
                           double last_term_sup)
    : grid_(grid), powers_(std::move(powers)), converged_(converged), last_term_sup_(last_term_sup) {}

double KernelSeries::operator()(int it, int is) const {
  if (is < 0 || is > it || it > grid_.intervals) {
    throw ValidationError(fmt::format("kernel series index ({}, {}) outside t >= s on the grid", it, is));
  }
  const double s = grid_.at(is);
  const int lag = it - is;
  double coef = 1.0;
  double total = 0.0;
  for (int j = 1; j <= terms(); ++j) {
    coef *= s / j;
    total += coef * powers_[j - 1][lag];
  }
  return total;
}

Eigen::MatrixXd KernelSeries::dense() const {
  const int n = grid_.points();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(static, 8)
  for (int it = 0; it < n; ++it) {
    for (int is = 0; is <= it; ++is) K(it, is) = (*this)(it, is);
  }
  return K;
}

KernelSeries kernel_series_K(const MemoryKernel& kernel, const UniformGrid& grid, double tol) {
  if (!(tol > 0.0)) throw ValidationError(fmt::format("series tolerance must be positive, got {}", tol));
  if (!(grid.step > 0.0) || grid.intervals < 1) throw ValidationError("invalid grid");
  const int n = grid.points();
  const std::vector<double> minus_m = negated_samples(kernel, grid);
  std::vector<std::vector<double>> powers;
  std::vector<double> power = minus_m;
  double term_sup = 0.0;
  for (int j = 1; j <= kMaxSeriesTerms; ++j) {
    if (j > 1) power = convolve_trapezoid(minus_m, power, grid.step);
    // sup over t >= s of s^j/j! |P_j(t - s)|: for lag m the largest s is t_n - t_m
    term_sup = 0.0;
    for (int m = 0; m < n; ++m) {
      const double s_max = grid.at(grid.intervals - m);
      double coef = 1.0;
      for (int i = 1; i <= j; ++i) coef *= s_max / i;
      term_sup = std::max(term_sup, coef * std::abs(power[m]));
    }
    if (!std::isfinite(term_sup)) break;
    powers.push_back(power);
    if (term_sup < tol) return {grid, std::move(powers), true, term_sup};
  }
  return {grid, std::move(powers), false, term_sup};
}

}  // namespace memobs
