#include "memobs/modal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <unsupported/Eigen/Polynomials>

#include "memobs/errors.hpp"

namespace memobs {

ModalTrajectory solve_modal_volterra(double lambda, const MemoryKernel& kernel, double horizon, int steps) {
  if (!(lambda > 0.0)) throw ValidationError(fmt::format("eigenvalue must be positive, got {}", lambda));
  if (steps < 8) throw ValidationError(fmt::format("need at least 8 steps, got {}", steps));
  const UniformGrid grid = UniformGrid::over(horizon, steps);
  const double h = grid.step;
  if (h * lambda > 2.0) {
    throw ValidationError(fmt::format("step {} too large for lambda = {} (need h lambda <= 2)", h, lambda));
  }
  const int n = grid.points();
  std::vector<double> m(n);
  const bool memoryless = kernel.is_zero();
  if (!memoryless) {
    for (int i = 0; i < n; ++i) m[i] = kernel(grid.at(i));
  }
  const double denom = 1.0 + 0.5 * h * lambda + 0.25 * h * h * m[0];
  if (std::abs(denom) < 1e-12) throw NumericalError("implicit trapezoid step is singular");

  std::vector<double> x(n);
  x[0] = 1.0;
  double memory_now = 0.0;  // trapezoid of int_0^{t_i} M(t_i - s) x(s) ds
  for (int i = 0; i + 1 < n; ++i) {
    // known part of the memory integral at t_{i+1}: all history except x_{i+1}
    double known = 0.0;
    if (!memoryless) {
      known = 0.5 * m[i + 1] * x[0];
      for (int l = 1; l <= i; ++l) known += m[i + 1 - l] * x[l];
      known *= h;
    }
    x[i + 1] = (x[i] * (1.0 - 0.5 * h * lambda) - 0.5 * h * (memory_now + known)) / denom;
    memory_now = known + 0.5 * h * m[0] * x[i + 1];
  }
  return {lambda, grid, std::move(x)};
}

double exponential_kernel_mode(double lambda, double c, double alpha, double t) {
  // Shifted roots u = w - alpha solve u^2 + (lambda + alpha) u + c = 0, and
  // x(t) = [u+ e^{w+ t} - u- e^{w- t}] / (u+ - u-).
  const double b = lambda + alpha;
  const double disc = b * b - 4.0 * c;
  const double disc_tol = 1e-12 * std::max({1.0, b * b, 4.0 * std::abs(c)});
  if (std::abs(disc) <= disc_tol) {
    return (1.0 - 0.5 * b * t) * std::exp(-0.5 * (lambda - alpha) * t);
  }
  using C = std::complex<double>;
  const C root = std::sqrt(C(disc, 0.0));
  // q is the root of larger magnitude; the other follows from u+ u- = c.
  const double sgn = b >= 0.0 ? 1.0 : -1.0;
  const C q = -0.5 * (b + sgn * root);
  const C other = (q == C(0.0)) ? C(0.0) : C(c) / q;
  const C u_plus = b >= 0.0 ? other : q;
  const C u_minus = b >= 0.0 ? q : other;
  const C value = (u_plus * std::exp((u_plus + alpha) * t) - u_minus * std::exp((u_minus + alpha) * t)) / root;
  if (std::abs(value.imag()) > 1e-12 * std::max(1.0, std::abs(value.real()))) {
    throw NumericalError(fmt::format("closed form left an imaginary residual {}", value.imag()));
  }
  return value.real();
}

double closed_form_exp(double lambda, double c, double alpha, double t) {
  if (!(c > 0.0)) throw ValidationError(fmt::format("closed form needs c > 0, got {}", c));
  if (t < 0.0) throw ValidationError("closed form needs t >= 0");
  return exponential_kernel_mode(lambda, c, alpha, t);
}

double series_solution(double lambda, const KernelSeries& series, int it) {
  if (!series.converged()) {
    throw NumericalError(fmt::format("kernel series did not reach tolerance in {} terms", series.terms()));
  }
  const UniformGrid& grid = series.grid();
  if (it < 0 || it > grid.intervals) throw ValidationError("series evaluation index outside the grid");
  const double t = grid.at(it);
  double integral = 0.0;
  if (it > 0) {
    // K_M(t, 0) = 0, so only the right endpoint carries the half weight.
    for (int is = 1; is < it; ++is) integral += series(it, is) * std::exp(-lambda * grid.at(is));
    integral += 0.5 * series(it, it) * std::exp(-lambda * t);
    integral *= grid.step;
  }
  return std::exp(-lambda * t) + integral;
}

double series_solution(double lambda, const MemoryKernel& kernel, double t, double tol, int steps) {
  if (t == 0.0) return 1.0;
  const KernelSeries series = kernel_series_K(kernel, UniformGrid::over(t, steps), tol);
  return series_solution(lambda, series, steps);
}

std::string_view to_string(ZeroKind kind) {
  return kind == ZeroKind::SignChange ? "sign-change" : "suspected-tangential";
}

std::vector<double> NodalSet::times() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const NodalPoint& p : points) out.push_back(p.time);
  return out;
}

namespace {

// Lagrange interpolant through up to six grid values around the bracket [i, i+1].
double local_interpolant(const std::vector<double>& x, double step, int i, double t) {
  const int n = static_cast<int>(x.size());
  int first = std::clamp(i - 2, 0, std::max(0, n - 6));
  const int last = std::min(n - 1, first + 5);
  double total = 0.0;
  for (int a = first; a <= last; ++a) {
    double w = 1.0;
    for (int b = first; b <= last; ++b) {
      if (b != a) w *= (t - step * b) / (step * (a - b));
    }
    total += w * x[a];
  }
  return total;
}

}  // namespace

NodalSet nodal_set_numeric(double lambda, const MemoryKernel& kernel, double horizon, int resolution) {
  if (resolution < 64) throw ValidationError(fmt::format("resolution must be at least 64, got {}", resolution));
  // Stability needs h lambda <= 2 on the coarse grid; stay well inside it.
  const int steps = std::max(resolution, static_cast<int>(std::ceil(2.0 * horizon * lambda)));
  const ModalTrajectory coarse = solve_modal_volterra(lambda, kernel, horizon, steps);
  const ModalTrajectory fine = solve_modal_volterra(lambda, kernel, horizon, 2 * steps);
  const double h = coarse.grid.step;
  std::vector<double> x(coarse.values.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (4.0 * fine.values[2 * i] - coarse.values[i]) / 3.0;

  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  const double tangential_tol = 1e-9 * scale;

  NodalSet set{lambda, horizon, {}};
  const int n = static_cast<int>(x.size());
  for (int i = 1; i < n; ++i) {
    const double a = x[i - 1];
    const double b = x[i];
    if (b == 0.0) {
      if (i + 1 < n && a * x[i + 1] < 0.0) set.points.push_back({coarse.time(i), ZeroKind::SignChange});
      continue;
    }
    if (a * b < 0.0) {
      double lo = coarse.time(i - 1);
      double hi = coarse.time(i);
      const bool rising = b > 0.0;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const double v = local_interpolant(x, h, i - 1, mid);
        if ((v > 0.0) == rising) hi = mid; else lo = mid;
      }
      set.points.push_back({0.5 * (lo + hi), ZeroKind::SignChange});
      continue;
    }
    // local minimum of |x| below threshold without a sign change
    if (i + 1 < n && std::abs(b) < tangential_tol && std::abs(b) <= std::abs(a) && std::abs(b) <= std::abs(x[i + 1]) &&
        b * x[i + 1] > 0.0) {
      set.points.push_back({coarse.time(i), ZeroKind::SuspectedTangential});
    }
  }
  return set;
}

NodalSet nodal_set_exp_closed(double lambda, double c, double alpha, double horizon) {
  if (!(c > 0.0)) throw ValidationError(fmt::format("closed nodal set needs c > 0, got {}", c));
  NodalSet set{lambda, horizon, {}};
  const double b = lambda + alpha;
  const double disc = b * b - 4.0 * c;
  const double disc_tol = 1e-12 * std::max({1.0, b * b, 4.0 * c});
  auto keep = [&](double t) {
    if (t > 0.0 && t <= horizon) set.points.push_back({t, ZeroKind::SignChange});
  };
  if (std::abs(disc) <= disc_tol) {
    if (lambda > -alpha) keep(2.0 / b);
  } else if (disc > 0.0) {
    const double root = std::sqrt(disc);
    // shifted roots u = w - alpha; both share the sign of -b since u+ u- = c > 0
    const double q = -0.5 * (b + (b >= 0.0 ? root : -root));
    const double u_plus = b >= 0.0 ? c / q : q;
    const double u_minus = b >= 0.0 ? q : c / q;
    const double ratio = u_minus / u_plus;
    if (ratio > 0.0) keep(std::log(ratio) / root);
  } else {
    const double root = std::sqrt(-disc);
    const double arccot = 0.5 * std::numbers::pi - std::atan(b / root);
    for (int l = 0;; ++l) {
      const double t = 2.0 / root * (arccot + l * std::numbers::pi);
      if (t > horizon) break;
      keep(t);
    }
  }
  return set;
}

double default_nodal_horizon(double lambda, const MemoryKernel& kernel) {
  double horizon = 10.0 / std::min(1.0, lambda);
  if (const auto form = kernel.exponential_form(); form && form->c > 0.0) {
    const double b = lambda + form->alpha;
    const double disc = b * b - 4.0 * form->c;
    // oscillation frequency is sqrt(-disc) / 2
    if (disc < 0.0) horizon = std::max(horizon, 4.0 * 4.0 * std::numbers::pi / std::sqrt(-disc));
  }
  if (const auto limit = kernel.horizon()) horizon = std::min(horizon, *limit);
  return horizon;
}

CubicExponents linear_kernel_exponents(double lambda) {
  Eigen::Vector4d coeffs(1.0, 0.0, lambda, 1.0);  // 1 + 0 r + lambda r^2 + r^3
  Eigen::PolynomialSolver<double, 3> solver(coeffs);
  CubicExponents out{0.0, {0.0, 0.0}};
  bool have_real = false;
  for (const auto& r : solver.roots()) {
    if (std::abs(r.imag()) < 1e-12 * std::max(1.0, std::abs(r))) {
      out.real_root = r.real();
      have_real = true;
    } else if (r.imag() > 0.0) {
      out.complex_root = r;
    }
  }
  if (!have_real || out.complex_root.imag() <= 0.0) {
    throw NumericalError(fmt::format("r^3 + {} r^2 + 1 has no complex pair", lambda));
  }
  return out;
}

}  // namespace memobs
