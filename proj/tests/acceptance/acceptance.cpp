// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "memobs/evolution.hpp"
#include "memobs/inverse.hpp"
#include "memobs/io.hpp"
#include "memobs/kernels.hpp"
#include "memobs/modal.hpp"
#include "memobs/sampling.hpp"
#include "memobs/spectral.hpp"

#ifndef MEMOBS_CLI_PATH
#error "MEMOBS_CLI_PATH must name the memobs executable"
#endif

namespace fs = std::filesystem;
using namespace memobs;
using memobs::io::Json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// x(t) for M(t) = t from the characteristic cubic r^3 + lambda r^2 + 1 = 0.
// Real root by bisection, the pair from the deflated quadratic, amplitudes
// from x(0) = 1, x'(0) = -lambda, x''(0) = lambda^2.
double linear_kernel_oracle(double lambda, double t) {
  auto f = [&](double r) { return r * r * r + lambda * r * r + 1.0; };
  double lo = -lambda - 1.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const double r1 = 0.5 * (lo + hi);
  const double p = lambda + r1, q = -1.0 / r1;
  const std::complex<double> root = std::sqrt(std::complex<double>(p * p - 4.0 * q));
  const std::complex<double> r2 = 0.5 * (-p + root), r3 = 0.5 * (-p - root);
  Eigen::Matrix3cd V;
  V << 1.0, 1.0, 1.0, r1, r2, r3, r1 * r1, r2 * r2, r3 * r3;
  const Eigen::Vector3cd coef = V.fullPivLu().solve(Eigen::Vector3cd(1.0, -lambda, lambda * lambda));
  const std::complex<double> x = coef[0] * std::exp(r1 * t) + coef[1] * std::exp(r2 * t) + coef[2] * std::exp(r3 * t);
  return x.real();
}

// Two-root formula for M(t) = c e^{alpha t}, written out directly.
double exponential_oracle(double lambda, double c, double alpha, double t) {
  if (c == 0.0) return std::exp(-lambda * t);
  const std::complex<double> b = lambda + alpha;
  const std::complex<double> root = std::sqrt(b * b - 4.0 * c);
  const std::complex<double> up = 0.5 * (-b + root), um = 0.5 * (-b - root);
  const std::complex<double> x = (up * std::exp((up + alpha) * t) - um * std::exp((um + alpha) * t)) / (up - um);
  return x.real();
}

Outcome oracle_triangle() {
  struct Case {
    std::string name;
    MemoryKernel kernel;
    std::function<double(double, double)> closed;
  };
  const std::vector<Case> cases{
      {"zero", MemoryKernel::zero(), [](double l, double t) { return std::exp(-l * t); }},
      {"constant(-1)", MemoryKernel::constant(-1.0),
       [](double l, double t) { return exponential_oracle(l, -1.0, 0.0, t); }},
      {"exp(4,0)", MemoryKernel::exponential(4.0, 0.0),
       [](double l, double t) { return exponential_oracle(l, 4.0, 0.0, t); }},
      {"exp(2,-1)", MemoryKernel::exponential(2.0, -1.0),
       [](double l, double t) { return exponential_oracle(l, 2.0, -1.0, t); }},
      {"linear", MemoryKernel::linear(), linear_kernel_oracle},
  };
  const double T = 2.0;
  const int n = 8192;
  const int series_steps = 4096;
  const UniformGrid series_grid = UniformGrid::over(T, series_steps);
  double worst = 0.0;
  std::string worst_case;
  for (const Case& c : cases) {
    const KernelSeries series = kernel_series_K(c.kernel, series_grid, 1e-12);
    if (!series.converged()) return {false, c.name + ": series did not converge"};
    for (double lambda : {1.0, 4.0, 9.0}) {
      const ModalTrajectory v = solve_modal_volterra(lambda, c.kernel, T, n);
      for (int i = 0; i <= 64; ++i) {
        const int iv = i * (n / 64), is = i * (series_steps / 64);
        const double t = v.time(iv);
        const double xv = v.values[iv];
        const double xs = series_solution(lambda, series, is);
        const double xc = c.closed(lambda, t);
        const double d = std::max({std::abs(xv - xs), std::abs(xv - xc), std::abs(xs - xc)});
        if (d > worst) {
          worst = d;
          worst_case = fmt::format("{} lambda={} t={}", c.name, lambda, t);
        }
      }
    }
  }
  return {worst < 1e-5, fmt::format("max pairwise difference {:.3e} ({})", worst, worst_case)};
}

Outcome nodal_reproduction() {
  const double c = 4.0, alpha = 0.0, T = 10.0;
  const MemoryKernel kernel = MemoryKernel::exponential(c, alpha);
  double worst_zero = 0.0, worst_spacing = 0.0;
  std::string counts;
  for (double lambda : {1.0, 4.0, 9.0}) {
    const NodalSet numeric = nodal_set_numeric(lambda, kernel, T);
    const NodalSet closed = nodal_set_exp_closed(lambda, c, alpha, T);
    counts += fmt::format(" lambda={}:{}", lambda, numeric.size());
    if (numeric.size() != closed.size() || numeric.empty()) {
      return {false, fmt::format("lambda={}: {} numeric zeros vs {} closed-form", lambda, numeric.size(),
                                 closed.size())};
    }
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      worst_zero = std::max(worst_zero, std::abs(numeric.points[i].time - closed.points[i].time));
    }
    const double s = (lambda + alpha) * (lambda + alpha) - 4.0 * c;
    if (s < 0.0) {
      const double spacing = kPi / std::sqrt(c - (lambda + alpha) * (lambda + alpha) / 4.0);
      for (std::size_t i = 1; i < numeric.size(); ++i) {
        const double gap = numeric.points[i].time - numeric.points[i - 1].time;
        worst_spacing = std::max(worst_spacing, std::abs(gap - spacing));
      }
    }
  }
  const bool ok = worst_zero < 1e-8 && worst_spacing < 1e-8;
  return {ok, fmt::format("zeros{}; max zero error {:.3e}, max spacing error {:.3e}", counts, worst_zero,
                          worst_spacing)};
}

Outcome nonpositive_kernels() {
  std::vector<double> times, values;
  for (int i = 0; i <= 240; ++i) {
    const double t = 12.0 * i / 240;
    times.push_back(t);
    values.push_back(-0.5 * std::exp(-t) * (1.0 + std::cos(t) * std::cos(t)));
  }
  const std::vector<std::pair<std::string, MemoryKernel>> kernels{
      {"constant(-1)", MemoryKernel::constant(-1.0)},
      {"tabulated", MemoryKernel::tabulated(times, values)}};
  double min_k = HUGE_VAL;
  std::size_t zeros = 0;
  for (const auto& [name, kernel] : kernels) {
    const KernelSeries series = kernel_series_K(kernel, UniformGrid::over(10.0, 1000), 1e-12);
    if (!series.converged()) return {false, name + ": series did not converge"};
    const Eigen::MatrixXd K = series.dense();
    for (int i = 0; i < K.rows(); ++i) {
      for (int j = 0; j <= i; ++j) min_k = std::min(min_k, K(i, j));
    }
    for (double lambda : {1.0, 4.0, 9.0}) zeros += nodal_set_numeric(lambda, kernel, 10.0).size();
  }
  return {min_k >= -1e-12 && zeros == 0, fmt::format("min K_M {:.3e}, total zeros {}", min_k, zeros)};
}

Outcome decomposition() {
  const SpectralBasis basis(kPi, 32);
  const ModalEvaluator evaluator(MemoryKernel::exponential(1.0, 0.0));
  const ResidualTable res = decomposition_residual(basis, evaluator, 1.0, 1, 32);
  const ResidualRow& last = res.rows.back();
  const double scaled = last.lambda * last.lambda * last.x;
  const bool ok = res.slope <= -0.8 && std::abs(scaled + 1.0) <= 0.05;
  return {ok, fmt::format("slope {:.4f}, lambda_32^2 x_32(1) = {:.6f}", res.slope, scaled)};
}

SamplingPlan two_sided_plan(double L) {
  return SamplingPlan({{0.5, ObservationRegion({{0.0, 0.6 * L}})}, {0.8, ObservationRegion({{0.4 * L, L}})}});
}

Outcome observability_constants_check() {
  const double L = kPi;
  const SamplingPlan plan = two_sided_plan(L);
  if (check_geometric_condition(plan, MemoryKernel::exponential(1.0, 0.0), L).verdict != CoverageVerdict::Strong) {
    return {false, "plan is not strongly covering"};
  }
  const ModalEvaluator with_memory(MemoryKernel::exponential(1.0, 0.0));
  const double c32 = observability_constants(plan, with_memory, SpectralBasis(L, 32)).c_min;
  const double c64 = observability_constants(plan, with_memory, SpectralBasis(L, 64)).c_min;
  const ModalEvaluator memoryless(MemoryKernel::zero());
  const double z8 = observability_constants(plan, memoryless, SpectralBasis(L, 8)).c_min;
  const double z64 = observability_constants(plan, memoryless, SpectralBasis(L, 64)).c_min;
  const double change = std::abs(c64 - c32) / c32;
  const double ratio = z64 / z8;
  return {change < 0.1 && ratio < 1e-6,
          fmt::format("exp: c_min(32) {:.6f}, c_min(64) {:.6f}, change {:.2f}%; zero: c_min(64)/c_min(8) {:.3e}",
                      c32, c64, 100 * change, ratio)};
}

Outcome probe_necessity() {
  const double L = 1.0;
  const SamplingPlan plan({{0.5, ObservationRegion({{0.0, 0.3}})}, {0.8, ObservationRegion({{0.7, 1.0}})}});
  const MemoryKernel kernel = MemoryKernel::exponential(1.0, 0.0);
  const GeometricCheck geo = check_geometric_condition(plan, kernel, L);
  if (geo.verdict != CoverageVerdict::Fail || geo.uncovered.empty()) return {false, "plan is not a Fail plan"};
  const Interval gap = geo.uncovered.front();
  const double x0 = 0.5 * (gap.lo + gap.hi);
  const SpectralBasis basis(L, 1024);
  const ModalEvaluator evaluator(kernel);
  const std::vector<double> radii{0.1, 0.05, 0.025, 0.0125};
  const auto rows = probe_upper_bound(plan, evaluator, basis, x0, radii);
  const auto ref = probe_upper_bound(plan, evaluator, basis, 0.15, radii);
  bool monotone = true;
  std::string ratios;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ratios += fmt::format(" {:.4f}", rows[i].ratio);
    if (i > 0 && rows[i].ratio > 1.05 * rows[i - 1].ratio) monotone = false;
  }
  const double reference = ref.back().ratio;
  const bool small = rows.back().ratio < 0.1 * reference;
  return {monotone && small, fmt::format("x0 = {} ratios{}; covered reference {:.4f}", x0, ratios, reference)};
}

Outcome backward_uniqueness() {
  const double c = 4.0;
  const ModalEvaluator evaluator(MemoryKernel::exponential(c, 0.0));
  const SpectralBasis basis(kPi, 64);
  const std::vector<double> pair{0.4, 0.4 + 0.5 * kPi / std::sqrt(c)};
  const Certificate two = backward_uniqueness_certificate(pair, evaluator, basis);
  const NodalSet zeros = nodal_set_exp_closed(1.0, c, 0.0, 10.0);
  if (zeros.empty()) return {false, "mode 1 has no closed-form zero"};
  const std::vector<double> single{zeros.points.front().time};
  const Certificate one = backward_uniqueness_certificate(single, evaluator, basis);
  const bool ok = two.certified() && one.failing_modes == std::vector<int>{1};
  std::string fails;
  for (int k : one.failing_modes) fails += fmt::format(" {}", k);
  return {ok, fmt::format("two instants certified: {}; single instant t = {:.12f} fails at:{}",
                          two.certified() ? "yes" : "no", single.front(), fails)};
}

Outcome reconstruction_round_trip() {
  const double L = kPi;
  const SpectralBasis basis(L, 32);
  const SamplingPlan plan = two_sided_plan(L);
  const ModalEvaluator evaluator(MemoryKernel::exponential(1.0, 0.0));
  Eigen::VectorXd a(32);
  for (int k = 0; k < 32; ++k) a[k] = (k % 2 ? -1.0 : 1.0) / (k + 1);
  const SpectralField y0(basis, a);
  const double norm = y0.hs_norm(-4);
  const ObservationData clean = simulate_observations(y0, plan, evaluator, 256, 0.0, 7);
  const double e_clean = (reconstruct_initial(clean, plan, evaluator, basis, 1e-12).field - y0).hs_norm(-4) / norm;
  const ObservationData noisy = simulate_observations(y0, plan, evaluator, 256, 1e-3, 7);
  const double e_noisy = (reconstruct_initial(noisy, plan, evaluator, basis, 1e-6).field - y0).hs_norm(-4) / norm;
  return {e_clean < 1e-6 && e_noisy < 1e-2,
          fmt::format("noiseless relative H^-4 error {:.3e}; sigma = 1e-3 error {:.3e}", e_clean, e_noisy)};
}

Outcome control_closed_loop() {
  const double L = kPi;
  const SpectralBasis basis(L, 16);
  const SamplingPlan plan({{0.3, ObservationRegion({{0.0, 0.6 * L}})}, {0.6, ObservationRegion({{0.4 * L, L}})}});
  const ModalEvaluator evaluator(MemoryKernel::exponential(1.0, 0.0));
  const Eigen::MatrixXd q = observation_gram(plan, evaluator, basis);
  const Eigen::MatrixXd g = control_gram(plan, evaluator, basis);
  const double gram_gap = (g - q).cwiseAbs().maxCoeff() / q.cwiseAbs().maxCoeff();
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(16);
  a0[1] = 0.5;
  const SpectralField y0(basis, a0);
  const SpectralField y1 = SpectralField::mode(basis, 1);
  const ImpulseControl control = impulse_control(y0, y1, plan, 1.0, evaluator);
  return {gram_gap <= 1e-12 && control.relative_error < 1e-6,
          fmt::format("Gram discrepancy {:.3e}; simulated relative error {:.3e}", gram_gap, control.relative_error)};
}

// ---- determinism -------------------------------------------------------------

std::string normalized_artifact(const fs::path& file) {
  const std::string text = io::read_text(file);
  if (file.filename() != "run_metadata.json") return text;
  Json doc = Json::parse(text);
  doc.erase("runtime");
  return io::dump(doc);
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("memobs-acceptance-{}", ::getpid());
  fs::remove_all(root);
  fs::create_directories(root);
  const Json basis{{"L", kPi}, {"K", 16}};
  const Json exp_kernel{{"kind", "exponential"}, {"c", 4.0}, {"alpha", 0.0}};
  const Json plan = io::to_json(two_sided_plan(kPi));
  Json coeffs = Json::array();
  for (int k = 1; k <= 16; ++k) coeffs.push_back(1.0 / (k * k));
  const Json field{{"coeffs", coeffs}};
  const std::vector<std::pair<std::string, Json>> runs{
      {"modal", {{"kernel", {{"kind", "linear"}}}, {"params", {{"lambda", 4.0}, {"T", 2.0}, {"samples", 50}}}}},
      {"nodal", {{"kernel", exp_kernel}, {"params", {{"lambda", 1.0}, {"T", 10.0}}}}},
      {"propagate", {{"basis", basis}, {"kernel", exp_kernel}, {"params", {{"y0", field}, {"t", 0.7}}}}},
      {"residual", {{"basis", basis}, {"kernel", exp_kernel}, {"params", {{"t", 1.0}}}}},
      {"check-plan", {{"basis", basis}, {"kernel", exp_kernel}, {"plan", plan}}},
      {"constants", {{"basis", basis}, {"kernel", exp_kernel}, {"plan", plan},
                     {"params", {{"truncations", {8, 16}}}}}},
      {"probe", {{"basis", {{"L", kPi}, {"K", 128}}}, {"kernel", exp_kernel}, {"plan", plan},
                 {"params", {{"x0", 1.5}, {"radii", {0.2, 0.1}}, {"reference", 0.3}}}}},
      {"certify", {{"basis", basis}, {"kernel", exp_kernel}, {"plan", plan}}},
      {"reconstruct", {{"basis", basis}, {"kernel", exp_kernel}, {"plan", plan},
                       {"params", {{"y0", field}, {"sigma", 1e-3}, {"seed", 11}, {"regularization", {1e-6, 1e-9}}}}}},
      {"control", {{"basis", basis}, {"kernel", exp_kernel}, {"plan", plan},
                   {"params", {{"y0", field}, {"y1", {{"coeffs", Json::array({1.0})}}}, {"T", 1.0}}}}},
  };
  std::size_t compared = 0;
  for (const auto& [command, config] : runs) {
    const fs::path config_path = root / (command + ".json");
    io::write_text(config_path, io::dump(config));
    std::vector<fs::path> outs;
    int attempt = 0;
    for (int threads : {1, 1, 4}) {
      const fs::path out = root / fmt::format("{}-{}", command, attempt++);
      const std::string cmd = fmt::format("'{}' {} --config '{}' --out '{}' --threads {}", MEMOBS_CLI_PATH, command,
                                          config_path.string(), out.string(), threads);
      if (std::system(cmd.c_str()) != 0) return {false, fmt::format("`{}` failed", cmd)};
      outs.push_back(out);
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(outs[0])) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    for (std::size_t r = 1; r < outs.size(); ++r) {
      std::size_t count = 0;
      for ([[maybe_unused]] const auto& entry : fs::directory_iterator(outs[r])) ++count;
      if (count != names.size()) return {false, command + ": artifact sets differ"};
      for (const std::string& name : names) {
        if (normalized_artifact(outs[0] / name) != normalized_artifact(outs[r] / name)) {
          return {false, fmt::format("{}: {} differs between runs", command, name)};
        }
        ++compared;
      }
    }
  }
  fs::remove_all(root);
  return {true, fmt::format("{} commands, {} artifact comparisons (threads 1, 1, 4)", runs.size(), compared)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle triangle (modal)", 30, oracle_triangle},
      {2, "nodal reproduction", 10, nodal_reproduction},
      {3, "non-positive kernels", 10, nonpositive_kernels},
      {4, "decomposition residual", 20, decomposition},
      {5, "observability constants", 60, observability_constants_check},
      {6, "probe necessity", 30, probe_necessity},
      {7, "backward-uniqueness certificate", 20, backward_uniqueness},
      {8, "reconstruction round trip", 60, reconstruction_round_trip},
      {9, "control duality and closed loop", 60, control_closed_loop},
      {10, "determinism", 300, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome{false, ""};
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("exception: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_seconds) {
      outcome.pass = false;
      outcome.detail += fmt::format("; over budget ({:.0f} s)", c.budget_seconds);
    }
    if (!outcome.pass) ++failures;
    std::cout << fmt::format("[{}] AC{} {}: {} ({:.2f} s)", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                             outcome.detail, seconds)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} acceptance criteria passed", criteria.size() - failures, criteria.size())
            << std::endl;
  return failures == 0 ? 0 : 1;
}
