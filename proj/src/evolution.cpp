#include "memobs/evolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>

#include <fmt/format.h>

#include "memobs/errors.hpp"
#include "memobs/io.hpp"
#include "memobs/modal.hpp"

namespace memobs {

std::string_view to_string(ModalMethod method) {
  switch (method) {
    case ModalMethod::Automatic: return "auto";
    case ModalMethod::Volterra: return "volterra";
    case ModalMethod::ClosedForm: return "closed-form";
  }
  return "auto";
}

ModalMethod parse_modal_method(std::string_view name) {
  if (name == "auto") return ModalMethod::Automatic;
  if (name == "volterra") return ModalMethod::Volterra;
  if (name == "closed-form") return ModalMethod::ClosedForm;
  throw ValidationError(fmt::format("unknown modal method '{}' (auto, volterra, closed-form)", name));
}

ModalCache::ModalCache(std::filesystem::path backing) : backing_(std::move(backing)) {}

std::optional<double> ModalCache::find(const std::string& solver_id, double lambda, double t) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(Key{solver_id, lambda, t});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ModalCache::insert(const std::string& solver_id, double lambda, double t, double value) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(Key{solver_id, lambda, t}, value);
}

std::size_t ModalCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void ModalCache::load() {
  if (backing_.empty() || !std::filesystem::exists(backing_)) return;
  const io::Json doc = io::Json::parse(io::read_text(backing_));
  io::require_keys(doc, {"entries"}, "cache");
  std::unique_lock lock(mutex_);
  for (const io::Json& e : doc.at("entries")) {
    entries_.insert_or_assign(
        Key{e.at("solver").get<std::string>(), e.at("lambda").get<double>(), e.at("t").get<double>()},
        e.at("x").get<double>());
  }
}

void ModalCache::save() const {
  if (backing_.empty()) return;
  io::Json doc;
  io::Json list = io::Json::array();
  {
    std::shared_lock lock(mutex_);
    for (const auto& [key, value] : entries_) {
      list.push_back({{"solver", std::get<0>(key)}, {"lambda", std::get<1>(key)}, {"t", std::get<2>(key)}, {"x", value}});
    }
  }
  doc["entries"] = std::move(list);
  io::write_text(backing_, io::dump(doc));
}

ModalEvaluator::ModalEvaluator(MemoryKernel kernel, ModalOptions options, std::shared_ptr<ModalCache> cache)
    : kernel_(std::move(kernel)), options_(options), cache_(std::move(cache)) {
  if (!(options_.max_step_lambda > 0.0) || options_.max_step_lambda > 2.0) {
    throw ValidationError(fmt::format("max_step_lambda must lie in (0, 2], got {}", options_.max_step_lambda));
  }
  if (options_.min_steps < 8) throw ValidationError("min_steps must be at least 8");
  if (kernel_.is_zero()) {
    closed_form_ = ExponentialKernel{0.0, 0.0};
  } else {
    closed_form_ = kernel_.exponential_form();
  }
  if (options_.method == ModalMethod::Volterra) closed_form_.reset();
  if (options_.method == ModalMethod::ClosedForm && !closed_form_) {
    throw ValidationError(fmt::format("no closed form for the {} kernel", kernel_.kind()));
  }
  io::Json id;
  id["kernel"] = io::to_json(kernel_);
  id["method"] = closed_form_ ? "closed-form" : "volterra";
  if (!closed_form_) {
    id["max_step_lambda"] = options_.max_step_lambda;
    id["min_steps"] = options_.min_steps;
  }
  solver_id_ = io::sha256_hex(io::dump(id));
}

int ModalEvaluator::volterra_steps(double lambda, double t) const {
  const double needed = std::ceil(t * lambda / options_.max_step_lambda);
  return std::max(options_.min_steps, static_cast<int>(std::min(needed, 1e9)));
}

double ModalEvaluator::compute(double lambda, double t) const {
  if (t == 0.0) return 1.0;
  if (closed_form_) return exponential_kernel_mode(lambda, closed_form_->c, closed_form_->alpha, t);
  return solve_modal_volterra(lambda, kernel_, t, volterra_steps(lambda, t)).final_value();
}

double ModalEvaluator::value(double lambda, double t) const {
  if (!(lambda > 0.0)) throw ValidationError(fmt::format("eigenvalue must be positive, got {}", lambda));
  if (t < 0.0) throw ValidationError(fmt::format("modal time must be nonnegative, got {}", t));
  if (cache_) {
    if (const auto hit = cache_->find(solver_id_, lambda, t)) return *hit;
  }
  const double x = compute(lambda, t);
  if (cache_) cache_->insert(solver_id_, lambda, t, x);
  return x;
}

Eigen::VectorXd ModalEvaluator::values(const SpectralBasis& basis, double t) const {
  const std::array<double, 1> times{t};
  return table(basis, times).col(0);
}

Eigen::MatrixXd ModalEvaluator::table(const SpectralBasis& basis, std::span<const double> times) const {
  const int K = basis.size();
  const int m = static_cast<int>(times.size());
  Eigen::MatrixXd out(K, m);
  // Exceptions must not escape the parallel region; the first one is rethrown.
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = K - 1; k >= 0; --k) {  // stiffest (slowest) modes first
    try {
      for (int j = 0; j < m; ++j) out(k, j) = value(basis.eigenvalues()[k], times[j]);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double ModalEvaluator::sup_abs(double lambda, double horizon) const {
  if (!(horizon > 0.0)) return 1.0;
  if (closed_form_) {
    const int n = 4096;
    double sup = 1.0;
    for (int i = 1; i <= n; ++i) {
      sup = std::max(sup, std::abs(exponential_kernel_mode(lambda, closed_form_->c, closed_form_->alpha,
                                                           horizon * i / n)));
    }
    return sup;
  }
  const ModalTrajectory traj = solve_modal_volterra(lambda, kernel_, horizon, volterra_steps(lambda, horizon));
  double sup = 0.0;
  for (double v : traj.values) sup = std::max(sup, std::abs(v));
  return sup;
}

namespace serial {

Eigen::MatrixXd modal_table(const ModalEvaluator& evaluator, const SpectralBasis& basis,
                            std::span<const double> times) {
  Eigen::MatrixXd out(basis.size(), static_cast<Eigen::Index>(times.size()));
  for (int k = 0; k < basis.size(); ++k) {
    for (std::size_t j = 0; j < times.size(); ++j) out(k, j) = evaluator.value(basis.eigenvalues()[k], times[j]);
  }
  return out;
}

}  // namespace serial

SpectralField propagate(const SpectralField& y0, const ModalEvaluator& evaluator, double t) {
  if (t < 0.0) throw ValidationError(fmt::format("propagation time must be nonnegative, got {}", t));
  if (t == 0.0) return y0;
  const Eigen::VectorXd x = evaluator.values(y0.basis(), t);
  return {y0.basis(), y0.coeffs().cwiseProduct(x)};
}

SpectralField propagate(const SpectralField& y0, const MemoryKernel& kernel, double t) {
  return propagate(y0, ModalEvaluator(kernel), t);
}

ResidualTable decomposition_residual(const SpectralBasis& basis, const ModalEvaluator& evaluator, double t,
                                     int k_first, int k_last) {
  if (k_first < 1 || k_last > basis.size() || k_last < k_first) {
    throw ValidationError(fmt::format("mode range {}..{} outside 1..{}", k_first, k_last, basis.size()));
  }
  if (k_last - k_first + 1 < 8) throw ValidationError("residual fit needs at least 8 modes");
  if (basis.eigenvalue(k_last) < 10.0 * basis.eigenvalue(k_first)) {
    throw ValidationError("residual fit needs eigenvalues spanning a decade");
  }
  const double min_time = 1.0 / evaluator.options().min_steps;
  if (!(t >= min_time)) {
    throw ValidationError(fmt::format("t = {} is below one Volterra step ({})", t, min_time));
  }
  const double memory = evaluator.kernel()(t);
  const Eigen::VectorXd x = evaluator.values(basis, t);

  ResidualTable table;
  table.time = t;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (int k = k_first; k <= k_last; ++k) {
    const double lambda = basis.eigenvalue(k);
    const double scaled = lambda * lambda * x[k - 1];
    const double r = scaled + memory;
    table.rows.push_back({k, lambda, x[k - 1], r});
    table.remainder.push_back(r * t * t * t * lambda);
    table.sup_scaled = std::max(table.sup_scaled, std::abs(scaled));
    if (r != 0.0 && std::isfinite(r)) {
      const double lx = std::log(lambda);
      const double ly = std::log(std::abs(r));
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
      ++used;
    }
  }
  if (used >= 2) {
    table.slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
  } else {
    table.slope = -std::numeric_limits<double>::infinity();
  }
  return table;
}

}  // namespace memobs
