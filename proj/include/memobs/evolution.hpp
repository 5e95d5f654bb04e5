#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "memobs/kernels.hpp"
#include "memobs/spectral.hpp"

namespace memobs {

/// How modal values x_k(t) are produced.
///  - Automatic: closed form when the kernel is zero, constant or exponential,
///    otherwise the Volterra march.
///  - Volterra: always march, with the resolution policy below.
///  - ClosedForm: closed form only; throws for other kernels.
enum class ModalMethod { Automatic, Volterra, ClosedForm };

std::string_view to_string(ModalMethod method);
ModalMethod parse_modal_method(std::string_view name);

struct ModalOptions {
  ModalMethod method = ModalMethod::Automatic;
  /// Volterra step policy: h lambda <= max_step_lambda, never fewer than min_steps.
  double max_step_lambda = 0.5;
  int min_steps = 2048;
};

/// Memo of modal values keyed by (solver id, lambda, t). Concurrent readers,
/// serialized writers; optionally persisted as JSON.
class ModalCache {
 public:
  explicit ModalCache(std::filesystem::path backing = {});

  std::optional<double> find(const std::string& solver_id, double lambda, double t) const;
  void insert(const std::string& solver_id, double lambda, double t, double value);
  std::size_t size() const;

  /// Reads entries from the backing file, if it exists.
  void load();
  void save() const;

 private:
  using Key = std::tuple<std::string, double, double>;
  std::filesystem::path backing_;
  mutable std::shared_mutex mutex_;
  std::map<Key, double> entries_;
};

/// Produces modal values x_k(t) for one kernel. Thread-safe.
class ModalEvaluator {
 public:
  explicit ModalEvaluator(MemoryKernel kernel, ModalOptions options = {},
                          std::shared_ptr<ModalCache> cache = nullptr);

  const MemoryKernel& kernel() const { return kernel_; }
  const ModalOptions& options() const { return options_; }
  /// Content hash of the kernel description and the resolution policy.
  const std::string& solver_id() const { return solver_id_; }
  bool uses_closed_form() const { return closed_form_.has_value(); }

  double value(double lambda, double t) const;
  /// x_k(t) for every mode of the basis; modes run in parallel.
  Eigen::VectorXd values(const SpectralBasis& basis, double t) const;
  /// K x m table with entries x_k(times[j]).
  Eigen::MatrixXd table(const SpectralBasis& basis, std::span<const double> times) const;
  /// max |x(s)| over s in [0, horizon].
  double sup_abs(double lambda, double horizon) const;

  int volterra_steps(double lambda, double t) const;

 private:
  double compute(double lambda, double t) const;

  MemoryKernel kernel_;
  ModalOptions options_;
  std::shared_ptr<ModalCache> cache_;
  std::optional<ExponentialKernel> closed_form_;
  std::string solver_id_;
};

namespace serial {

/// Single-threaded reference for ModalEvaluator::table.
Eigen::MatrixXd modal_table(const ModalEvaluator& evaluator, const SpectralBasis& basis,
                            std::span<const double> times);

}  // namespace serial

/// Coefficient-wise a_k -> a_k x_k(t).
SpectralField propagate(const SpectralField& y0, const ModalEvaluator& evaluator, double t);
SpectralField propagate(const SpectralField& y0, const MemoryKernel& kernel, double t);

struct ResidualRow {
  int k;
  double lambda;
  double x;         // x_k(t)
  double residual;  // lambda^2 x_k(t) + M(t)
};

struct ResidualTable {
  double time = 0.0;
  std::vector<ResidualRow> rows;
  /// Least-squares slope of log|residual| against log lambda.
  double slope = 0.0;
  /// max_k lambda_k^2 |x_k(t)|.
  double sup_scaled = 0.0;
  /// residual * t^3 * lambda per row: the remainder once M(t) A^{-2} is
  /// removed, in units of (tA)^{-3}. Reported, not asserted.
  std::vector<double> remainder;
};

/// Residual of lambda_k^2 x_k(t) -> -M(t) over modes k_first..k_last.
ResidualTable decomposition_residual(const SpectralBasis& basis, const ModalEvaluator& evaluator, double t,
                                     int k_first, int k_last);

}  // namespace memobs
