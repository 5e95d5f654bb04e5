#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "memobs/evolution.hpp"
#include "memobs/kernels.hpp"
#include "memobs/region.hpp"
#include "memobs/spectral.hpp"

namespace memobs {

struct SamplingInstant {
  double time;
  ObservationRegion region;
};

/// Finite list of (t_j, omega_j) with t_j > 0. Indices are 0-based.
class SamplingPlan {
 public:
  explicit SamplingPlan(std::vector<SamplingInstant> instants);

  int size() const { return static_cast<int>(instants_.size()); }
  const SamplingInstant& operator[](int j) const { return instants_.at(j); }
  std::span<const SamplingInstant> instants() const { return instants_; }
  std::vector<double> times() const;
  double max_time() const;
  void check_within(double length) const;

 private:
  std::vector<SamplingInstant> instants_;
};

inline constexpr double kKernelZeroTolerance = 1e-12;

struct NonvanishingCheck {
  bool holds = false;
  std::vector<int> indices;  // J = {j : |M(t_j)| > tol}
};

NonvanishingCheck check_kernel_nonvanishing(const SamplingPlan& plan, const MemoryKernel& kernel,
                                            double tol = kKernelZeroTolerance);

enum class CoverageVerdict { Strong, Weak, Fail };
std::string_view to_string(CoverageVerdict verdict);

struct GeometricCheck {
  CoverageVerdict verdict = CoverageVerdict::Fail;
  std::vector<int> active;                  // J
  std::vector<Interval> uncovered;          // open gaps of positive length
  std::vector<double> uncovered_points;     // isolated uncovered points
};

/// Coverage of [0, L] by the regions attached to instants with M(t_j) != 0.
/// Gaps shorter than 1e-12 L count as points.
GeometricCheck check_geometric_condition(const SamplingPlan& plan, const MemoryKernel& kernel, double length);

/// Q = sum_j D_j G_j D_j with D_j = diag(x_k(t_j)) and G_j the overlap matrix.
Eigen::MatrixXd observation_gram(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                                 const SpectralBasis& basis);
/// Same, from a precomputed K x m modal table.
Eigen::MatrixXd observation_gram(const SamplingPlan& plan, const Eigen::MatrixXd& modal_table,
                                 const SpectralBasis& basis);

struct ObservabilityConstants {
  int truncation = 0;
  double c_min = 0.0;
  double c_max = 0.0;
  /// bounds on sum_j ||chi_j y(t_j)|| / ||y0||_{H^-4}: >= lower, <= upper
  double lower_bracket = 0.0;
  double upper_bracket = 0.0;
  /// set when the smallest eigenvalue came out negative and was clamped
  bool conditioning_warning = false;
  double raw_min_eigenvalue = 0.0;
};

/// Extremes of a^T Q a over ||a||_{H^-4} = 1 on the truncated space, via the
/// eigenvalues of S = Lambda^2 Q Lambda^2. Assembly and the eigensolve run in
/// 100-digit arithmetic so that tiny constants (memoryless decay) stay resolved.
ObservabilityConstants observability_constants(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                                               const SpectralBasis& basis);

struct ProbeRow {
  double radius;
  double ratio;
  double observed;       // sum_j ||chi_j y(t_j; probe)||
  double norm_h_minus4;  // ||probe||_{H^-4}
};

/// Probe data whose A^{-2} image is the normalized indicator of B(x0, r),
/// truncated to the basis. Each ratio bounds the sum-of-norms constant from above.
std::vector<ProbeRow> probe_upper_bound(const SamplingPlan& plan, const ModalEvaluator& evaluator,
                                        const SpectralBasis& basis, double x0, std::span<const double> radii);

namespace serial {

Eigen::MatrixXd overlap_matrix(const SpectralBasis& basis, const ObservationRegion& region);
Eigen::MatrixXd observation_gram(const SamplingPlan& plan, const Eigen::MatrixXd& modal_table,
                                 const SpectralBasis& basis);

}  // namespace serial

}  // namespace memobs
