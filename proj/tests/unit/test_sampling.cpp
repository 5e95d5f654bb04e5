#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "memobs/errors.hpp"
#include "memobs/parallel.hpp"
#include "memobs/sampling.hpp"
#include "test_support.hpp"

using namespace memobs;

namespace {

constexpr double kPi = std::numbers::pi;

SamplingPlan two_sided(double L) {
  return SamplingPlan({{0.5, ObservationRegion({{0.0, 0.6 * L}})}, {0.8, ObservationRegion({{0.4 * L, L}})}});
}

}  // namespace

TEST(Sampling, PlanValidation) {
  EXPECT_THROW(SamplingPlan({}), ValidationError);
  EXPECT_THROW(SamplingPlan({{0.0, ObservationRegion({{0.0, 1.0}})}}), ValidationError);
  EXPECT_THROW(two_sided(1.0).check_within(0.5), ValidationError);
  EXPECT_DOUBLE_EQ(two_sided(1.0).max_time(), 0.8);
}

TEST(Sampling, KernelNonvanishingIndices) {
  const MemoryKernel M = MemoryKernel::tabulated({0.0, 1.0, 2.0, 3.0}, {1.0, 0.0, 0.0, 0.0});
  const SamplingPlan plan({{0.5, ObservationRegion({{0.0, 0.5}})}, {2.0, ObservationRegion({{0.5, 1.0}})}});
  const NonvanishingCheck check = check_kernel_nonvanishing(plan, M);
  EXPECT_TRUE(check.holds);
  EXPECT_EQ(check.indices, std::vector<int>{0});
  EXPECT_FALSE(check_kernel_nonvanishing(plan, MemoryKernel::zero()).holds);
  EXPECT_EQ(check_geometric_condition(plan, M, 1.0).verdict, CoverageVerdict::Fail);
  EXPECT_EQ(check_geometric_condition(plan, MemoryKernel::linear(), 1.0).verdict, CoverageVerdict::Strong);
}

TEST(Sampling, GeometricVerdicts) {
  const MemoryKernel M = MemoryKernel::exponential(1.0, 0.0);
  EXPECT_EQ(check_geometric_condition(two_sided(1.0), M, 1.0).verdict, CoverageVerdict::Strong);

  const SamplingPlan weak({{0.5, ObservationRegion({{0.0, 0.5, true, false}})},
                           {0.8, ObservationRegion({{0.5, 1.0, false, true}})}});
  const GeometricCheck w = check_geometric_condition(weak, M, 1.0);
  EXPECT_EQ(w.verdict, CoverageVerdict::Weak);
  ASSERT_EQ(w.uncovered_points.size(), 1u);
  EXPECT_DOUBLE_EQ(w.uncovered_points[0], 0.5);

  const SamplingPlan open_end({{0.5, ObservationRegion({{0.0, 1.0, false, true}})}});
  EXPECT_EQ(check_geometric_condition(open_end, M, 1.0).verdict, CoverageVerdict::Weak);

  const SamplingPlan fail({{0.5, ObservationRegion({{0.0, 0.3}})}, {0.8, ObservationRegion({{0.7, 1.0}})}});
  const GeometricCheck f = check_geometric_condition(fail, M, 1.0);
  EXPECT_EQ(f.verdict, CoverageVerdict::Fail);
  ASSERT_EQ(f.uncovered.size(), 1u);
  EXPECT_DOUBLE_EQ(f.uncovered[0].lo, 0.3);
  EXPECT_DOUBLE_EQ(f.uncovered[0].hi, 0.7);
  EXPECT_FALSE(f.uncovered[0].closed_lo);
  EXPECT_FALSE(f.uncovered[0].closed_hi);
}

TEST(Sampling, GramIsPsdAndMatchesQuadrature) {
  const double L = kPi;
  const SpectralBasis basis(L, 10);
  const SamplingPlan plan = two_sided(L);
  const ModalEvaluator e(MemoryKernel::exponential(1.0, 0.0));
  const Eigen::MatrixXd Q = observation_gram(plan, e, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-14);
  // a^T Q a = sum_j ||chi_j y(t_j)||^2 for a random initial field
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd a(10);
  for (int k = 0; k < 10; ++k) a[k] = n(rng);
  const SpectralField y0(basis, a);
  double direct = 0.0;
  for (const SamplingInstant& s : plan.instants()) {
    const SpectralField y = propagate(y0, e, s.time);
    for (const Interval& piece : s.region.intervals()) {
      direct += memobs::testing::simpson([&](double x) { return y(x) * y(x); }, piece.lo, piece.hi);
    }
  }
  EXPECT_NEAR(a.dot(Q * a), direct, 1e-9 * direct);
}

TEST(Sampling, GramIsInvariantUnderInstantPermutation) {
  const SpectralBasis basis(1.0, 16);
  const ModalEvaluator e(MemoryKernel::exponential(2.0, -1.0));
  const SamplingPlan p({{0.2, ObservationRegion({{0.0, 0.4}})}, {0.5, ObservationRegion({{0.3, 0.8}})},
                        {0.9, ObservationRegion({{0.6, 1.0}})}});
  const SamplingPlan q({{0.9, ObservationRegion({{0.6, 1.0}})}, {0.2, ObservationRegion({{0.0, 0.4}})},
                        {0.5, ObservationRegion({{0.3, 0.8}})}});
  const Eigen::MatrixXd a = observation_gram(p, e, basis), b = observation_gram(q, e, basis);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15 * a.cwiseAbs().maxCoeff() * 16);
}

TEST(Sampling, ParallelGramMatchesSerialReference) {
  const SpectralBasis basis(kPi, 64);
  const SamplingPlan plan = two_sided(kPi);
  const ModalEvaluator e(MemoryKernel::exponential(1.0, 0.0));
  const std::vector<double> times = plan.times();
  const Eigen::MatrixXd table = e.table(basis, times);
  set_thread_count(4);
  const Eigen::MatrixXd a = observation_gram(plan, table, basis);
  set_thread_count(1);
  const Eigen::MatrixXd b = serial::observation_gram(plan, table, basis);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15 * b.cwiseAbs().maxCoeff());
}

TEST(Sampling, ConstantsBracketTheRatio) {
  const double L = kPi;
  const SpectralBasis basis(L, 12);
  const SamplingPlan plan = two_sided(L);
  const ModalEvaluator e(MemoryKernel::exponential(1.0, 0.0));
  const ObservabilityConstants c = observability_constants(plan, e, basis);
  EXPECT_FALSE(c.conditioning_warning);
  EXPECT_GT(c.c_min, 0.0);
  EXPECT_LE(c.c_min, c.c_max);
  EXPECT_DOUBLE_EQ(c.lower_bracket, c.c_min);
  EXPECT_DOUBLE_EQ(c.upper_bracket, std::sqrt(2.0) * c.c_max);
  const Eigen::MatrixXd Q = observation_gram(plan, e, basis);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a(12);
    for (int k = 0; k < 12; ++k) a[k] = n(rng) / (k + 1);
    const SpectralField y0(basis, a);
    double sum_norms = 0.0;
    for (int j = 0; j < plan.size(); ++j) {
      const Eigen::VectorXd y = propagate(y0, e, plan[j].time).coeffs();
      sum_norms += std::sqrt(y.dot(overlap_matrix(basis, plan[j].region) * y));
    }
    const double ratio = sum_norms / y0.hs_norm(-4);
    EXPECT_GE(ratio, c.lower_bracket * (1 - 1e-10));
    EXPECT_LE(ratio, c.upper_bracket * (1 + 1e-10));
  }
}

TEST(Sampling, MemorylessConstantCollapses) {
  const SamplingPlan plan = two_sided(kPi);
  const ModalEvaluator e(MemoryKernel::zero());
  const double c8 = observability_constants(plan, e, SpectralBasis(kPi, 8)).c_min;
  const double c12 = observability_constants(plan, e, SpectralBasis(kPi, 12)).c_min;
  EXPECT_GT(c8, 0.0);
  EXPECT_LT(c12, 1e-6 * c8);
}

TEST(Sampling, ProbeSeparatesCoveredFromUncoveredPoints) {
  const SamplingPlan plan({{0.5, ObservationRegion({{0.0, 0.3}})}, {0.8, ObservationRegion({{0.7, 1.0}})}});
  const ModalEvaluator e(MemoryKernel::exponential(1.0, 0.0));
  const SpectralBasis basis(1.0, 512);
  const std::vector<double> radii{0.1, 0.05, 0.025};
  const auto gap = probe_upper_bound(plan, e, basis, 0.5, radii);
  const auto covered = probe_upper_bound(plan, e, basis, 0.15, radii);
  for (std::size_t i = 1; i < radii.size(); ++i) EXPECT_LT(gap[i].ratio, gap[i - 1].ratio);
  EXPECT_LT(gap.back().ratio, 0.2 * covered.back().ratio);
  for (const ProbeRow& r : gap) EXPECT_NEAR(r.ratio, r.observed / r.norm_h_minus4, 1e-14 * r.ratio);
  EXPECT_THROW(probe_upper_bound(plan, e, basis, 0.5, std::vector<double>{0.05, 0.1}), ValidationError);
}
