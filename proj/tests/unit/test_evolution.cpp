#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "memobs/errors.hpp"
#include "memobs/evolution.hpp"
#include "memobs/parallel.hpp"

using namespace memobs;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Evolution, ParsesMethodNames) {
  for (ModalMethod m : {ModalMethod::Automatic, ModalMethod::Volterra, ModalMethod::ClosedForm}) {
    EXPECT_EQ(parse_modal_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_modal_method("rk4"), ValidationError);
}

TEST(Evolution, ClosedFormOnlyForExponentialFamily) {
  EXPECT_TRUE(ModalEvaluator(MemoryKernel::exponential(1.0, 0.0)).uses_closed_form());
  EXPECT_TRUE(ModalEvaluator(MemoryKernel::constant(-1.0)).uses_closed_form());
  EXPECT_FALSE(ModalEvaluator(MemoryKernel::linear()).uses_closed_form());
  EXPECT_FALSE(ModalEvaluator(MemoryKernel::exponential(1.0, 0.0), {ModalMethod::Volterra}).uses_closed_form());
  EXPECT_THROW(ModalEvaluator(MemoryKernel::linear(), {ModalMethod::ClosedForm}), ValidationError);
}

TEST(Evolution, VolterraBackendAgreesWithClosedForm) {
  const MemoryKernel M = MemoryKernel::exponential(4.0, 0.0);
  const ModalEvaluator closed(M);
  const ModalEvaluator march(M, {ModalMethod::Volterra, 0.5, 4096});
  for (double lambda : {1.0, 9.0, 50.0}) {
    for (double t : {0.3, 1.0}) EXPECT_NEAR(march.value(lambda, t), closed.value(lambda, t), 2e-6);
  }
  EXPECT_EQ(closed.value(3.0, 0.0), 1.0);
  EXPECT_EQ(march.volterra_steps(100.0, 50.0), 10000);
  EXPECT_EQ(march.volterra_steps(1.0, 1.0), 4096);
}

TEST(Evolution, SolverIdSeparatesKernelsAndPolicies) {
  const ModalEvaluator a(MemoryKernel::exponential(1.0, 0.0));
  const ModalEvaluator b(MemoryKernel::exponential(1.0, 0.5));
  const ModalEvaluator c(MemoryKernel::exponential(1.0, 0.0), {ModalMethod::Volterra});
  EXPECT_EQ(a.solver_id(), ModalEvaluator(MemoryKernel::exponential(1.0, 0.0)).solver_id());
  EXPECT_NE(a.solver_id(), b.solver_id());
  EXPECT_NE(a.solver_id(), c.solver_id());
  EXPECT_EQ(a.solver_id().size(), 64u);
}

TEST(Evolution, CacheRoundTripsThroughJson) {
  const auto path = std::filesystem::temp_directory_path() / "memobs-cache-test.json";
  std::filesystem::remove(path);
  auto cache = std::make_shared<ModalCache>(path);
  const ModalEvaluator e(MemoryKernel::linear(), {}, cache);
  const double v = e.value(2.0, 0.7);
  EXPECT_EQ(cache->size(), 1u);
  EXPECT_EQ(e.value(2.0, 0.7), v);
  cache->save();
  ModalCache reloaded(path);
  reloaded.load();
  ASSERT_EQ(reloaded.size(), 1u);
  EXPECT_EQ(reloaded.find(e.solver_id(), 2.0, 0.7).value(), v);
  EXPECT_FALSE(reloaded.find(e.solver_id(), 2.0, 0.8).has_value());
  std::filesystem::remove(path);
}

TEST(Evolution, ParallelTableMatchesSerialReference) {
  const SpectralBasis basis(kPi, 24);
  const ModalEvaluator e(MemoryKernel::linear(), {ModalMethod::Automatic, 0.5, 256});
  const std::vector<double> times{0.2, 0.5, 1.0};
  set_thread_count(4);
  const Eigen::MatrixXd parallel = e.table(basis, times);
  set_thread_count(1);
  const Eigen::MatrixXd serial = serial::modal_table(e, basis, times);
  EXPECT_EQ((parallel - serial).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Evolution, PropagateScalesCoefficients) {
  const SpectralBasis basis(1.0, 5);
  const SpectralField y0(basis, Eigen::VectorXd::LinSpaced(5, 1.0, 5.0));
  const ModalEvaluator e(MemoryKernel::exponential(2.0, 0.0));
  EXPECT_EQ(propagate(y0, e, 0.0).coeffs(), y0.coeffs());
  const SpectralField y = propagate(y0, e, 0.4);
  for (int k = 1; k <= 5; ++k) EXPECT_DOUBLE_EQ(y.coeffs()[k - 1], k * e.value(basis.eigenvalue(k), 0.4));
  EXPECT_THROW(propagate(y0, e, -1.0), ValidationError);
}

TEST(Evolution, ResidualDecaysWithLambda) {
  const SpectralBasis basis(kPi, 32);
  const ModalEvaluator e(MemoryKernel::exponential(1.0, 0.0));
  const ResidualTable r = decomposition_residual(basis, e, 1.0, 1, 32);
  ASSERT_EQ(r.rows.size(), 32u);
  EXPECT_LT(r.slope, -0.8);
  const ResidualRow& last = r.rows.back();
  EXPECT_NEAR(last.residual, last.lambda * last.lambda * last.x + 1.0, 1e-12);
  EXPECT_THROW(decomposition_residual(basis, e, 1.0, 1, 4), ValidationError);
  EXPECT_THROW(decomposition_residual(basis, e, 1.0, 30, 40), ValidationError);
}
