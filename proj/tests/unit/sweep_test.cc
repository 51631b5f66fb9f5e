#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tcd/statespace.h"
#include "tcd/sweep.h"

using namespace tcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SynthesisConfig arm_config(const DescriptorSystem& ds) {
  SynthesisConfig c;
  c.W_p = 0.1 * MatrixXd::Identity(ds.disturbance_count(), ds.disturbance_count());
  c.Y_bar = 0.02 * MatrixXd::Identity(ds.output_count(), ds.output_count());
  c.U_bar = 1.2 * MatrixXd::Identity(ds.input_count(), ds.input_count());
  c.gamma_a = VectorXd::Constant(ds.input_count(), 1e3);
  c.gamma_s = VectorXd::Constant(ds.measurement_count(), 1e3);
  c.target = Target::kOutputBound;
  return c;
}

}  // namespace

TEST_CASE("parallel_for visits every index once") {
  for (int jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(17);
    parallel_for(17, jobs, [&](int i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 2, [](int) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for rethrows after all workers finish") {
  std::atomic<int> done{0};
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [&](int i) {
                                 if (i == 4) throw std::domain_error("four");
                                 done++;
                               }),
                  std::domain_error);
  CHECK(done.load() == 9);
}

TEST_CASE("default_jobs honours TCD_JOBS") {
  const char* old = std::getenv("TCD_JOBS");
  const std::string saved = old ? old : "";
  setenv("TCD_JOBS", "3", 1);
  CHECK(default_jobs() == 3);
  setenv("TCD_JOBS", "junk", 1);
  CHECK(default_jobs() >= 1);
  if (old) {
    setenv("TCD_JOBS", saved.c_str(), 1);
  } else {
    unsetenv("TCD_JOBS");
  }
}

TEST_CASE("normalized loop folds the noise intensity") {
  ClosedLoop cl;
  cl.E = MatrixXd::Identity(2, 2);
  cl.A = MatrixXd::Identity(2, 2) * -1.0;
  cl.B = MatrixXd::Ones(2, 2);
  cl.C = MatrixXd::Identity(2, 2);
  cl.M = MatrixXd::Zero(1, 2);
  const MatrixXd W = VectorXd::LinSpaced(2, 4.0, 9.0).asDiagonal();
  const ClosedLoop n = normalized_loop(cl, W);
  CHECK((n.B * n.B.transpose() - cl.B * W * cl.B.transpose()).norm() < 1e-12);
  CHECK(n.A == cl.A);
}

TEST_CASE("prestress sweep on the desk arm") {
  const TensegrityModel m = desk_arm();
  const DescriptorSystem ds = tensegrity_descriptor(m);
  const SynthesisConfig c = arm_config(ds);
  const std::vector<SweepRow> rows = prestress_sweep(m, {1.0, 4.0, 1.0}, BoundKind::kCovariance, c, {}, 2);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    INFO(r.scale << " " << r.synthesis_status << " " << r.bound.message);
    CHECK(r.bound.ok());
    CHECK(std::isfinite(r.bound.value));
  }
  // Same inputs, same answer, whatever thread ran it.
  CHECK(rows[0].bound.value == rows[2].bound.value);
  CHECK(rows[0].scale == 1.0);
  // More prestress stiffens the arm and lowers the covariance bound.
  CHECK(rows[1].bound.value < rows[0].bound.value);

  // The covariance bound is the trace of the Lyapunov output covariance.
  CodesignProblem p;
  p.system = ds;
  p.W_p = c.W_p;
  DesignPoint d;
  d.alpha = 4.0 * m.prestress;
  d.gamma_a = c.gamma_a;
  d.gamma_s = c.gamma_s;
  d.controller = rows[1].controller;
  const CovarianceResult cov = lyapunov_covariance(design_closed_loop(p, d), design_noise(p, d));
  CHECK(rows[1].bound.value == doctest::Approx(cov.Y.trace()).epsilon(1e-5));
}

TEST_CASE("unsynthesizable points are recorded, not thrown") {
  const TensegrityModel m = desk_arm();
  const DescriptorSystem ds = tensegrity_descriptor(m);
  SynthesisConfig c = arm_config(ds);
  c.target = Target::kBudget;  // invalid with frozen parameters
  CHECK_THROWS_AS(prestress_sweep(m, {1.0}, BoundKind::kCovariance, c), std::invalid_argument);
  CHECK_THROWS_AS(prestress_sweep(m, {0.0}, BoundKind::kCovariance, arm_config(ds)), std::invalid_argument);

  c = arm_config(ds);
  c.target = Target::kControlBound;
  c.Y_bar *= 1e-12;
  const auto rows = prestress_sweep(m, {1.0}, BoundKind::kEnergyToEnergy, c, {}, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].synthesis_status == "infeasible");
  CHECK(std::isinf(rows[0].bound.value));
  CHECK_FALSE(rows[0].bound.message.empty());
}
