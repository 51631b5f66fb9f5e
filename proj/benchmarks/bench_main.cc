#include <benchmark/benchmark.h>

#include "tcd/bounds.h"
#include "tcd/codesign.h"
#include "tcd/linmodel.h"
#include "tcd/model.h"
#include "tcd/sdp.h"
#include "tcd/statespace.h"

using namespace tcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

CodesignProblem arm_budget_problem() {
  const TensegrityModel m = desk_arm();
  CodesignProblem p;
  p.system = tensegrity_descriptor(m);
  const DescriptorSystem& s = p.system;
  p.W_p = MatrixXd::Identity(s.disturbance_count(), s.disturbance_count());
  p.Y_bar = 0.02 * MatrixXd::Identity(s.output_count(), s.output_count());
  p.U_bar = 1.2 * MatrixXd::Identity(s.input_count(), s.input_count());
  p.budget = 1e6;
  p.gamma_a_cap = VectorXd::Constant(s.input_count(), 1e4);
  p.gamma_s_cap = VectorXd::Constant(s.measurement_count(), 1e4);
  p.alpha_lower = 0.5 * m.prestress;
  p.alpha_upper = 2.0 * m.prestress;
  p.prices.actuator = VectorXd::Ones(s.input_count());
  p.prices.sensor = VectorXd::Ones(s.measurement_count());
  p.prices.structure = VectorXd::Constant(s.parameter_count(), 10.0);
  return p;
}

// Open-loop arm driven by all of its disturbances.
ClosedLoop arm_open_loop() {
  const DescriptorSystem s = tensegrity_descriptor(desk_arm());
  const VectorXd alpha = desk_arm().prestress;
  ClosedLoop cl;
  cl.E = s.E(alpha);
  cl.A = s.A(alpha);
  cl.B = s.D_p(alpha);
  cl.C = s.C_y(alpha);
  cl.M = MatrixXd::Zero(s.input_count(), s.state_count());
  return cl;
}

void BM_LinearizeBeam(benchmark::State& state) {
  const TensegrityModel beam = desk_beam();
  for (auto _ : state) benchmark::DoNotOptimize(linearize(beam));
}
BENCHMARK(BM_LinearizeBeam);

void BM_DescriptorArm(benchmark::State& state) {
  const TensegrityModel arm = desk_arm();
  for (auto _ : state) benchmark::DoNotOptimize(tensegrity_descriptor(arm));
}
BENCHMARK(BM_DescriptorArm);

void BM_Bound(benchmark::State& state) {
  const ClosedLoop cl = arm_open_loop();
  const MatrixXd W = MatrixXd::Identity(cl.B.cols(), cl.B.cols());
  const BoundKind kind = static_cast<BoundKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compute_bound(kind, cl, W));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Bound)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_FirstSubproblem(benchmark::State& state) {
  const CodesignProblem p = arm_budget_problem();
  const DesignPoint d = initial_design(p);
  const Theorem1Program prog = build_theorem1_lmis(p, convexify_update(p, d), Target::kBudget);
  for (auto _ : state) benchmark::DoNotOptimize(sdp::solve(prog.problem));
  state.counters["dofs"] = prog.problem.dof_count();
}
BENCHMARK(BM_FirstSubproblem)->Unit(benchmark::kMillisecond);

void BM_ExtremizeArm(benchmark::State& state) {
  const CodesignProblem p = arm_budget_problem();
  for (auto _ : state) benchmark::DoNotOptimize(extremize(p, Target::kBudget));
}
BENCHMARK(BM_ExtremizeArm)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
BENCHMARK_MAIN();
