#include "tcd/sweep.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "tcd/linalg.h"

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int default_jobs() {
  if (const char* env = std::getenv("TCD_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  if (jobs <= 0) jobs = default_jobs();
  jobs = std::max(1, std::min(jobs, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

ClosedLoop normalized_loop(const ClosedLoop& cl, const MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(W));
  const VectorXd w = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  ClosedLoop out = cl;
  out.B = cl.B * eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

std::vector<SweepRow> prestress_sweep(const TensegrityModel& model, const std::vector<double>& scales,
                                      BoundKind kind, const SynthesisConfig& config,
                                      const BoundOptions& bound_options, int jobs) {
  for (double s : scales) {
    if (!(s > 0.0)) throw std::invalid_argument("prestress_sweep: scales must be positive");
  }
  const DescriptorSystem ds = tensegrity_descriptor(model);
  std::vector<SweepRow> rows(scales.size());
  parallel_for(static_cast<int>(scales.size()), jobs, [&](int i) {
    SweepRow& row = rows[i];
    row.scale = scales[i];
    row.bound.kind = kind;
    row.bound.value = std::numeric_limits<double>::infinity();

    CodesignProblem p;
    p.system = ds;
    p.W_p = config.W_p;
    p.Y_bar = config.Y_bar;
    p.U_bar = config.U_bar;
    p.fixed_parameters = true;
    p.fixed_alpha = scales[i] * model.prestress;
    p.fixed_gamma_a = config.gamma_a;
    p.fixed_gamma_s = config.gamma_s;
    CodesignSolution sol;
    try {
      sol = extremize(p, config.target, config.codesign);
    } catch (const std::runtime_error& e) {
      row.synthesis_status = "infeasible";
      row.bound.message = e.what();
      return;
    }
    row.synthesis_status = sol.status;
    row.synthesis_value = sol.z;
    row.synthesis_iterations = sol.iterations;
    row.controller = sol.design.controller;
    if (!sol.verification.stable) {
      row.bound.message = "synthesized loop is not stable";
      return;
    }
    const ClosedLoop cl = design_closed_loop(p, sol.design, false);
    const MatrixXd W = design_noise(p, sol.design, false);
    row.bound = kind == BoundKind::kCovariance ? compute_bound(kind, cl, W, bound_options)
                                               : compute_bound(kind, normalized_loop(cl, W), W, bound_options);
  });
  return rows;
}

}  // namespace tcd
