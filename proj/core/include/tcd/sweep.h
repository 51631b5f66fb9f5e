#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcd/bounds.h"
#include "tcd/codesign.h"
#include "tcd/model.h"

namespace tcd {

/// Worker count from the TCD_JOBS environment variable, else the hardware
/// concurrency (at least one).
int default_jobs();

/// Calls task(i) for i in [0, count) on up to `jobs` threads (jobs <= 0
/// means default_jobs()). The first exception thrown by a task is rethrown
/// after all workers finish.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

/// Closed-loop synthesis used at every sweep point: a full-order
/// compensator from extremize with alpha and the precisions frozen.
struct SynthesisConfig {
  Eigen::MatrixXd W_p;
  Eigen::MatrixXd Y_bar, U_bar;
  Eigen::VectorXd gamma_a, gamma_s;
  Target target = Target::kOutputBound;
  CodesignOptions codesign;
};

struct SweepRow {
  double scale = 0.0;
  BoundResult bound;
  Controller controller;
  /// Status of the synthesis step ("stationary", "infeasible", ...).
  std::string synthesis_status;
  double synthesis_value = 0.0;
  int synthesis_iterations = 0;
};

/// For every prestress scale s: freeze alpha = s * model prestress,
/// synthesize a controller, then compute the bound of the given kind on the
/// closed loop driven by the normalized noise W^1/2 w. A point whose
/// synthesis fails is recorded with an infinite bound and the sweep
/// continues. Rows come back in the order of `scales`.
std::vector<SweepRow> prestress_sweep(const TensegrityModel& model, const std::vector<double>& scales,
                                      BoundKind kind, const SynthesisConfig& config,
                                      const BoundOptions& bound_options = {}, int jobs = 0);

/// The closed loop with its disturbance inputs normalized, B -> B W^1/2.
ClosedLoop normalized_loop(const ClosedLoop& cl, const Eigen::MatrixXd& W);

}  // namespace tcd
