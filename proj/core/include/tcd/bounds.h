#pragma once

#include <string>

#include <Eigen/Dense>

#include "tcd/sdp.h"
#include "tcd/statespace.h"

namespace tcd {

enum class BoundKind { kCovariance, kEnergyToPeak, kImpulseToEnergy, kEnergyToEnergy };

const char* to_string(BoundKind k);
/// Accepts the to_string names and the short forms cov, ep, ie, ee.
BoundKind parse_bound_kind(const std::string& name);

struct BoundResult {
  BoundKind kind = BoundKind::kCovariance;
  double value = 0.0;
  /// X for the covariance bound, Q for energy-to-peak, P for the other two.
  /// For a descriptor loop this is the certificate of the explicit system
  /// E^-1 A, E^-1 B.
  Eigen::MatrixXd certificate;
  sdp::Status status = sdp::Status::kUnknown;
  int iterations = 0;
  std::string message;

  bool ok() const { return status == sdp::Status::kOptimal; }
};

struct BoundOptions {
  /// Strict inequalities are imposed as <= -margin * (matrix scale) * I.
  double relative_margin = sdp::Problem::kDefaultRelativeMargin;
  /// Solve on a time-scaled, balanced realization of a stable loop. The
  /// bound value is unchanged; conditioning is much better for loops with a
  /// wide spread of time constants.
  bool balance = true;
  sdp::SolverOptions solver;
};

/// inf trace(C X C') s.t. A X E' + E X A' + B W B' < 0, X > 0.
BoundResult bound_covariance(const ClosedLoop& cl, const Eigen::MatrixXd& W, const BoundOptions& options = {});

/// Gamma_ep = inf ||C Q C'||^1/2 s.t. A Q E' + E Q A' + B B' < 0, Q > 0.
BoundResult bound_energy_to_peak(const ClosedLoop& cl, const BoundOptions& options = {});

/// Gamma_ie = inf ||B' P B||^1/2 s.t. E' P A + A' P E + C'C < 0, P > 0.
BoundResult bound_impulse_to_energy(const ClosedLoop& cl, const BoundOptions& options = {});

/// Gamma_ee = inf eps s.t. [E'PA + A'PE + C'C, E'PB; B'PE, -eps^2 I] < 0,
/// P > 0, with eps^2 minimized directly.
BoundResult bound_energy_to_energy(const ClosedLoop& cl, const BoundOptions& options = {});

/// Dispatches on kind; W is used by the covariance bound only.
BoundResult compute_bound(BoundKind kind, const ClosedLoop& cl, const Eigen::MatrixXd& W,
                          const BoundOptions& options = {});

/// Largest eigenvalue of the defining inequality evaluated at the returned
/// certificate (and value, for the energy-to-energy gain), in the explicit
/// coordinates E^-1 A, E^-1 B. Negative for a valid certificate.
double certificate_residual(const ClosedLoop& cl, const BoundResult& r, const Eigen::MatrixXd& W);

}  // namespace tcd
