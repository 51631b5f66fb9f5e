#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tcd/topology.h"

namespace tcd {

/// Linear nodal constraints A n = d (pins and class-k joints).
struct ConstraintSet {
  Eigen::MatrixXd A;  // N_c x d*n
  Eigen::VectorXd d;  // N_c

  int rows() const { return static_cast<int>(A.rows()); }
  bool empty() const { return A.rows() == 0; }
  /// max |A n - d|.
  double residual(const Eigen::VectorXd& positions) const;
};

/// Joint rows (n_primary - n_copy = 0) for every split node, then pin rows
/// fixing each listed user node at its current position.
ConstraintSet make_constraints(const Topology& t, const Eigen::VectorXd& positions,
                               const std::vector<int>& fixed_user_nodes);

/// Static nodal forces at a configuration, with the reactions of the
/// constraints included.
struct StaticForces {
  Eigen::VectorXd nodal_force;      // f = w - string forces + A' Omega
  Eigen::VectorXd bar_compression;  // mu_i: f_head = -mu_i b_i, f_tail = mu_i b_i
  Eigen::VectorXd multipliers;      // Omega
  double residual = 0.0;            // ||f - (bar axial forces)||, zero at equilibrium
};

/// Least-squares split of the string and external loads into constraint
/// reactions and axial bar forces. The result is linear in the prestress
/// for fixed geometry, so the stiffness built from it stays affine.
StaticForces static_forces(const Topology& t, const Configuration& c, const ConstraintSet& cs);

/// Basis (columns) of force densities gamma for which the structure is in
/// equilibrium with zero external load, given the constraints.
Eigen::MatrixXd self_stress_basis(const Topology& t, const Eigen::VectorXd& positions,
                                  const ConstraintSet& cs);

}  // namespace tcd
