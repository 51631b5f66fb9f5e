#pragma once

#include <Eigen/Dense>

#include "tcd/constraint_set.h"
#include "tcd/topology.h"

namespace tcd {

/// Linearized rotational dynamics of one rigid bar,
///   M b'' + D b' + K b = P (f2 - f1),
/// about (b, b', f1, f2) with the length l held fixed.
struct BarBlocks {
  Eigen::MatrixXd M;  // J I
  Eigen::MatrixXd D;  // (2J/l^2) b b'^T
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;  // (I - b b^T / l^2) / 2
};

BarBlocks bar_blocks(const Eigen::VectorXd& b, const Eigen::VectorXd& b_dot, const Eigen::VectorXd& f1,
                     const Eigen::VectorXd& f2, double J, double l);

/// Second-order model in nodal coordinates:
///   M n'' + D n' + K n = P w + B gamma.
struct Class1Model {
  Eigen::MatrixXd M, D, K, P, B;
  Eigen::MatrixXd K_s;      // d*n x d*sigma
  Eigen::MatrixXd K_gamma;  // d*n x sigma
  // Block-diagonal matrices in [b; r; r_s] coordinates.
  Eigen::MatrixXd M_br, D_br, K_br, P_br;
  Eigen::VectorXd nodal_force;  // the static force the bar blocks were built with
};

/// Linearization about the configuration using the nodal force f =
/// w - string forces (no constraint reactions). Valid for any state; this is
/// what the finite-difference oracle checks.
Class1Model assemble_class1(const Topology& t, const Configuration& c);

/// Same, with the bar blocks built from an explicitly given total nodal
/// force (e.g. StaticForces::nodal_force, which includes reactions).
Class1Model assemble_class1(const Topology& t, const Configuration& c, const Eigen::VectorXd& nodal_force);

/// f~ = w~ - K_s s~ - K_gamma gamma~.
struct StringForceJacobians {
  Eigen::MatrixXd K_s;
  Eigen::MatrixXd K_gamma;
};
StringForceJacobians string_force_jacobians(const Topology& t, const Configuration& c);

/// gamma~ = K_ks s~ + K_cs s'~ - K_ps rho~.
struct StringLinearization {
  Eigen::MatrixXd K_ks;  // sigma x d*sigma
  Eigen::MatrixXd K_cs;  // sigma x d*sigma
  Eigen::MatrixXd K_ps;  // sigma x sigma, diagonal
};
StringLinearization rest_length_jacobians(const Topology& t, const Configuration& c);

/// Force densities from Hooke's law with viscous friction,
///   gamma_i = k_i (1 - rho_i/|s_i|) + c_i s_i's_i' / |s_i|^2.
Eigen::VectorXd string_force_densities(const Topology& t, const Configuration& c,
                                       const Eigen::VectorXd& positions, const Eigen::VectorXd& velocities,
                                       const Eigen::VectorXd& rest_lengths);

/// Open loop with rest lengths as input:
///   M n'' + D_eff n' + K_eff n = P w + B_rho rho.
struct OpenLoopModel {
  Eigen::MatrixXd M, D, K, P, B_rho;
};
OpenLoopModel open_loop_class1(const Topology& t, const Class1Model& m, const StringLinearization& s);

/// Accelerations from the nonlinear rigid-bar equations
///   J b'' + (J/l^2) b |b'|^2 = (f2 - f1)/2 - b b^T (f2 - f1) / (2 l^2)
///   m r'' = f1 + f2,   m_s r_s'' = f_s
/// with f = w - (C_s' (x) I) diag(gamma (x) 1) s. Bar lengths l and the
/// inertias come from the configuration.
struct NonlinearAccelerations {
  Eigen::VectorXd b_ddot;   // d*beta
  Eigen::VectorXd r_ddot;   // d*beta
  Eigen::VectorXd rs_ddot;  // d*point masses
  Eigen::VectorXd n_ddot;   // nodal, T^-1 [b''; r''; r_s'']
  /// T' M_br [b''; r''; r_s''], which the linear model reproduces as
  /// -K n~ - D n'~ + B gamma~ + P w~ (up to the constant part).
  Eigen::VectorXd generalized_force;
};
NonlinearAccelerations nonlinear_oracle(const Topology& t, const Configuration& c,
                                        const Eigen::VectorXd& positions, const Eigen::VectorXd& velocities,
                                        const Eigen::VectorXd& gamma, const Eigen::VectorXd& external_force);

}  // namespace tcd
