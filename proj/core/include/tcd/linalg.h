#pragma once

#include <vector>

#include <Eigen/Dense>

namespace tcd {

/// Solves A X + X A' + Q = 0 for X (Bartels-Stewart on the complex Schur
/// form). A must have no pair of eigenvalues with l_i + conj(l_j) = 0.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Stabilizing solution of A'X + XA - X B R^-1 B' X + Q = 0, via the matrix
/// sign function of the Hamiltonian. Throws if (A, B) is not stabilizable
/// enough for the iteration to converge.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// max Re(eig(A)).
double spectral_abscissa(const Eigen::MatrixXd& A);

/// max Re(eig(E^-1 A)); throws if E is singular.
double spectral_abscissa(const Eigen::MatrixXd& E, const Eigen::MatrixXd& A);

/// Numerical-rank tolerance max(rows, cols) * eps * sigma_max.
double rank_tolerance(const Eigen::MatrixXd& A);

/// Orthonormal basis of ker(A) from the SVD; columns with singular values
/// below rank_tolerance(A) count as null directions.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& A);

/// Flips the sign of each column so its first entry with magnitude above
/// 1e-12 is positive.
void normalize_column_signs(Eigen::MatrixXd* basis);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A);

/// Extreme eigenvalues of the symmetric part of A.
double max_eigenvalue(const Eigen::MatrixXd& A);
double min_eigenvalue(const Eigen::MatrixXd& A);

Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks);

}  // namespace tcd
