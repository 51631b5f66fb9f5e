#include "tcd/linalg.h"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace tcd {

using Eigen::MatrixXd;

Eigen::MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw std::invalid_argument("solve_lyapunov(): dimension mismatch");
  }
  if (n == 0) return MatrixXd(0, 0);
  using Complex = std::complex<double>;
  Eigen::ComplexSchur<MatrixXd> schur(A);
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd C = U.adjoint() * Q.cast<Complex>() * U;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  const double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
  // T Y + Y T^* = -C, solved column by column from the last one.
  for (int j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -C.col(j);
    for (int k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * Y.col(k);
    Eigen::MatrixXcd lhs = T;
    lhs.diagonal().array() += std::conj(T(j, j));
    for (int i = 0; i < n; ++i) {
      if (std::abs(lhs(i, i)) < 1e-14 * scale) {
        throw std::runtime_error("solve_lyapunov(): A has eigenvalues symmetric about the imaginary axis");
      }
    }
    Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  MatrixXd X = (U * Y * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd solve_care(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                          const MatrixXd& R) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || R.rows() != B.cols()) {
    throw std::invalid_argument("solve_care(): dimension mismatch");
  }
  const MatrixXd G = B * R.llt().solve(B.transpose());
  MatrixXd H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();
  // Newton iteration for sign(H) with determinant scaling.
  MatrixXd Z = H;
  const int N = 2 * n;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(Z);
    const MatrixXd Zi = lu.inverse();
    double logdet = 0.0;
    const MatrixXd& luM = lu.matrixLU();
    for (int i = 0; i < N; ++i) logdet += std::log(std::abs(luM(i, i)));
    double c = std::exp(-logdet / N);
    if (!std::isfinite(c) || c <= 0.0) c = 1.0;
    const MatrixXd Zn = 0.5 * (c * Z + Zi / c);
    const double change = (Zn - Z).norm() / std::max(1.0, Zn.norm());
    Z = Zn;
    if (change < 1e-13) {
      converged = true;
      break;
    }
  }
  if (!converged || !Z.allFinite()) {
    throw std::runtime_error("solve_care(): sign iteration did not converge (Hamiltonian has imaginary-axis eigenvalues?)");
  }
  // sign(H) + I has range equal to the unstable invariant subspace; the
  // stabilizing X satisfies [W12; W22 + I] X = -[W11 + I; W21].
  const MatrixXd W11 = Z.topLeftCorner(n, n), W12 = Z.topRightCorner(n, n);
  const MatrixXd W21 = Z.bottomLeftCorner(n, n), W22 = Z.bottomRightCorner(n, n);
  MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << W12, W22 + MatrixXd::Identity(n, n);
  rhs << W11 + MatrixXd::Identity(n, n), W21;
  MatrixXd X = lhs.colPivHouseholderQr().solve(-rhs);
  X = 0.5 * (X + X.transpose());
  if (!X.allFinite()) throw std::runtime_error("solve_care(): non-finite solution");
  return X;
}

double spectral_abscissa(const MatrixXd& A) {
  if (A.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

double spectral_abscissa(const MatrixXd& E, const MatrixXd& A) {
  Eigen::FullPivLU<MatrixXd> lu(E);
  if (!lu.isInvertible()) throw std::runtime_error("spectral_abscissa(): E is singular");
  return spectral_abscissa(lu.solve(A));
}

double rank_tolerance(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(A);
  return std::max(A.rows(), A.cols()) * std::numeric_limits<double>::epsilon() *
         svd.singularValues()(0);
}

Eigen::MatrixXd null_space(const MatrixXd& A) {
  const int cols = static_cast<int>(A.cols());
  if (A.rows() == 0) return MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = std::max(A.rows(), A.cols()) * std::numeric_limits<double>::epsilon() *
                     (s.size() ? s(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  return svd.matrixV().rightCols(cols - rank);
}

void normalize_column_signs(MatrixXd* basis) {
  for (int j = 0; j < basis->cols(); ++j) {
    for (int i = 0; i < basis->rows(); ++i) {
      const double v = (*basis)(i, j);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) basis->col(j) *= -1.0;
        break;
      }
    }
  }
}

Eigen::MatrixXd symmetrize(const MatrixXd& A) { return 0.5 * (A + A.transpose()); }

double max_eigenvalue(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(A), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double min_eigenvalue(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(A), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Eigen::MatrixXd block_diagonal(const std::vector<MatrixXd>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace tcd
