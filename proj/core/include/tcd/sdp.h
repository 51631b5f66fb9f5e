#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace tcd {
namespace sdp {

/// A matrix-valued expression that is affine in the scalar decision
/// variables ("dofs") of a Problem:  E(x) = C + sum_k x_k F_k.
///
/// Coefficients are stored sparse; the constant is dense. Expressions of
/// any shape can be combined with the usual operators, multiplied by
/// constant matrices on either side and assembled into block matrices, so
/// LMIs can be written down the way they appear on paper.
class AffineExpr {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using TermMap = std::map<int, SparseMatrix>;

  AffineExpr() = default;
  explicit AffineExpr(Eigen::MatrixXd constant);
  AffineExpr(double constant);  // NOLINT: 1x1 convenience

  static AffineExpr Zero(int rows, int cols);
  static AffineExpr Identity(int n, double scale = 1.0);
  /// Single-dof expression: x_dof * coefficient.
  static AffineExpr Dof(int dof, const SparseMatrix& coefficient);

  /// Assemble from a grid of blocks. Every block in a row must share its row
  /// count and every block in a column its column count.
  static AffineExpr Block(const std::vector<std::vector<AffineExpr>>& blocks);
  static AffineExpr BlockDiagonal(const std::vector<AffineExpr>& blocks);
  /// Diagonal matrix whose entries are the entries of a column expression.
  static AffineExpr Diagonal(const AffineExpr& column);
  /// s * m for a 1x1 expression s and a constant matrix m.
  static AffineExpr ScalarTimes(const AffineExpr& s, const Eigen::MatrixXd& m);

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Eigen::MatrixXd& constant() const { return constant_; }
  const TermMap& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  AffineExpr transpose() const;
  AffineExpr trace() const;
  /// (i, j) entry as a 1x1 expression.
  AffineExpr entry(int i, int j) const;
  /// Linear functional sum_ij weights(i, j) * E(i, j) as a 1x1 expression.
  AffineExpr inner(const Eigen::MatrixXd& weights) const;

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double scale);

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
  friend AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator*(const Eigen::MatrixXd& left, const AffineExpr& e);
  friend AffineExpr operator*(const AffineExpr& e, const Eigen::MatrixXd& right);

 private:
  Eigen::MatrixXd constant_;
  TermMap terms_;
};

enum class VariableKind { kScalar, kVector, kSymmetric, kMatrix };

/// Handle to a declared variable; dofs [offset, offset + dof_count) belong
/// to it.
struct Variable {
  std::string name;
  VariableKind kind = VariableKind::kScalar;
  int rows = 1;
  int cols = 1;
  int offset = 0;
  int dof_count() const;
};

enum class Sense {
  kNegativeDefinite,     // E(x) <= -margin * I
  kPositiveDefinite,     // E(x) >= +margin * I
  kNegativeSemidefinite,  // E(x) <= 0
  kPositiveSemidefinite,  // E(x) >= 0
};

struct Constraint {
  AffineExpr expr;
  Sense sense = Sense::kNegativeDefinite;
  std::string label;
  double margin = 0.0;  // absolute, already scaled
};

class Problem {
 public:
  /// Relative strictness margin; the absolute margin of a strict constraint
  /// is relative_margin * (largest entry among its constant/coefficients).
  static constexpr double kDefaultRelativeMargin = 1e-7;

  Variable declare(VariableKind kind, int rows, int cols, std::string name);
  Variable scalar(std::string name) { return declare(VariableKind::kScalar, 1, 1, std::move(name)); }
  Variable vector(int n, std::string name) { return declare(VariableKind::kVector, n, 1, std::move(name)); }
  Variable symmetric(int n, std::string name) { return declare(VariableKind::kSymmetric, n, n, std::move(name)); }
  Variable matrix(int rows, int cols, std::string name) {
    return declare(VariableKind::kMatrix, rows, cols, std::move(name));
  }

  /// Matrix-shaped expression of a variable (rows x cols).
  AffineExpr expr(const Variable& v) const;

  /// Registers expr (square, symmetric) with the given sense. If
  /// absolute_margin < 0 the margin is derived from relative_margin().
  void add_lmi(const AffineExpr& expr, Sense sense, std::string label = {},
               double absolute_margin = -1.0);
  void minimize(const AffineExpr& objective);

  void set_relative_margin(double m) { relative_margin_ = m; }
  double relative_margin() const { return relative_margin_; }

  int dof_count() const { return dof_count_; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const AffineExpr& objective() const { return objective_; }
  const Variable& variable(const std::string& name) const;

  /// Text dump: variables, dense constraint blocks and objective.
  void dump(std::ostream& os) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  AffineExpr objective_ = AffineExpr(0.0);
  int dof_count_ = 0;
  double relative_margin_ = kDefaultRelativeMargin;
};

enum class Status { kOptimal, kInfeasible, kUnknown };
const char* to_string(Status s);

struct SolverOptions {
  int max_iterations = 120;
  double gap_tolerance = 1e-10;
  double feasibility_tolerance = 1e-10;
  double infeasibility_tolerance = 1e-8;
  double step_fraction = 0.98;
  bool verbose = false;
};

struct Solution {
  Status status = Status::kUnknown;
  /// For kUnknown, the best iterate met along the way that satisfies its
  /// constraints up to solver round-off; check max_violation before use.
  Eigen::VectorXd x;
  double objective = 0.0;
  double dual_objective = 0.0;
  /// max over constraints of (signed extreme eigenvalue + margin / 2); an
  /// Optimal solution has this <= 0.
  double max_violation = 0.0;
  int iterations = 0;
  std::string message;

  Eigen::MatrixXd value(const Variable& v) const;
  double scalar(const Variable& v) const { return value(v)(0, 0); }
  Eigen::MatrixXd value(const AffineExpr& e) const { return e.evaluate(x); }
};

Solution solve(const Problem& problem, const SolverOptions& options = {});

/// Signed violation of one constraint at x: lambda_max(E) + margin/2 for the
/// negative senses, -lambda_min(E) + margin/2 for the positive ones.
double constraint_violation(const Constraint& c, const Eigen::VectorXd& x);

}  // namespace sdp
}  // namespace tcd
