#include <algorithm>
#include <cmath>
#include <iomanip>
#include <stdexcept>

#include "tcd/sdp.h"

namespace tcd {
namespace sdp {

namespace {

double max_abs_entry(const AffineExpr& e) {
  double scale = e.constant().size() > 0 ? e.constant().cwiseAbs().maxCoeff() : 0.0;
  for (const auto& [dof, coeff] : e.terms()) {
    for (int k = 0; k < coeff.outerSize(); ++k) {
      for (AffineExpr::SparseMatrix::InnerIterator it(coeff, k); it; ++it) {
        scale = std::max(scale, std::abs(it.value()));
      }
    }
  }
  return scale;
}

bool is_strict(Sense s) {
  return s == Sense::kNegativeDefinite || s == Sense::kPositiveDefinite;
}

bool is_negative(Sense s) {
  return s == Sense::kNegativeDefinite || s == Sense::kNegativeSemidefinite;
}

const char* kind_name(VariableKind k) {
  switch (k) {
    case VariableKind::kScalar: return "scalar";
    case VariableKind::kVector: return "vector";
    case VariableKind::kSymmetric: return "symmetric";
    case VariableKind::kMatrix: return "matrix";
  }
  return "?";
}

const char* sense_name(Sense s) {
  switch (s) {
    case Sense::kNegativeDefinite: return "< 0";
    case Sense::kPositiveDefinite: return "> 0";
    case Sense::kNegativeSemidefinite: return "<= 0";
    case Sense::kPositiveSemidefinite: return ">= 0";
  }
  return "?";
}

}  // namespace

int Variable::dof_count() const {
  switch (kind) {
    case VariableKind::kScalar: return 1;
    case VariableKind::kVector: return rows;
    case VariableKind::kSymmetric: return rows * (rows + 1) / 2;
    case VariableKind::kMatrix: return rows * cols;
  }
  return 0;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnknown: return "unknown";
  }
  return "unknown";
}

Variable Problem::declare(VariableKind kind, int rows, int cols, std::string name) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("sdp::Problem::declare: dims must be positive");
  if (kind == VariableKind::kScalar && (rows != 1 || cols != 1)) {
    throw std::invalid_argument("sdp::Problem::declare: scalar must be 1x1");
  }
  if (kind == VariableKind::kVector && cols != 1) {
    throw std::invalid_argument("sdp::Problem::declare: vector must have one column");
  }
  if (kind == VariableKind::kSymmetric && rows != cols) {
    throw std::invalid_argument("sdp::Problem::declare: symmetric variable must be square");
  }
  for (const auto& v : variables_) {
    if (v.name == name) throw std::invalid_argument("sdp::Problem::declare: duplicate name '" + name + "'");
  }
  Variable v{std::move(name), kind, rows, cols, dof_count_};
  dof_count_ += v.dof_count();
  variables_.push_back(v);
  return v;
}

const Variable& Problem::variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v;
  }
  throw std::out_of_range("sdp::Problem: no variable named '" + name + "'");
}

AffineExpr Problem::expr(const Variable& v) const {
  AffineExpr out = AffineExpr::Zero(v.rows, v.cols);
  int dof = v.offset;
  if (v.kind == VariableKind::kSymmetric) {
    for (int j = 0; j < v.cols; ++j) {
      for (int i = 0; i <= j; ++i) {
        AffineExpr::SparseMatrix c(v.rows, v.cols);
        c.insert(i, j) = 1.0;
        if (i != j) c.insert(j, i) = 1.0;
        out += AffineExpr::Dof(dof++, c);
      }
    }
    return out;
  }
  for (int j = 0; j < v.cols; ++j) {
    for (int i = 0; i < v.rows; ++i) {
      AffineExpr::SparseMatrix c(v.rows, v.cols);
      c.insert(i, j) = 1.0;
      out += AffineExpr::Dof(dof++, c);
    }
  }
  return out;
}

void Problem::add_lmi(const AffineExpr& expr, Sense sense, std::string label,
                      double absolute_margin) {
  if (expr.rows() != expr.cols() || expr.rows() == 0) {
    throw std::invalid_argument("sdp::Problem::add_lmi: expression must be square and non-empty");
  }
  const double scale = std::max(max_abs_entry(expr), 1e-300);
  const double tol = 1e-10 * scale;
  if ((expr.constant() - expr.constant().transpose()).cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("sdp::Problem::add_lmi: non-symmetric constant block in '" + label + "'");
  }
  for (const auto& [dof, coeff] : expr.terms()) {
    if (dof >= dof_count_) throw std::invalid_argument("sdp::Problem::add_lmi: undeclared dof");
    AffineExpr::SparseMatrix diff = coeff - AffineExpr::SparseMatrix(coeff.transpose());
    for (int k = 0; k < diff.outerSize(); ++k) {
      for (AffineExpr::SparseMatrix::InnerIterator it(diff, k); it; ++it) {
        if (std::abs(it.value()) > tol) {
          throw std::invalid_argument("sdp::Problem::add_lmi: non-symmetric coefficient in '" + label + "'");
        }
      }
    }
  }
  double margin = 0.0;
  if (is_strict(sense)) {
    margin = absolute_margin >= 0.0 ? absolute_margin : relative_margin_ * scale;
  }
  constraints_.push_back(Constraint{expr, sense, std::move(label), margin});
}

void Problem::minimize(const AffineExpr& objective) {
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw std::invalid_argument("sdp::Problem::minimize: objective must be scalar");
  }
  for (const auto& [dof, coeff] : objective.terms()) {
    if (dof >= dof_count_) throw std::invalid_argument("sdp::Problem::minimize: undeclared dof");
  }
  objective_ = objective;
}

void Problem::dump(std::ostream& os) const {
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  os << "variables " << variables_.size() << " dofs " << dof_count_ << "\n";
  for (const auto& v : variables_) {
    os << "var " << v.name << " " << kind_name(v.kind) << " " << v.rows << " " << v.cols
       << " offset " << v.offset << "\n";
  }
  os << "objective constant " << objective_.constant()(0, 0) << "\n";
  for (const auto& [dof, coeff] : objective_.terms()) {
    os << "  c[" << dof << "] = " << Eigen::MatrixXd(coeff)(0, 0) << "\n";
  }
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    os << "constraint " << i << " '" << c.label << "' size " << c.expr.rows() << " sense "
       << sense_name(c.sense) << " margin " << c.margin << "\n";
    os << "  F0 =\n" << c.expr.constant() << "\n";
    for (const auto& [dof, coeff] : c.expr.terms()) {
      os << "  F[" << dof << "] =\n" << Eigen::MatrixXd(coeff) << "\n";
    }
  }
  os.precision(old_precision);
}

Eigen::MatrixXd Solution::value(const Variable& v) const {
  Eigen::MatrixXd out(v.rows, v.cols);
  int dof = v.offset;
  if (v.kind == VariableKind::kSymmetric) {
    for (int j = 0; j < v.cols; ++j) {
      for (int i = 0; i <= j; ++i) {
        out(i, j) = x(dof);
        out(j, i) = x(dof);
        ++dof;
      }
    }
    return out;
  }
  for (int j = 0; j < v.cols; ++j) {
    for (int i = 0; i < v.rows; ++i) out(i, j) = x(dof++);
  }
  return out;
}

double constraint_violation(const Constraint& c, const Eigen::VectorXd& x) {
  Eigen::MatrixXd value = c.expr.evaluate(x);
  value = 0.5 * (value + value.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(value, Eigen::EigenvaluesOnly);
  const double extreme = is_negative(c.sense) ? eig.eigenvalues().maxCoeff()
                                              : -eig.eigenvalues().minCoeff();
  if (is_strict(c.sense)) return extreme + 0.5 * c.margin;
  // Non-strict: allow round-off at the solver's feasibility tolerance.
  return extreme - 1e-9 * std::max(1.0, max_abs_entry(c.expr));
}

}  // namespace sdp
}  // namespace tcd
