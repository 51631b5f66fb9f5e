#include <stdexcept>
#include <string>

#include "tcd/sdp.h"

namespace tcd {
namespace sdp {

namespace {

using SparseMatrix = AffineExpr::SparseMatrix;
using Triplet = Eigen::Triplet<double>;

void check_same_shape(const AffineExpr& a, const AffineExpr& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("AffineExpr ") + op + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

SparseMatrix to_sparse(const Eigen::MatrixXd& dense) {
  SparseMatrix out = dense.sparseView(1.0, 0.0);
  out.makeCompressed();
  return out;
}

}  // namespace

AffineExpr::AffineExpr(Eigen::MatrixXd constant) : constant_(std::move(constant)) {}

AffineExpr::AffineExpr(double constant) : constant_(Eigen::MatrixXd::Constant(1, 1, constant)) {}

AffineExpr AffineExpr::Zero(int rows, int cols) {
  return AffineExpr(Eigen::MatrixXd::Zero(rows, cols));
}

AffineExpr AffineExpr::Identity(int n, double scale) {
  return AffineExpr(Eigen::MatrixXd::Identity(n, n) * scale);
}

AffineExpr AffineExpr::Dof(int dof, const SparseMatrix& coefficient) {
  AffineExpr e = Zero(static_cast<int>(coefficient.rows()), static_cast<int>(coefficient.cols()));
  if (coefficient.nonZeros() > 0) e.terms_.emplace(dof, coefficient);
  return e;
}

AffineExpr AffineExpr::Block(const std::vector<std::vector<AffineExpr>>& blocks) {
  if (blocks.empty() || blocks.front().empty()) return AffineExpr();
  const std::size_t block_rows = blocks.size();
  const std::size_t block_cols = blocks.front().size();
  std::vector<int> row_size(block_rows), col_size(block_cols);
  for (std::size_t i = 0; i < block_rows; ++i) {
    if (blocks[i].size() != block_cols) {
      throw std::invalid_argument("AffineExpr::Block: ragged block grid");
    }
    row_size[i] = blocks[i][0].rows();
  }
  for (std::size_t j = 0; j < block_cols; ++j) col_size[j] = blocks[0][j].cols();
  for (std::size_t i = 0; i < block_rows; ++i) {
    for (std::size_t j = 0; j < block_cols; ++j) {
      if (blocks[i][j].rows() != row_size[i] || blocks[i][j].cols() != col_size[j]) {
        throw std::invalid_argument("AffineExpr::Block: block (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") has inconsistent shape");
      }
    }
  }
  int total_rows = 0, total_cols = 0;
  std::vector<int> row_off(block_rows), col_off(block_cols);
  for (std::size_t i = 0; i < block_rows; ++i) {
    row_off[i] = total_rows;
    total_rows += row_size[i];
  }
  for (std::size_t j = 0; j < block_cols; ++j) {
    col_off[j] = total_cols;
    total_cols += col_size[j];
  }

  AffineExpr out = Zero(total_rows, total_cols);
  std::map<int, std::vector<Triplet>> triplets;
  for (std::size_t i = 0; i < block_rows; ++i) {
    for (std::size_t j = 0; j < block_cols; ++j) {
      const AffineExpr& b = blocks[i][j];
      if (b.rows() == 0 || b.cols() == 0) continue;
      out.constant_.block(row_off[i], col_off[j], b.rows(), b.cols()) = b.constant_;
      for (const auto& [dof, coeff] : b.terms_) {
        auto& list = triplets[dof];
        for (int k = 0; k < coeff.outerSize(); ++k) {
          for (SparseMatrix::InnerIterator it(coeff, k); it; ++it) {
            list.emplace_back(row_off[i] + static_cast<int>(it.row()),
                              col_off[j] + static_cast<int>(it.col()), it.value());
          }
        }
      }
    }
  }
  for (auto& [dof, list] : triplets) {
    SparseMatrix m(total_rows, total_cols);
    m.setFromTriplets(list.begin(), list.end());
    m.prune(0.0);
    if (m.nonZeros() > 0) out.terms_.emplace(dof, std::move(m));
  }
  return out;
}

AffineExpr AffineExpr::BlockDiagonal(const std::vector<AffineExpr>& blocks) {
  std::vector<std::vector<AffineExpr>> grid(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      grid[i].push_back(i == j ? blocks[i] : Zero(blocks[i].rows(), blocks[j].cols()));
    }
  }
  return Block(grid);
}

AffineExpr AffineExpr::Diagonal(const AffineExpr& column) {
  if (column.cols() != 1) throw std::invalid_argument("AffineExpr::Diagonal: expects a column");
  const int n = column.rows();
  AffineExpr out(Eigen::MatrixXd(column.constant_.col(0).asDiagonal()));
  for (const auto& [dof, coeff] : column.terms_) {
    std::vector<Triplet> list;
    for (SparseMatrix::InnerIterator it(coeff, 0); it; ++it) {
      list.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.row()), it.value());
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(list.begin(), list.end());
    out.terms_.emplace(dof, std::move(m));
  }
  return out;
}

AffineExpr AffineExpr::ScalarTimes(const AffineExpr& s, const Eigen::MatrixXd& m) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("AffineExpr::ScalarTimes: expects 1x1");
  AffineExpr out(Eigen::MatrixXd(s.constant_(0, 0) * m));
  const SparseMatrix ms = to_sparse(m);
  for (const auto& [dof, coeff] : s.terms_) {
    const double v = SparseMatrix(coeff).coeff(0, 0);
    if (v != 0.0 && ms.nonZeros() > 0) out.terms_.emplace(dof, SparseMatrix(v * ms));
  }
  return out;
}

AffineExpr AffineExpr::transpose() const {
  AffineExpr out(Eigen::MatrixXd(constant_.transpose()));
  for (const auto& [dof, coeff] : terms_) out.terms_.emplace(dof, SparseMatrix(coeff.transpose()));
  return out;
}

AffineExpr AffineExpr::trace() const {
  if (rows() != cols()) throw std::invalid_argument("AffineExpr::trace: not square");
  return inner(Eigen::MatrixXd::Identity(rows(), cols()));
}

AffineExpr AffineExpr::entry(int i, int j) const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(rows(), cols());
  w(i, j) = 1.0;
  return inner(w);
}

AffineExpr AffineExpr::inner(const Eigen::MatrixXd& weights) const {
  if (weights.rows() != rows() || weights.cols() != cols()) {
    throw std::invalid_argument("AffineExpr::inner: shape mismatch");
  }
  AffineExpr out((constant_.array() * weights.array()).sum());
  for (const auto& [dof, coeff] : terms_) {
    double v = 0.0;
    for (int k = 0; k < coeff.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(coeff, k); it; ++it) {
        v += it.value() * weights(it.row(), it.col());
      }
    }
    if (v != 0.0) {
      SparseMatrix m(1, 1);
      m.insert(0, 0) = v;
      out.terms_.emplace(dof, std::move(m));
    }
  }
  return out;
}

Eigen::MatrixXd AffineExpr::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out = constant_;
  for (const auto& [dof, coeff] : terms_) {
    if (dof >= x.size()) throw std::out_of_range("AffineExpr::evaluate: dof out of range");
    if (x(dof) != 0.0) out += x(dof) * Eigen::MatrixXd(coeff);
  }
  return out;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  check_same_shape(*this, other, "+");
  constant_ += other.constant_;
  for (const auto& [dof, coeff] : other.terms_) {
    auto it = terms_.find(dof);
    if (it == terms_.end()) {
      terms_.emplace(dof, coeff);
    } else {
      it->second += coeff;
      it->second.prune(0.0);
      if (it->second.nonZeros() == 0) terms_.erase(it);
    }
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) { return *this += (-1.0) * other; }

AffineExpr& AffineExpr::operator*=(double scale) {
  constant_ *= scale;
  if (scale == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [dof, coeff] : terms_) coeff *= scale;
  return *this;
}

AffineExpr operator*(const Eigen::MatrixXd& left, const AffineExpr& e) {
  if (left.cols() != e.rows()) throw std::invalid_argument("AffineExpr: left product shape mismatch");
  AffineExpr out(Eigen::MatrixXd(left * e.constant_));
  for (const auto& [dof, coeff] : e.terms_) {
    SparseMatrix m = to_sparse(left * coeff);
    if (m.nonZeros() > 0) out.terms_.emplace(dof, std::move(m));
  }
  return out;
}

AffineExpr operator*(const AffineExpr& e, const Eigen::MatrixXd& right) {
  if (e.cols() != right.rows()) throw std::invalid_argument("AffineExpr: right product shape mismatch");
  AffineExpr out(Eigen::MatrixXd(e.constant_ * right));
  for (const auto& [dof, coeff] : e.terms_) {
    SparseMatrix m = to_sparse(coeff * right);
    if (m.nonZeros() > 0) out.terms_.emplace(dof, std::move(m));
  }
  return out;
}

}  // namespace sdp
}  // namespace tcd
