// Primal-dual interior-point method for the LMI problems built by
// sdp::Problem.
//
// Every constraint is normalized to   S_j(y) = G_j - sum_k y_k A_jk  >= 0
// (y = the problem's dofs) and the objective  min c'y  to  max b'y, b = -c.
// That is the dual form of the standard pair
//
//   (P)  min <G, X>  s.t.  <A_k, X> = b_k,  X >= 0
//   (D)  max b'y     s.t.  sum_k y_k A_k + S = G,  S >= 0
//
// solved with the HKM search direction, Mehrotra predictor-corrector and an
// infeasible starting point. 1x1 constraints are grouped into one diagonal
// (linear-programming) block.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "tcd/sdp.h"

namespace tcd {
namespace sdp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Entry {
  int row;
  int col;
  double value;
};

struct Coefficient {
  int dof;                    // index into the reduced dof vector
  std::vector<Entry> entries;  // full symmetric storage
  std::vector<int> cols;       // distinct columns touched
  double frobenius = 0.0;
};

struct SdpBlock {
  int n = 0;
  MatrixXd g;
  std::vector<Coefficient> coeffs;
};

struct LpBlock {
  VectorXd g;
  // per reduced dof: (row, value)
  std::vector<std::vector<std::pair<int, double>>> a;
  int size() const { return static_cast<int>(g.size()); }
};

struct Normalized {
  std::vector<SdpBlock> blocks;
  LpBlock lp;
  VectorXd b;                 // reduced objective (maximize)
  std::vector<int> reduced_to_dof;
  int total_order = 0;        // sum of block orders incl. LP rows
};

bool is_negative(Sense s) {
  return s == Sense::kNegativeDefinite || s == Sense::kNegativeSemidefinite;
}

Normalized normalize(const Problem& problem, std::string* message, bool* unbounded) {
  const int ndof = problem.dof_count();
  std::vector<char> used(ndof, 0);
  for (const auto& c : problem.constraints()) {
    for (const auto& [dof, coeff] : c.expr.terms()) used[dof] = 1;
  }
  VectorXd cost = VectorXd::Zero(ndof);
  for (const auto& [dof, coeff] : problem.objective().terms()) {
    cost(dof) = Eigen::MatrixXd(coeff)(0, 0);
  }

  Normalized out;
  std::vector<int> dof_to_reduced(ndof, -1);
  for (int k = 0; k < ndof; ++k) {
    if (used[k]) {
      dof_to_reduced[k] = static_cast<int>(out.reduced_to_dof.size());
      out.reduced_to_dof.push_back(k);
    } else if (cost(k) != 0.0) {
      *unbounded = true;
      *message = "objective depends on a dof that appears in no constraint";
    }
  }
  const int m = static_cast<int>(out.reduced_to_dof.size());
  out.b.resize(m);
  for (int r = 0; r < m; ++r) out.b(r) = -cost(out.reduced_to_dof[r]);

  std::vector<double> lp_g;
  out.lp.a.assign(m, {});
  for (const auto& c : problem.constraints()) {
    // sign so that the normalized slack is  sign*E(x) - margin*I.
    const double sign = is_negative(c.sense) ? -1.0 : 1.0;
    const int n = c.expr.rows();
    MatrixXd g = sign * c.expr.constant();
    g.diagonal().array() -= c.margin;
    // scale so the largest entry is one
    double scale = g.cwiseAbs().maxCoeff();
    for (const auto& [dof, coeff] : c.expr.terms()) {
      for (int k = 0; k < coeff.outerSize(); ++k) {
        for (AffineExpr::SparseMatrix::InnerIterator it(coeff, k); it; ++it) {
          scale = std::max(scale, std::abs(it.value()));
        }
      }
    }
    scale = scale > 0.0 ? 1.0 / scale : 1.0;
    g *= scale;
    // S = G - sum y A  with  A = -sign*scale*F
    if (n == 1) {
      const int row = static_cast<int>(lp_g.size());
      lp_g.push_back(g(0, 0));
      for (const auto& [dof, coeff] : c.expr.terms()) {
        const double v = -sign * scale * Eigen::MatrixXd(coeff)(0, 0);
        if (v != 0.0) out.lp.a[dof_to_reduced[dof]].emplace_back(row, v);
      }
      continue;
    }
    SdpBlock block;
    block.n = n;
    block.g = 0.5 * (g + g.transpose());
    for (const auto& [dof, coeff] : c.expr.terms()) {
      Coefficient cf;
      cf.dof = dof_to_reduced[dof];
      std::vector<char> col_used(n, 0);
      for (int k = 0; k < coeff.outerSize(); ++k) {
        for (AffineExpr::SparseMatrix::InnerIterator it(coeff, k); it; ++it) {
          const double v = -sign * scale * it.value();
          cf.entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), v});
          col_used[it.col()] = 1;
          cf.frobenius += v * v;
        }
      }
      cf.frobenius = std::sqrt(cf.frobenius);
      for (int j = 0; j < n; ++j) {
        if (col_used[j]) cf.cols.push_back(j);
      }
      if (!cf.entries.empty()) block.coeffs.push_back(std::move(cf));
    }
    out.total_order += n;
    out.blocks.push_back(std::move(block));
  }
  out.lp.g = Eigen::Map<VectorXd>(lp_g.data(), static_cast<Eigen::Index>(lp_g.size()));
  out.total_order += out.lp.size();
  return out;
}

// A(Z)_k = <A_k, Z>
void apply_block(const SdpBlock& blk, const MatrixXd& z, VectorXd* out) {
  for (const auto& cf : blk.coeffs) {
    double v = 0.0;
    for (const auto& e : cf.entries) v += e.value * z(e.row, e.col);
    (*out)(cf.dof) += v;
  }
}

MatrixXd adjoint_block(const SdpBlock& blk, const VectorXd& y) {
  MatrixXd out = MatrixXd::Zero(blk.n, blk.n);
  for (const auto& cf : blk.coeffs) {
    const double yk = y(cf.dof);
    if (yk == 0.0) continue;
    for (const auto& e : cf.entries) out(e.row, e.col) += yk * e.value;
  }
  return out;
}

void apply_lp(const LpBlock& lp, const VectorXd& z, VectorXd* out) {
  for (std::size_t k = 0; k < lp.a.size(); ++k) {
    double v = 0.0;
    for (const auto& [row, a] : lp.a[k]) v += a * z(row);
    (*out)(static_cast<Eigen::Index>(k)) += v;
  }
}

VectorXd adjoint_lp(const LpBlock& lp, const VectorXd& y) {
  VectorXd out = VectorXd::Zero(lp.size());
  for (std::size_t k = 0; k < lp.a.size(); ++k) {
    for (const auto& [row, a] : lp.a[k]) out(row) += y(static_cast<Eigen::Index>(k)) * a;
  }
  return out;
}

// Adds the HKM Schur complement of one block: M_kl += <A_k, X A_l S^-1>.
void accumulate_schur(const SdpBlock& blk, const MatrixXd& x, const MatrixXd& s_inv, MatrixXd* m) {
  const int n = blk.n;
  MatrixXd xa, p;
  for (std::size_t pi = 0; pi < blk.coeffs.size(); ++pi) {
    const auto& cp = blk.coeffs[pi];
    const int nc = static_cast<int>(cp.cols.size());
    // column position lookup
    std::vector<int> pos(n, -1);
    for (int j = 0; j < nc; ++j) pos[cp.cols[j]] = j;
    xa.setZero(n, nc);
    for (const auto& e : cp.entries) xa.col(pos[e.col]) += e.value * x.col(e.row);
    MatrixXd s_rows(nc, n);
    for (int j = 0; j < nc; ++j) s_rows.row(j) = s_inv.row(cp.cols[j]);
    p.noalias() = xa * s_rows;
    for (std::size_t qi = pi; qi < blk.coeffs.size(); ++qi) {
      const auto& cq = blk.coeffs[qi];
      double v = 0.0;
      for (const auto& e : cq.entries) v += e.value * p(e.row, e.col);
      (*m)(cp.dof, cq.dof) += v;
      if (qi != pi) (*m)(cq.dof, cp.dof) += v;
    }
  }
}

// Largest alpha in (0, inf] with  x + alpha*dx >= 0  given chol(x) = l l'.
double max_step(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& dx) {
  MatrixXd w = llt.matrixL().solve(dx);
  w = llt.matrixL().solve(w.transpose()).transpose();
  w = 0.5 * (w + w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(w, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_step_lp(const VectorXd& x, const VectorXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

MatrixXd sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

struct Iterate {
  std::vector<MatrixXd> x, s;
  VectorXd xl, sl;
  VectorXd y;
};

// Reduced-accuracy acceptance for runs that stall short of the tolerances.
constexpr double kReducedGap = 1e-6;
constexpr double kReducedDinf = 1e-8;

class InteriorPoint {
 public:
  InteriorPoint(const Normalized& data, const SolverOptions& opt) : d_(data), opt_(opt) {
    m_ = static_cast<int>(d_.b.size());
    std::vector<std::vector<std::pair<int, double>>> rows(d_.lp.size());
    for (int k = 0; k < m_; ++k) {
      for (const auto& [row, a] : d_.lp.a[k]) rows[row].emplace_back(k, a);
    }
    for (int r = 0; r < d_.lp.size(); ++r) {
      if (!rows[r].empty()) lp_rows_.emplace_back(r, std::move(rows[r]));
    }
  }

  Solution run() {
    Solution sol;
    initialize();
    const double b_norm = d_.b.norm();
    double g_norm_sq = d_.lp.g.squaredNorm();
    for (const auto& blk : d_.blocks) g_norm_sq += blk.g.squaredNorm();
    const double g_norm = std::sqrt(g_norm_sq);

    double last_pinf = 0, last_dinf = 0, last_gap = 0;
    // Best iterate whose slack matches its LMIs; it is returned when the
    // run stops short of the tolerances.
    VectorXd best_y, accurate_y;
    double best_dobj = -std::numeric_limits<double>::infinity();
    // Iterate with the smallest max(gap, pinf) among those with matching
    // slack; near the optimum round-off can make later iterates worse.
    double accurate_merit = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter <= opt_.max_iterations; ++iter) {
      sol.iterations = iter;
      // residuals
      VectorXd rp = d_.b;
      std::vector<MatrixXd> rd(d_.blocks.size());
      double rd_norm_sq = 0.0, pobj = 0.0, xs = 0.0;
      for (std::size_t j = 0; j < d_.blocks.size(); ++j) {
        const auto& blk = d_.blocks[j];
        VectorXd ax = VectorXd::Zero(m_);
        apply_block(blk, it_.x[j], &ax);
        rp -= ax;
        rd[j] = blk.g - it_.s[j] - adjoint_block(blk, it_.y);
        rd_norm_sq += rd[j].squaredNorm();
        pobj += (blk.g.array() * it_.x[j].array()).sum();
        xs += (it_.x[j].array() * it_.s[j].array()).sum();
      }
      VectorXd rdl = d_.lp.g - it_.sl - adjoint_lp(d_.lp, it_.y);
      {
        VectorXd ax = VectorXd::Zero(m_);
        apply_lp(d_.lp, it_.xl, &ax);
        rp -= ax;
      }
      rd_norm_sq += rdl.squaredNorm();
      pobj += d_.lp.g.dot(it_.xl);
      xs += it_.xl.dot(it_.sl);
      const double dobj = d_.b.dot(it_.y);
      const double mu = xs / std::max(1, d_.total_order);
      const double pinf = rp.norm() / (1.0 + b_norm);
      const double dinf = std::sqrt(rd_norm_sq) / (1.0 + g_norm);
      const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      last_pinf = pinf;
      last_dinf = dinf;
      last_gap = gap;
      if (dinf < opt_.feasibility_tolerance && dobj > best_dobj) {
        best_dobj = dobj;
        best_y = it_.y;
      }
      if (dinf < kReducedDinf && std::max(gap, pinf) < accurate_merit) {
        accurate_merit = std::max(gap, pinf);
        accurate_y = it_.y;
      }
      // Diverging after reaching reduced accuracy: stop early.
      if (accurate_merit < kReducedGap && pinf > 1e3 * accurate_merit) {
        sol.message = "stalled after reaching reduced accuracy";
        break;
      }
      if (opt_.verbose) {
        std::cerr << "ipm " << iter << " pobj " << pobj << " dobj " << dobj << " gap " << gap
                  << " pinf " << pinf << " dinf " << dinf << " mu " << mu << "\n";
      }
      if (gap < opt_.gap_tolerance && pinf < opt_.feasibility_tolerance &&
          dinf < opt_.feasibility_tolerance) {
        sol.status = Status::kOptimal;
        sol.message = "converged";
        break;
      }
      // Primal improving ray => the LMI system is infeasible.
      if (pobj < 0.0) {
        VectorXd ax = d_.b - rp;  // A(X)
        if (ax.norm() <= opt_.infeasibility_tolerance * (-pobj) && dinf > opt_.feasibility_tolerance) {
          sol.status = Status::kInfeasible;
          sol.message = "primal ray certifies infeasibility";
          break;
        }
      }
      if (it_.y.norm() > 1e12 * (1.0 + b_norm) && dinf < 1e-6) {
        sol.status = Status::kUnknown;
        sol.message = "objective appears unbounded";
        break;
      }
      if (iter == opt_.max_iterations) {
        sol.message = "iteration limit";
        break;
      }
      if (!step(rd, rdl, mu)) {
        sol.message = "numerical failure in search direction";
        break;
      }
    }
    // A stalled run close to the optimum is still useful; the plug-back check
    // after solve() guards feasibility of the returned point.
    sol.x = it_.y;
    if (sol.status == Status::kUnknown && last_gap < kReducedGap && last_pinf < kReducedGap &&
        last_dinf < kReducedDinf) {
      sol.status = Status::kOptimal;
      sol.message += " (accepted at reduced accuracy)";
    } else if (sol.status == Status::kUnknown && accurate_merit < kReducedGap) {
      sol.status = Status::kOptimal;
      sol.x = accurate_y;
      sol.message += " (best iterate accepted at reduced accuracy)";
    } else if (sol.status == Status::kUnknown && best_y.size() == m_) {
      sol.x = best_y;
    }
    sol.dual_objective = d_.b.dot(sol.x);
    return sol;
  }

 private:
  void initialize() {
    it_.y = VectorXd::Zero(m_);
    it_.x.clear();
    it_.s.clear();
    for (const auto& blk : d_.blocks) {
      const double n = blk.n;
      double ratio = 0.0, anorm = 0.0;
      for (const auto& cf : blk.coeffs) {
        ratio = std::max(ratio, (1.0 + std::abs(d_.b(cf.dof))) / (1.0 + cf.frobenius));
        anorm = std::max(anorm, cf.frobenius);
      }
      const double xi = std::max({10.0, std::sqrt(n), n * ratio});
      const double eta = std::max({10.0, std::sqrt(n), anorm, blk.g.norm()});
      it_.x.push_back(MatrixXd::Identity(blk.n, blk.n) * xi);
      it_.s.push_back(MatrixXd::Identity(blk.n, blk.n) * eta);
    }
    const int nl = d_.lp.size();
    double ratio = 0.0, anorm = 0.0;
    for (int k = 0; k < m_; ++k) {
      double f = 0.0;
      for (const auto& [row, a] : d_.lp.a[k]) f += a * a;
      f = std::sqrt(f);
      if (f > 0.0) {
        ratio = std::max(ratio, (1.0 + std::abs(d_.b(k))) / (1.0 + f));
        anorm = std::max(anorm, f);
      }
    }
    const double xi = std::max({10.0, std::sqrt(double(nl)), ratio});
    const double eta = std::max({10.0, anorm, d_.lp.g.size() ? d_.lp.g.cwiseAbs().maxCoeff() : 0.0});
    it_.xl = VectorXd::Constant(nl, xi);
    it_.sl = VectorXd::Constant(nl, eta);
  }

  bool step(const std::vector<MatrixXd>& rd, const VectorXd& rdl, double mu) {
    const std::size_t nb = d_.blocks.size();
    std::vector<MatrixXd> s_inv(nb);
    std::vector<Eigen::LLT<MatrixXd>> x_chol(nb), s_chol(nb);
    MatrixXd schur = MatrixXd::Zero(m_, m_);
    for (std::size_t j = 0; j < nb; ++j) {
      s_chol[j].compute(it_.s[j]);
      x_chol[j].compute(it_.x[j]);
      if (s_chol[j].info() != Eigen::Success || x_chol[j].info() != Eigen::Success) return false;
      s_inv[j] = s_chol[j].solve(MatrixXd::Identity(d_.blocks[j].n, d_.blocks[j].n));
      s_inv[j] = sym(s_inv[j]);
      accumulate_schur(d_.blocks[j], it_.x[j], s_inv[j], &schur);
    }
    const VectorXd lp_ratio = it_.xl.cwiseQuotient(it_.sl);
    for (const auto& row : lp_rows_) {
      for (const auto& [k, ak] : row.second) {
        for (const auto& [l, al] : row.second) schur(k, l) += ak * al * lp_ratio(row.first);
      }
    }
    // Factor, with a growing diagonal shift if the Schur matrix is
    // numerically singular.
    Eigen::LLT<MatrixXd> schur_chol(schur);
    double shift = 0.0;
    const double diag_scale = std::max(1e-300, schur.diagonal().cwiseAbs().maxCoeff());
    while (schur_chol.info() != Eigen::Success) {
      shift = shift == 0.0 ? 1e-14 * diag_scale : shift * 10.0;
      if (shift > 1e-4 * diag_scale) return false;
      MatrixXd shifted = schur;
      shifted.diagonal().array() += shift;
      schur_chol.compute(shifted);
    }

    auto direction = [&](double sigma, const std::vector<MatrixXd>* corr_x,
                         const std::vector<MatrixXd>* corr_s, const VectorXd* corr_xl,
                         const VectorXd* corr_sl, std::vector<MatrixXd>* dx,
                         std::vector<MatrixXd>* ds, VectorXd* dxl, VectorXd* dsl, VectorXd* dy) {
      VectorXd rhs = d_.b;
      std::vector<MatrixXd> xrs(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        // X Rd S^-1 - sigma mu S^-1 (+ dXa dSa S^-1)
        MatrixXd t = it_.x[j] * rd[j] * s_inv[j] - sigma * mu * s_inv[j];
        if (corr_x) t += (*corr_x)[j] * (*corr_s)[j] * s_inv[j];
        xrs[j] = t;
        VectorXd at = VectorXd::Zero(m_);
        apply_block(d_.blocks[j], sym(t), &at);
        rhs += at;
      }
      VectorXd tl = (it_.xl.cwiseProduct(rdl) - VectorXd::Constant(it_.xl.size(), sigma * mu))
                        .cwiseQuotient(it_.sl);
      if (corr_xl) tl += corr_xl->cwiseProduct(*corr_sl).cwiseQuotient(it_.sl);
      {
        VectorXd at = VectorXd::Zero(m_);
        apply_lp(d_.lp, tl, &at);
        rhs += at;
      }
      *dy = schur_chol.solve(rhs);
      dx->resize(nb);
      ds->resize(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        (*ds)[j] = rd[j] - adjoint_block(d_.blocks[j], *dy);
        MatrixXd t = sigma * mu * s_inv[j] - it_.x[j] - it_.x[j] * (*ds)[j] * s_inv[j];
        if (corr_x) t -= (*corr_x)[j] * (*corr_s)[j] * s_inv[j];
        (*dx)[j] = sym(t);
      }
      *dsl = rdl - adjoint_lp(d_.lp, *dy);
      *dxl = (VectorXd::Constant(it_.xl.size(), sigma * mu) - it_.xl.cwiseProduct(*dsl))
                 .cwiseQuotient(it_.sl) -
             it_.xl;
      if (corr_xl) *dxl -= corr_xl->cwiseProduct(*corr_sl).cwiseQuotient(it_.sl);
    };

    auto step_lengths = [&](const std::vector<MatrixXd>& dx, const std::vector<MatrixXd>& ds,
                            const VectorXd& dxl, const VectorXd& dsl, double* ap, double* ad) {
      double amp = max_step_lp(it_.xl, dxl), amd = max_step_lp(it_.sl, dsl);
      for (std::size_t j = 0; j < nb; ++j) {
        amp = std::min(amp, max_step(x_chol[j], dx[j]));
        amd = std::min(amd, max_step(s_chol[j], ds[j]));
      }
      *ap = amp;
      *ad = amd;
    };

    // predictor
    std::vector<MatrixXd> dxa, dsa;
    VectorXd dxla, dsla, dya;
    direction(0.0, nullptr, nullptr, nullptr, nullptr, &dxa, &dsa, &dxla, &dsla, &dya);
    double ap, ad;
    step_lengths(dxa, dsa, dxla, dsla, &ap, &ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      mu_aff += ((it_.x[j] + ap * dxa[j]).array() * (it_.s[j] + ad * dsa[j]).array()).sum();
    }
    mu_aff += (it_.xl + ap * dxla).dot(it_.sl + ad * dsla);
    mu_aff /= std::max(1, d_.total_order);
    double sigma = mu > 0.0 ? std::pow(std::max(0.0, mu_aff) / mu, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // corrector
    std::vector<MatrixXd> dx, ds;
    VectorXd dxl, dsl, dy;
    direction(sigma, &dxa, &dsa, &dxla, &dsla, &dx, &ds, &dxl, &dsl, &dy);
    step_lengths(dx, ds, dxl, dsl, &ap, &ad);
    const double tau = opt_.step_fraction;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    if (!(ap > 0.0) || !(ad > 0.0) || !dy.allFinite()) return false;

    for (std::size_t j = 0; j < nb; ++j) {
      it_.x[j] = sym(it_.x[j] + ap * dx[j]);
      it_.s[j] = sym(it_.s[j] + ad * ds[j]);
    }
    it_.xl += ap * dxl;
    it_.sl += ad * dsl;
    it_.y += ad * dy;
    return true;
  }

  const Normalized& d_;
  SolverOptions opt_;
  int m_ = 0;
  std::vector<std::pair<int, std::vector<std::pair<int, double>>>> lp_rows_;
  Iterate it_;
};

}  // namespace

Solution solve(const Problem& problem, const SolverOptions& options) {
  Solution sol;
  sol.x = Eigen::VectorXd::Zero(problem.dof_count());
  std::string message;
  bool unbounded = false;
  Normalized data = normalize(problem, &message, &unbounded);
  if (unbounded) {
    sol.status = Status::kUnknown;
    sol.message = message;
    return sol;
  }
  const double c0 = problem.objective().constant()(0, 0);
  if (data.b.size() == 0) {
    // Nothing to optimize; constant constraints are either met or not.
    sol.objective = c0;
    sol.status = Status::kOptimal;
    sol.message = "no free dofs";
  } else {
    InteriorPoint ipm(data, options);
    Solution inner = ipm.run();
    sol.status = inner.status;
    sol.message = inner.message;
    sol.iterations = inner.iterations;
    for (std::size_t r = 0; r < data.reduced_to_dof.size(); ++r) {
      sol.x(data.reduced_to_dof[r]) = inner.x(static_cast<Eigen::Index>(r));
    }
    sol.objective = problem.objective().evaluate(sol.x)(0, 0);
    sol.dual_objective = sol.objective;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : problem.constraints()) worst = std::max(worst, constraint_violation(c, sol.x));
  sol.max_violation = problem.constraints().empty() ? 0.0 : worst;
  if (sol.status == Status::kOptimal && sol.max_violation > 0.0) {
    if (data.b.size() == 0) {
      sol.status = Status::kInfeasible;
      sol.message = "constant constraint violated";
    } else {
      sol.status = Status::kUnknown;
      sol.message += "; returned point violates a constraint by " + std::to_string(sol.max_violation);
    }
  }
  return sol;
}

}  // namespace sdp
}  // namespace tcd
