#include "tcd/statespace.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tcd/linalg.h"

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

AffineMatrixFamily::AffineMatrixFamily(MatrixXd base, std::vector<MatrixXd> coefficients)
    : base_(std::move(base)), coefficients_(std::move(coefficients)) {
  for (const auto& c : coefficients_) {
    if (c.rows() != base_.rows() || c.cols() != base_.cols()) {
      throw std::invalid_argument("AffineMatrixFamily: coefficient shape differs from base");
    }
  }
}

MatrixXd AffineMatrixFamily::operator()(const VectorXd& alpha) const {
  if (alpha.size() != parameter_count()) {
    throw std::invalid_argument("AffineMatrixFamily: expected " + std::to_string(parameter_count()) +
                                " parameters, got " + std::to_string(alpha.size()));
  }
  MatrixXd out = base_;
  for (int i = 0; i < parameter_count(); ++i) {
    if (alpha(i) != 0.0) out += alpha(i) * coefficients_[i];
  }
  return out;
}

bool AffineMatrixFamily::is_constant() const {
  for (const auto& c : coefficients_) {
    if (c.size() > 0 && c.cwiseAbs().maxCoeff() > 0.0) return false;
  }
  return true;
}

AffineMatrixFamily AffineMatrixFamily::with_parameter_count(int p) const {
  if (!coefficients_.empty() && parameter_count() != p) {
    throw std::invalid_argument("AffineMatrixFamily::with_parameter_count: family already has parameters");
  }
  return AffineMatrixFamily(base_, std::vector<MatrixXd>(p, MatrixXd::Zero(base_.rows(), base_.cols())));
}

void DescriptorSystem::validate() const {
  const int n = state_count();
  const int p = parameter_count();
  auto check = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("DescriptorSystem: ") + what);
  };
  check(A.cols() == n, "A must be square");
  check(E.rows() == n && E.cols() == n, "E must match A");
  check(B.rows() == n, "B row count");
  check(D_p.rows() == n, "D_p row count");
  check(D_a.rows() == n && D_a.cols() == B.cols(), "D_a must be n_x x m");
  check(C_y.cols() == n && C_y.rows() > 0, "C_y shape");
  check(C_z.cols() == n && C_z.rows() > 0, "C_z shape");
  check(D_s.rows() == C_z.rows() && D_s.cols() == C_z.rows(), "D_s must be l x l");
  for (const AffineMatrixFamily* f : {&E, &D_p, &D_a, &C_y}) {
    check(f->parameter_count() == p, "all families must share the parameter count of A");
  }
  Eigen::FullPivLU<MatrixXd> lu(D_s);
  check(lu.rank() == D_s.rows(), "D_s must be full rank");
}

MatrixXd NoiseModel::covariance() const {
  if (gamma_a.size() > 0 && !(gamma_a.minCoeff() > 0.0)) {
    throw std::invalid_argument("NoiseModel: actuator precisions must be positive");
  }
  if (gamma_s.size() > 0 && !(gamma_s.minCoeff() > 0.0)) {
    throw std::invalid_argument("NoiseModel: sensor precisions must be positive");
  }
  return block_diagonal({W_p, MatrixXd(gamma_a.cwiseInverse().asDiagonal()),
                         MatrixXd(gamma_s.cwiseInverse().asDiagonal())});
}

MatrixXd node_selector(const Topology& t, const std::vector<int>& user_nodes) {
  const int d = t.dimension;
  MatrixXd S = MatrixXd::Zero(d * static_cast<int>(user_nodes.size()), t.coordinate_count());
  for (std::size_t k = 0; k < user_nodes.size(); ++k) {
    const int u = user_nodes[k];
    if (u < 0 || u >= t.user_node_count()) {
      throw std::invalid_argument("node_selector: user node " + std::to_string(u) + " out of range");
    }
    S.block(d * static_cast<int>(k), d * t.primary_node[u], d, d).setIdentity();
  }
  return S;
}

DescriptorSystem to_descriptor(const MinimalModel& mm, const AffineMatrixFamily& stiffness, const Topology& t,
                               const std::vector<int>& output_nodes, const std::vector<int>& measured_nodes,
                               bool measure_velocity) {
  if (output_nodes.empty()) throw std::invalid_argument("to_descriptor: empty output node list");
  if (measured_nodes.empty()) throw std::invalid_argument("to_descriptor: empty measured node list");
  const int k = mm.size();
  if (stiffness.rows() != k || stiffness.cols() != k) {
    throw std::invalid_argument("to_descriptor: stiffness family does not match the minimal model");
  }
  const int p = stiffness.parameter_count();
  const int n = 2 * k;
  const int m = static_cast<int>(mm.B.cols());

  DescriptorSystem ds;
  MatrixXd E = MatrixXd::Identity(n, n);
  E.bottomRightCorner(k, k) = mm.M;
  ds.E = AffineMatrixFamily(E).with_parameter_count(p);

  auto lower_left = [&](const MatrixXd& Kc) {
    MatrixXd A = MatrixXd::Zero(n, n);
    A.bottomLeftCorner(k, k) = -Kc;
    return A;
  };
  MatrixXd A0 = lower_left(stiffness.base());
  A0.topRightCorner(k, k).setIdentity();
  A0.bottomRightCorner(k, k) = -mm.D;
  std::vector<MatrixXd> Ai;
  for (const auto& c : stiffness.coefficients()) Ai.push_back(lower_left(c));
  ds.A = AffineMatrixFamily(A0, Ai);

  ds.B = MatrixXd::Zero(n, m);
  ds.B.bottomRows(k) = mm.B;
  MatrixXd Dp = MatrixXd::Zero(n, mm.P.cols());
  Dp.bottomRows(k) = mm.P;
  ds.D_p = AffineMatrixFamily(Dp).with_parameter_count(p);
  ds.D_a = AffineMatrixFamily(ds.B).with_parameter_count(p);

  const MatrixXd out_sel = node_selector(t, output_nodes) * mm.P_tot;
  MatrixXd Cy = MatrixXd::Zero(out_sel.rows(), n);
  Cy.leftCols(k) = out_sel;
  ds.C_y = AffineMatrixFamily(Cy).with_parameter_count(p);

  const MatrixXd meas_sel = node_selector(t, measured_nodes) * mm.P_tot;
  const int r = static_cast<int>(meas_sel.rows());
  ds.C_z = MatrixXd::Zero(measure_velocity ? 2 * r : r, n);
  ds.C_z.topLeftCorner(r, k) = meas_sel;
  if (measure_velocity) ds.C_z.bottomRightCorner(r, k) = meas_sel;
  ds.D_s = MatrixXd::Identity(ds.C_z.rows(), ds.C_z.rows());
  ds.validate();
  return ds;
}

DescriptorSystem to_descriptor(const MinimalModel& mm, const Topology& t, const std::vector<int>& output_nodes,
                               const std::vector<int>& measured_nodes, bool measure_velocity) {
  return to_descriptor(mm, AffineMatrixFamily(mm.K), t, output_nodes, measured_nodes, measure_velocity);
}

namespace {

// K_k for prestress gamma with geometry and basis held fixed. Every step is
// linear in gamma (static forces by least squares, class-1 stiffness, the
// congruence with P_tot), so two evaluations give the affine family exactly.
MatrixXd reduced_stiffness(const TensegrityModel& model, const MinimalModel& mm, const VectorXd& gamma) {
  Configuration c = model.config;
  c.prestress = gamma;
  const StaticForces sf = static_forces(model.topology, c, model.constraints);
  const Class1Model m1 = assemble_class1(model.topology, c, sf.nodal_force);
  return mm.P_tot.transpose() * m1.K * mm.P_tot;
}

}  // namespace

AffineMatrixFamily affine_stiffness(const TensegrityModel& model, const MinimalModel& mm) {
  if (!model.config.is_static()) throw std::invalid_argument("affine_stiffness: configuration must be static");
  const int sigma = model.topology.string_count();
  const MatrixXd K0 = reduced_stiffness(model, mm, VectorXd::Zero(sigma));
  std::vector<MatrixXd> coefficients;
  coefficients.reserve(sigma);
  for (int i = 0; i < sigma; ++i) {
    coefficients.push_back(reduced_stiffness(model, mm, VectorXd::Unit(sigma, i)) - K0);
  }
  return AffineMatrixFamily(K0, std::move(coefficients));
}

DescriptorSystem tensegrity_descriptor(const TensegrityModel& model, bool measure_velocity) {
  const LinearizedStructure ls = linearize(model);
  return to_descriptor(ls.minimal, affine_stiffness(model, ls.minimal), model.topology, model.output_nodes,
                       model.measured_nodes, measure_velocity);
}

DescriptorSystem oscillator_descriptor(double mass, double damping) {
  if (!(mass > 0.0) || damping < 0.0) throw std::invalid_argument("oscillator_descriptor: need mass > 0, damping >= 0");
  DescriptorSystem ds;
  Eigen::MatrixXd A0(2, 2), A1 = Eigen::MatrixXd::Zero(2, 2);
  A0 << 0.0, 1.0, 0.0, -damping;
  A1(1, 0) = -1.0;
  const Eigen::MatrixXd b = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
  ds.E = AffineMatrixFamily(Eigen::Vector2d(1.0, mass).asDiagonal().toDenseMatrix()).with_parameter_count(1);
  ds.A = AffineMatrixFamily(A0, {A1});
  ds.D_p = AffineMatrixFamily(b).with_parameter_count(1);
  ds.D_a = AffineMatrixFamily(b).with_parameter_count(1);
  ds.C_y = AffineMatrixFamily(Eigen::MatrixXd::Identity(2, 2)).with_parameter_count(1);
  ds.B = b;
  ds.C_z = Eigen::MatrixXd::Identity(2, 2);
  ds.D_s = Eigen::MatrixXd::Identity(2, 2);
  ds.validate();
  return ds;
}

ClosedLoop assemble_closed_loop(const DescriptorSystem& ds, const VectorXd& alpha, const Controller& k) {
  const int n = ds.state_count();
  const int nc = k.order();
  const int m = ds.input_count();
  const int l = ds.measurement_count();
  if (k.A_c.cols() != nc || k.B_c.rows() != nc || k.B_c.cols() != l || k.C_c.rows() != m || k.C_c.cols() != nc) {
    throw std::invalid_argument("assemble_closed_loop: controller dimensions do not conform (n_c = " +
                                std::to_string(nc) + ", l = " + std::to_string(l) + ", m = " +
                                std::to_string(m) + ")");
  }
  const MatrixXd Dp = ds.D_p(alpha);
  const MatrixXd Da = ds.D_a(alpha);
  const int nw = static_cast<int>(Dp.cols());

  ClosedLoop cl;
  cl.E = MatrixXd::Identity(n + nc, n + nc);
  cl.E.topLeftCorner(n, n) = ds.E(alpha);
  cl.A.resize(n + nc, n + nc);
  cl.A << ds.A(alpha), ds.B * k.C_c, k.B_c * ds.C_z, k.A_c;
  cl.B = MatrixXd::Zero(n + nc, nw + m + l);
  cl.B.topLeftCorner(n, nw) = Dp;
  cl.B.block(0, nw, n, m) = Da;
  cl.B.bottomRightCorner(nc, l) = k.B_c * ds.D_s;
  cl.C = MatrixXd::Zero(ds.output_count(), n + nc);
  cl.C.leftCols(n) = ds.C_y(alpha);
  cl.M = MatrixXd::Zero(m, n + nc);
  cl.M.rightCols(nc) = k.C_c;
  return cl;
}

CovarianceResult lyapunov_covariance(const ClosedLoop& cl, const MatrixXd& W) {
  if (W.rows() != cl.B.cols() || W.cols() != cl.B.cols()) {
    throw std::invalid_argument("lyapunov_covariance: W must be " + std::to_string(cl.B.cols()) + " square");
  }
  const StabilityReport s = stability_check(cl);
  if (!s.stable) {
    throw std::invalid_argument("lyapunov_covariance: closed loop is not Hurwitz (abscissa " +
                                std::to_string(s.abscissa) + ")");
  }
  Eigen::PartialPivLU<MatrixXd> lu(cl.E);
  const MatrixXd Abar = lu.solve(cl.A);
  const MatrixXd Bbar = lu.solve(cl.B);
  CovarianceResult out;
  out.X = symmetrize(solve_lyapunov(Abar, Bbar * W * Bbar.transpose()));
  out.Y = symmetrize(cl.C * out.X * cl.C.transpose());
  out.U = symmetrize(cl.M * out.X * cl.M.transpose());
  return out;
}

StabilityReport stability_check(const MatrixXd& E, const MatrixXd& A) {
  StabilityReport r;
  r.abscissa = spectral_abscissa(E, A);
  // Eigenvalues on the imaginary axis come out with round-off real parts;
  // count them as not stable.
  Eigen::PartialPivLU<MatrixXd> lu(E);
  const double scale = std::max(1.0, lu.solve(A).cwiseAbs().maxCoeff());
  r.stable = r.abscissa < -1e-10 * scale;
  return r;
}

StabilityReport stability_check(const ClosedLoop& cl) { return stability_check(cl.E, cl.A); }

}  // namespace tcd
