#include "tcd/linmodel.h"

#include <stdexcept>

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BarBlocks bar_blocks(const VectorXd& b, const VectorXd& b_dot, const VectorXd& f1, const VectorXd& f2,
                     double J, double l) {
  const int d = static_cast<int>(b.size());
  if (b_dot.size() != d || f1.size() != d || f2.size() != d) {
    throw std::invalid_argument("bar_blocks(): vector sizes differ");
  }
  if (!(l > 0.0)) throw std::invalid_argument("bar_blocks(): degenerate bar (l = 0)");
  if (!(J > 0.0)) throw std::invalid_argument("bar_blocks(): inertia must be positive");
  const double l2 = l * l;
  const VectorXd df = f2 - f1;
  const MatrixXd I = MatrixXd::Identity(d, d);
  BarBlocks out;
  out.M = J * I;
  out.D = (2.0 * J / l2) * b * b_dot.transpose();
  out.K = (J / l2 * b_dot.squaredNorm() + b.dot(df) / (2.0 * l2)) * I + b * df.transpose() / (2.0 * l2);
  out.P = 0.5 * (I - b * b.transpose() / l2);
  return out;
}

StringForceJacobians string_force_jacobians(const Topology& t, const Configuration& c) {
  const int d = t.dimension;
  const int sigma = t.string_count();
  const MatrixXd Cs_d = t.kron_d(t.C_s);
  MatrixXd gamma_hat = MatrixXd::Zero(d * sigma, d * sigma);
  MatrixXd s_hat = MatrixXd::Zero(d * sigma, sigma);
  const VectorXd s = c.string_vectors(t);
  for (int i = 0; i < sigma; ++i) {
    gamma_hat.block(d * i, d * i, d, d).diagonal().setConstant(c.prestress(i));
    s_hat.block(d * i, i, d, 1) = s.segment(d * i, d);
  }
  StringForceJacobians out;
  out.K_s = Cs_d.transpose() * gamma_hat;
  out.K_gamma = Cs_d.transpose() * s_hat;
  return out;
}

Class1Model assemble_class1(const Topology& t, const Configuration& c) {
  return assemble_class1(t, c, equilibrium_residual(t, c));
}

Class1Model assemble_class1(const Topology& t, const Configuration& c, const VectorXd& nodal_force) {
  validate(t, c);
  const int d = t.dimension;
  const int beta = t.bar_count();
  const int dn = t.coordinate_count();
  if (nodal_force.size() != dn) throw std::invalid_argument("assemble_class1(): nodal force must have d*n entries");
  const VectorXd b = c.bar_vectors(t);
  const VectorXd b_dot = c.bar_vector_rates(t);
  const VectorXd l = c.bar_lengths(t);

  Class1Model m;
  m.nodal_force = nodal_force;
  m.M_br = MatrixXd::Zero(dn, dn);
  m.D_br = MatrixXd::Zero(dn, dn);
  m.K_br = MatrixXd::Zero(dn, dn);
  m.P_br = MatrixXd::Identity(dn, dn);
  for (int i = 0; i < beta; ++i) {
    const auto& bar = t.bars[i];
    const BarBlocks blk = bar_blocks(b.segment(d * i, d), b_dot.segment(d * i, d),
                                     nodal_force.segment(d * bar[0], d), nodal_force.segment(d * bar[1], d),
                                     c.bar_inertia(i), l(i));
    const int rb = d * i;
    const int rr = d * (beta + i);
    m.M_br.block(rb, rb, d, d) = blk.M;
    m.D_br.block(rb, rb, d, d) = blk.D;
    m.K_br.block(rb, rb, d, d) = blk.K;
    // The transform already halves f2 - f1, so the bar block of P_br is the
    // full projector 2 P_b1.
    m.P_br.block(rb, rb, d, d) = 2.0 * blk.P;
    m.M_br.block(rr, rr, d, d).diagonal().setConstant(c.bar_mass(i));
  }
  for (int i = 0; i < t.point_mass_count(); ++i) {
    const int rs = d * (2 * beta + i);
    m.M_br.block(rs, rs, d, d).diagonal().setConstant(c.point_mass(i));
  }
  const MatrixXd T = t.transform();
  const MatrixXd Tit = t.transform_inverse_transpose();
  m.M = T.transpose() * m.M_br * T;
  m.M = 0.5 * (m.M + m.M.transpose()).eval();
  m.D = T.transpose() * m.D_br * T;
  m.P = T.transpose() * m.P_br * Tit;
  const StringForceJacobians sj = string_force_jacobians(t, c);
  m.K_s = sj.K_s;
  m.K_gamma = sj.K_gamma;
  m.K = T.transpose() * m.K_br * T + m.P * m.K_s * t.kron_d(t.C_s);
  m.B = -m.P * m.K_gamma;
  return m;
}

StringLinearization rest_length_jacobians(const Topology& t, const Configuration& c) {
  const int d = t.dimension;
  const int sigma = t.string_count();
  const VectorXd s = c.string_vectors(t);
  const VectorXd len = c.string_lengths(t);
  const VectorXd rho = rest_lengths_from_prestress(t, c);
  VectorXd s_dot = VectorXd::Zero(d * sigma);
  if (c.velocities.size() > 0) s_dot = t.kron_d(t.C_s) * c.velocities;
  StringLinearization out;
  out.K_ks = MatrixXd::Zero(sigma, d * sigma);
  out.K_cs = MatrixXd::Zero(sigma, d * sigma);
  out.K_ps = MatrixXd::Zero(sigma, sigma);
  for (int i = 0; i < sigma; ++i) {
    if (!(len(i) > 0.0)) throw std::invalid_argument("rest_length_jacobians(): zero-length string");
    const VectorXd si = s.segment(d * i, d);
    const VectorXd vi = s_dot.segment(d * i, d);
    const double L = len(i), L2 = L * L, k = c.string_stiffness(i), cd = c.string_damping(i);
    VectorXd zeta = k * rho(i) / (L2 * L) * si;
    zeta += cd * (vi / L2 - 2.0 * si.dot(vi) / (L2 * L2) * si);
    out.K_ks.block(i, d * i, 1, d) = zeta.transpose();
    out.K_cs.block(i, d * i, 1, d) = (cd / L2) * si.transpose();
    out.K_ps(i, i) = k / L;
  }
  return out;
}

VectorXd string_force_densities(const Topology& t, const Configuration& c, const VectorXd& positions,
                                const VectorXd& velocities, const VectorXd& rest_lengths) {
  const int d = t.dimension;
  VectorXd gamma(t.string_count());
  for (int i = 0; i < t.string_count(); ++i) {
    const auto& st = t.strings[i];
    const VectorXd s = positions.segment(d * st[1], d) - positions.segment(d * st[0], d);
    const VectorXd v = velocities.size() ? VectorXd(velocities.segment(d * st[1], d) - velocities.segment(d * st[0], d))
                                         : VectorXd(VectorXd::Zero(d));
    const double L2 = s.squaredNorm();
    gamma(i) = c.string_stiffness(i) * (1.0 - rest_lengths(i) / std::sqrt(L2)) + c.string_damping(i) * s.dot(v) / L2;
  }
  return gamma;
}

OpenLoopModel open_loop_class1(const Topology& t, const Class1Model& m, const StringLinearization& s) {
  const MatrixXd Cs_d = t.kron_d(t.C_s);
  OpenLoopModel out;
  out.M = m.M;
  out.D = m.D + m.P * m.K_gamma * s.K_cs * Cs_d;
  out.K = m.K + m.P * m.K_gamma * s.K_ks * Cs_d;
  out.P = m.P;
  out.B_rho = m.P * m.K_gamma * s.K_ps;
  return out;
}

NonlinearAccelerations nonlinear_oracle(const Topology& t, const Configuration& c, const VectorXd& positions,
                                        const VectorXd& velocities, const VectorXd& gamma,
                                        const VectorXd& external_force) {
  const int d = t.dimension;
  const int beta = t.bar_count();
  const VectorXd l = c.bar_lengths(t);
  VectorXd f = -string_nodal_forces(t, positions, gamma);
  if (external_force.size()) f += external_force;
  NonlinearAccelerations out;
  out.b_ddot.resize(d * beta);
  out.r_ddot.resize(d * beta);
  out.rs_ddot.resize(d * t.point_mass_count());
  VectorXd q_force(t.coordinate_count());  // M_br q''
  for (int i = 0; i < beta; ++i) {
    const auto& bar = t.bars[i];
    const VectorXd b = positions.segment(d * bar[1], d) - positions.segment(d * bar[0], d);
    const VectorXd bd = velocities.segment(d * bar[1], d) - velocities.segment(d * bar[0], d);
    const VectorXd f1 = f.segment(d * bar[0], d), f2 = f.segment(d * bar[1], d);
    const double J = c.bar_inertia(i), l2 = l(i) * l(i);
    const VectorXd rhs = 0.5 * (f2 - f1) - b * b.dot(f2 - f1) / (2.0 * l2) - (J / l2) * b * bd.squaredNorm();
    out.b_ddot.segment(d * i, d) = rhs / J;
    out.r_ddot.segment(d * i, d) = (f1 + f2) / c.bar_mass(i);
    q_force.segment(d * i, d) = rhs;
    q_force.segment(d * (beta + i), d) = f1 + f2;
  }
  for (int i = 0; i < t.point_mass_count(); ++i) {
    const VectorXd fs = f.segment(d * t.point_mass_nodes[i], d);
    out.rs_ddot.segment(d * i, d) = fs / c.point_mass(i);
    q_force.segment(d * (2 * beta + i), d) = fs;
  }
  VectorXd q_ddot(t.coordinate_count());
  q_ddot << out.b_ddot, out.r_ddot, out.rs_ddot;
  out.n_ddot = t.transform_inverse_transpose().transpose() * q_ddot;
  out.generalized_force = t.transform().transpose() * q_force;
  return out;
}

}  // namespace tcd
