#include "tcd/topology.h"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_node(int node, int count, const char* what) {
  if (node < 0 || node >= count) {
    throw std::invalid_argument(std::string("build_connectivity(): ") + what + " references node " +
                                std::to_string(node) + " outside [0, " + std::to_string(count) + ")");
  }
}

MatrixXd incidence(const std::vector<NodePair>& pairs, int n) {
  MatrixXd c = MatrixXd::Zero(static_cast<int>(pairs.size()), n);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    c(i, pairs[i][0]) = -1.0;
    c(i, pairs[i][1]) = 1.0;
  }
  return c;
}

VectorXd segment_vectors(const std::vector<NodePair>& pairs, const VectorXd& x, int d) {
  VectorXd out(d * static_cast<int>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.segment(d * i, d) = x.segment(d * pairs[i][1], d) - x.segment(d * pairs[i][0], d);
  }
  return out;
}

VectorXd block_norms(const VectorXd& v, int d) {
  VectorXd out(v.size() / d);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = v.segment(d * i, d).norm();
  return out;
}

}  // namespace

Topology build_connectivity(const TopologySpec& spec) {
  if (spec.dimension != 2 && spec.dimension != 3) {
    throw std::invalid_argument("build_connectivity(): dimension must be 2 or 3");
  }
  if (spec.node_count <= 0) throw std::invalid_argument("build_connectivity(): no nodes");
  const int n_user = spec.node_count;
  std::vector<std::vector<int>> bars_at(n_user);
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < spec.bars.size(); ++i) {
    const auto& b = spec.bars[i];
    check_node(b[0], n_user, "bar");
    check_node(b[1], n_user, "bar");
    if (b[0] == b[1]) throw std::invalid_argument("build_connectivity(): bar " + std::to_string(i) + " has equal endpoints");
    if (!seen.insert({std::min(b[0], b[1]), std::max(b[0], b[1])}).second) {
      throw std::invalid_argument("build_connectivity(): duplicate bar on nodes " + std::to_string(b[0]) +
                                  ", " + std::to_string(b[1]));
    }
    bars_at[b[0]].push_back(static_cast<int>(i));
    bars_at[b[1]].push_back(static_cast<int>(i));
  }
  std::vector<char> is_point_mass(n_user, 0);
  for (int p : spec.point_mass_nodes) {
    check_node(p, n_user, "point mass");
    if (!bars_at[p].empty()) {
      throw std::invalid_argument("build_connectivity(): node " + std::to_string(p) +
                                  " is both bar-attached and a point mass");
    }
    if (is_point_mass[p]) throw std::invalid_argument("build_connectivity(): point mass listed twice");
    is_point_mass[p] = 1;
  }
  for (int u = 0; u < n_user; ++u) {
    if (bars_at[u].empty() && !is_point_mass[u]) {
      throw std::invalid_argument("build_connectivity(): node " + std::to_string(u) +
                                  " is neither bar-attached nor a point mass");
    }
  }
  for (std::size_t i = 0; i < spec.strings.size(); ++i) {
    const auto& s = spec.strings[i];
    check_node(s[0], n_user, "string");
    check_node(s[1], n_user, "string");
    if (s[0] == s[1]) throw std::invalid_argument("build_connectivity(): string " + std::to_string(i) + " has equal endpoints");
  }

  Topology t;
  t.dimension = spec.dimension;
  t.bars = spec.bars;
  t.primary_node.resize(n_user);
  t.source_node.resize(n_user);
  for (int u = 0; u < n_user; ++u) {
    t.primary_node[u] = u;
    t.source_node[u] = u;
  }
  // Split shared nodes: the first bar (in input order) keeps the user index,
  // later bars get fresh nodes appended after all user nodes.
  int next = n_user;
  for (int u = 0; u < n_user; ++u) {
    for (std::size_t k = 1; k < bars_at[u].size(); ++k) {
      const int bar = bars_at[u][k];
      const int copy = next++;
      t.source_node.push_back(u);
      t.joints.push_back({u, copy});
      auto& pair = t.bars[bar];
      if (pair[0] == u) pair[0] = copy;
      else pair[1] = copy;
    }
  }
  t.node_count = next;
  const int n = next;
  t.strings.reserve(spec.strings.size());
  for (const auto& s : spec.strings) t.strings.push_back({t.primary_node[s[0]], t.primary_node[s[1]]});
  t.point_mass_nodes = spec.point_mass_nodes;

  t.bar_of_node.assign(n, -1);
  for (int i = 0; i < t.bar_count(); ++i) {
    t.bar_of_node[t.bars[i][0]] = i;
    t.bar_of_node[t.bars[i][1]] = i;
  }
  t.C_b = incidence(t.bars, n);
  t.C_s = incidence(t.strings, n);
  t.C_r = t.C_b.cwiseAbs() * 0.5;
  t.C_nb = MatrixXd::Zero(n, n);
  for (int v = 0; v < n; ++v) {
    if (t.bar_of_node[v] >= 0) t.C_nb(v, v) = 1.0;
  }
  t.C_ns = MatrixXd::Zero(t.point_mass_count(), n);
  for (int i = 0; i < t.point_mass_count(); ++i) t.C_ns(i, t.point_mass_nodes[i]) = 1.0;
  return t;
}

MatrixXd Topology::kron_d(const MatrixXd& m) const {
  MatrixXd out = MatrixXd::Zero(m.rows() * dimension, m.cols() * dimension);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        out.block(i * dimension, j * dimension, dimension, dimension).diagonal().setConstant(m(i, j));
      }
    }
  }
  return out;
}

MatrixXd Topology::transform() const {
  MatrixXd stacked(C_b.rows() + C_r.rows() + C_ns.rows(), node_count);
  stacked << C_b * C_nb, C_r * C_nb, C_ns;
  return kron_d(stacked);
}

MatrixXd Topology::transform_inverse_transpose() const {
  MatrixXd stacked(C_b.rows() + C_r.rows() + C_ns.rows(), node_count);
  stacked << 0.5 * C_b * C_nb, 2.0 * C_r * C_nb, C_ns;
  return kron_d(stacked);
}

double Topology::transform_identity_residual() const {
  const MatrixXd T = transform();
  const MatrixXd Tit = transform_inverse_transpose();
  return (T.transpose() * Tit - MatrixXd::Identity(T.cols(), T.cols())).cwiseAbs().maxCoeff();
}

VectorXd Topology::expand(const VectorXd& user_values) const {
  if (user_values.size() != dimension * user_node_count()) {
    throw std::invalid_argument("Topology::expand(): expected d * user node count entries");
  }
  VectorXd out(coordinate_count());
  for (int v = 0; v < node_count; ++v) {
    out.segment(dimension * v, dimension) = user_values.segment(dimension * source_node[v], dimension);
  }
  return out;
}

VectorXd Configuration::bar_vectors(const Topology& t) const {
  return segment_vectors(t.bars, positions, t.dimension);
}

VectorXd Configuration::bar_vector_rates(const Topology& t) const {
  if (velocities.size() == 0) return VectorXd::Zero(t.dimension * t.bar_count());
  return segment_vectors(t.bars, velocities, t.dimension);
}

VectorXd Configuration::bar_lengths(const Topology& t) const {
  return block_norms(bar_vectors(t), t.dimension);
}

VectorXd Configuration::string_vectors(const Topology& t) const {
  return segment_vectors(t.strings, positions, t.dimension);
}

VectorXd Configuration::string_lengths(const Topology& t) const {
  return block_norms(string_vectors(t), t.dimension);
}

void validate(const Topology& t, const Configuration& c) {
  const int dn = t.coordinate_count();
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("Configuration: " + msg);
  };
  need(c.positions.size() == dn, "positions must have d*n entries");
  need(c.velocities.size() == 0 || c.velocities.size() == dn, "velocities must have d*n entries");
  need(c.external_force.size() == 0 || c.external_force.size() == dn, "external_force must have d*n entries");
  need(c.bar_mass.size() == t.bar_count(), "one bar mass per bar");
  need(c.bar_inertia.size() == t.bar_count(), "one bar inertia per bar");
  need(c.point_mass.size() == t.point_mass_count(), "one mass per point-mass node");
  need(c.string_stiffness.size() == t.string_count(), "one stiffness per string");
  need(c.string_damping.size() == t.string_count(), "one damping per string");
  need(c.prestress.size() == t.string_count(), "one prestress per string");
  need(t.bar_count() == 0 || c.bar_mass.minCoeff() > 0.0, "bar masses must be positive");
  need(t.bar_count() == 0 || c.bar_inertia.minCoeff() > 0.0, "bar inertias must be positive");
  need(t.point_mass_count() == 0 || c.point_mass.minCoeff() > 0.0, "point masses must be positive");
  if (t.string_count() > 0) {
    need(c.string_stiffness.minCoeff() > 0.0, "string stiffness must be positive");
    need(c.string_damping.minCoeff() >= 0.0, "string damping must be non-negative");
    need(c.prestress.minCoeff() >= 0.0, "prestress must be non-negative");
    need(c.string_lengths(t).minCoeff() > 0.0, "zero-length string");
  }
  if (t.bar_count() > 0) need(c.bar_lengths(t).minCoeff() > 0.0, "zero-length bar");
}

Configuration make_configuration(const Topology& t, const VectorXd& positions,
                                 const UniformParameters& params, const VectorXd& prestress) {
  Configuration c;
  c.positions = positions;
  c.velocities = VectorXd::Zero(t.coordinate_count());
  c.external_force = VectorXd::Zero(t.coordinate_count());
  c.bar_mass = VectorXd::Constant(t.bar_count(), params.bar_mass);
  c.point_mass = VectorXd::Constant(t.point_mass_count(), params.point_mass);
  c.string_stiffness = VectorXd::Constant(t.string_count(), params.string_stiffness);
  c.string_damping = VectorXd::Constant(t.string_count(), params.string_damping);
  c.prestress = prestress;
  if (positions.size() != t.coordinate_count()) {
    throw std::invalid_argument("make_configuration(): positions must have d*n entries");
  }
  const VectorXd l = c.bar_lengths(t);
  c.bar_inertia.resize(t.bar_count());
  for (int i = 0; i < t.bar_count(); ++i) {
    c.bar_inertia(i) = params.bar_inertia > 0.0 ? params.bar_inertia : params.bar_mass * l(i) * l(i) / 12.0;
  }
  validate(t, c);
  return c;
}

VectorXd string_nodal_forces(const Topology& t, const VectorXd& positions, const VectorXd& gamma) {
  const int d = t.dimension;
  VectorXd f = VectorXd::Zero(t.coordinate_count());
  for (int i = 0; i < t.string_count(); ++i) {
    const auto& s = t.strings[i];
    const VectorXd sv = positions.segment(d * s[1], d) - positions.segment(d * s[0], d);
    // C_s' row: -1 at tail, +1 at head
    f.segment(d * s[1], d) += gamma(i) * sv;
    f.segment(d * s[0], d) -= gamma(i) * sv;
  }
  return f;
}

VectorXd equilibrium_residual(const Topology& t, const Configuration& c) {
  VectorXd f = -string_nodal_forces(t, c.positions, c.prestress);
  if (c.external_force.size() > 0) f += c.external_force;
  return f;
}

VectorXd rest_lengths_from_prestress(const Topology& t, const Configuration& c) {
  const VectorXd len = c.string_lengths(t);
  VectorXd rho(t.string_count());
  for (int i = 0; i < t.string_count(); ++i) {
    if (c.prestress(i) >= c.string_stiffness(i)) {
      throw std::invalid_argument("rest_lengths_from_prestress(): string " + std::to_string(i) +
                                  " has prestress >= stiffness (non-positive rest length)");
    }
    rho(i) = len(i) * (1.0 - c.prestress(i) / c.string_stiffness(i));
  }
  return rho;
}

VectorXd prestress_from_rest_lengths(const Topology& t, const Configuration& c, const VectorXd& rest_lengths) {
  const VectorXd len = c.string_lengths(t);
  VectorXd gamma(t.string_count());
  for (int i = 0; i < t.string_count(); ++i) {
    gamma(i) = c.string_stiffness(i) * (1.0 - rest_lengths(i) / len(i));
  }
  return gamma;
}

}  // namespace tcd
