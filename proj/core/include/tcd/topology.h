#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tcd {

using NodePair = std::array<int, 2>;  // {tail, head}

/// Connectivity as given by a user, before class-k expansion.
struct TopologySpec {
  int node_count = 0;
  int dimension = 3;
  std::vector<NodePair> bars;
  std::vector<NodePair> strings;
  std::vector<int> point_mass_nodes;
};

/// Node/bar/string connectivity of a tensegrity. Every node touches at most
/// one bar: a user node shared by several bars (class-k) is split into one
/// copy per bar, and the copies are tied together by joint constraints.
struct Topology {
  int node_count = 0;  // after expansion
  int dimension = 3;
  std::vector<NodePair> bars;
  std::vector<NodePair> strings;
  std::vector<int> point_mass_nodes;
  std::vector<int> bar_of_node;          // -1 for point masses
  std::vector<int> source_node;          // expanded node -> user node
  std::vector<int> primary_node;         // user node -> expanded node carrying its strings
  std::vector<NodePair> joints;          // {primary copy, secondary copy}

  Eigen::MatrixXd C_b;   // beta x n, +1 head, -1 tail
  Eigen::MatrixXd C_s;   // sigma x n
  Eigen::MatrixXd C_r;   // beta x n, 1/2 at both ends
  Eigen::MatrixXd C_nb;  // n x n diagonal selector of bar nodes
  Eigen::MatrixXd C_ns;  // point-mass count x n selector rows

  int bar_count() const { return static_cast<int>(bars.size()); }
  int string_count() const { return static_cast<int>(strings.size()); }
  int point_mass_count() const { return static_cast<int>(point_mass_nodes.size()); }
  int user_node_count() const { return static_cast<int>(primary_node.size()); }
  int coordinate_count() const { return dimension * node_count; }
  bool is_class1() const { return joints.empty(); }

  /// Kronecker expansion M (x) I_d.
  Eigen::MatrixXd kron_d(const Eigen::MatrixXd& m) const;

  /// n -> [b; r; r_s], i.e. [C_b; C_r; C_ns] (x) I_d.
  Eigen::MatrixXd transform() const;
  /// The stated inverse-transpose [C_b/2; 2 C_r; C_ns] (x) I_d.
  Eigen::MatrixXd transform_inverse_transpose() const;
  /// ||T' * (stated T^-T) - I||_max.
  double transform_identity_residual() const;

  /// Maps a d*(user nodes) vector to expanded numbering; every copy of a
  /// split node gets the same value.
  Eigen::VectorXd expand(const Eigen::VectorXd& user_values) const;
};

/// Builds the connectivity matrices. Throws std::invalid_argument on
/// out-of-range indices, a bar with equal endpoints, duplicate bars, a node
/// that is both bar-attached and a point mass, or a node that is neither.
Topology build_connectivity(const TopologySpec& spec);

/// Equilibrium state and physical parameters, in expanded node numbering.
struct Configuration {
  Eigen::VectorXd positions;         // d*n
  Eigen::VectorXd velocities;        // d*n
  Eigen::VectorXd bar_mass;          // beta
  Eigen::VectorXd bar_inertia;       // beta
  Eigen::VectorXd point_mass;        // one per point-mass node
  Eigen::VectorXd string_stiffness;  // sigma
  Eigen::VectorXd string_damping;    // sigma
  Eigen::VectorXd prestress;         // sigma, force densities
  Eigen::VectorXd external_force;    // d*n

  /// Per-bar vectors b_i = head - tail, stacked (d*beta).
  Eigen::VectorXd bar_vectors(const Topology& t) const;
  Eigen::VectorXd bar_vector_rates(const Topology& t) const;
  Eigen::VectorXd bar_lengths(const Topology& t) const;
  Eigen::VectorXd string_vectors(const Topology& t) const;
  Eigen::VectorXd string_lengths(const Topology& t) const;
  bool is_static() const { return velocities.size() == 0 || velocities.lpNorm<Eigen::Infinity>() == 0.0; }
};

/// Uniform physical parameters used to populate a Configuration.
struct UniformParameters {
  double bar_mass = 1.0;
  double point_mass = 0.5;
  double string_stiffness = 1e4;
  double string_damping = 0.0;
  double bar_inertia = -1.0;  // < 0: m l^2 / 12
};

/// Configuration at rest with the given positions (expanded numbering),
/// parameters and prestress; checks every invariant.
Configuration make_configuration(const Topology& t, const Eigen::VectorXd& positions,
                                 const UniformParameters& params, const Eigen::VectorXd& prestress);

/// Throws std::invalid_argument if sizes disagree with the topology,
/// a bar or string has zero length, masses/inertias/stiffnesses are not
/// positive, or prestress is negative.
void validate(const Topology& t, const Configuration& c);

/// Net nodal force w - (C_s' (x) I) diag(gamma (x) 1) s at the configuration.
Eigen::VectorXd equilibrium_residual(const Topology& t, const Configuration& c);

/// String forces (C_s' (x) I) diag(gamma (x) 1) s for an arbitrary gamma.
Eigen::VectorXd string_nodal_forces(const Topology& t, const Eigen::VectorXd& positions,
                                    const Eigen::VectorXd& gamma);

/// rho_i = ||s_i|| (1 - gamma_i / k_i). Throws if gamma_i >= k_i.
Eigen::VectorXd rest_lengths_from_prestress(const Topology& t, const Configuration& c);

/// gamma_i = k_i (1 - rho_i / ||s_i||).
Eigen::VectorXd prestress_from_rest_lengths(const Topology& t, const Configuration& c,
                                            const Eigen::VectorXd& rest_lengths);

}  // namespace tcd
