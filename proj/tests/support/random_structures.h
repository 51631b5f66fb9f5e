#pragma once

#include <random>

#include "tcd/topology.h"

namespace tcd::testing {

struct RandomStructure {
  Topology topology;
  Configuration config;
};

/// Class-1 structure with the given counts and random geometry, masses,
/// prestress, velocities and external load. Not an equilibrium.
inline RandomStructure random_class1(std::mt19937& rng, int dim, int bars, int strings, int point_masses,
                                     bool moving = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 2.0);
  TopologySpec spec;
  spec.dimension = dim;
  spec.node_count = 2 * bars + point_masses;
  for (int i = 0; i < bars; ++i) spec.bars.push_back({2 * i, 2 * i + 1});
  for (int i = 0; i < point_masses; ++i) spec.point_mass_nodes.push_back(2 * bars + i);
  std::uniform_int_distribution<int> pick(0, spec.node_count - 1);
  for (int i = 0; i < strings; ++i) {
    int a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    spec.strings.push_back({a, b});
  }
  RandomStructure out{build_connectivity(spec), {}};
  const int dn = dim * spec.node_count;
  Eigen::VectorXd x(dn);
  for (int i = 0; i < dn; ++i) x(i) = 2.0 * u(rng);
  UniformParameters params;
  params.bar_mass = pos(rng);
  params.point_mass = pos(rng);
  params.string_stiffness = 1e3;
  params.string_damping = 0.5;
  Eigen::VectorXd gamma(strings);
  for (int i = 0; i < strings; ++i) gamma(i) = 10.0 * pos(rng);
  out.config = make_configuration(out.topology, x, params, gamma);
  for (int i = 0; i < bars; ++i) out.config.bar_mass(i) = pos(rng);
  for (int i = 0; i < bars; ++i) out.config.bar_inertia(i) *= pos(rng);
  if (moving) {
    for (int i = 0; i < dn; ++i) out.config.velocities(i) = u(rng);
  }
  for (int i = 0; i < dn; ++i) out.config.external_force(i) = u(rng);
  return out;
}

}  // namespace tcd::testing
