#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcd/constraint_set.h"
#include "tcd/linmodel.h"
#include "tcd/reduction.h"
#include "tcd/topology.h"

namespace tcd {

/// A structure at equilibrium together with its supports and the node sets
/// used for output and measurement (user node numbering).
struct TensegrityModel {
  std::string name;
  TopologySpec spec;
  Eigen::VectorXd user_positions;  // d * spec.node_count
  UniformParameters params;
  Eigen::VectorXd prestress;
  Eigen::VectorXd external_force;  // d * spec.node_count, may be empty
  std::vector<int> fixed_nodes;
  std::vector<int> output_nodes;
  std::vector<int> measured_nodes;

  Topology topology;
  Configuration config;
  ConstraintSet constraints;
};

/// Builds topology, configuration and constraints from the user fields.
void finalize(TensegrityModel* model);

/// The model with every prestress multiplied by `scale`.
TensegrityModel scaled_prestress(const TensegrityModel& model, double scale);

/// Everything the linearization pipeline produces for one model.
struct LinearizedStructure {
  StaticForces statics;
  Class1Model class1;
  BarModeBasis modes;
  MinimalModel minimal;
};

/// Static forces (with reactions), class-1 model, bar-mode basis and the
/// minimal model. Throws if the configuration is not an equilibrium to
/// 1e-8 relative.
LinearizedStructure linearize(const TensegrityModel& model);

/// Two-cell X-braced planar beam: six user nodes, four bars sharing the two
/// middle nodes, six strings, left end pinned. Minimum prestress 100 N/m.
TensegrityModel desk_beam();

/// Planar two-bar arm: one X-braced cell pinned at the wall, three strings.
/// Uniform prestress 100 N/m.
TensegrityModel desk_arm();

}  // namespace tcd
