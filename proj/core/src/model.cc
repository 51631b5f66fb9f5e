#include "tcd/model.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tcd {

using Eigen::VectorXd;

void finalize(TensegrityModel* m) {
  m->topology = build_connectivity(m->spec);
  const VectorXd x = m->topology.expand(m->user_positions);
  m->config = make_configuration(m->topology, x, m->params, m->prestress);
  if (m->external_force.size() > 0) {
    if (m->external_force.size() != m->user_positions.size()) {
      throw std::invalid_argument("TensegrityModel: external_force must have d * node_count entries");
    }
    // Loads act on the primary copy of each user node.
    const int d = m->spec.dimension;
    for (int u = 0; u < m->spec.node_count; ++u) {
      m->config.external_force.segment(d * m->topology.primary_node[u], d) = m->external_force.segment(d * u, d);
    }
  }
  m->constraints = make_constraints(m->topology, x, m->fixed_nodes);
  auto check_nodes = [&](const std::vector<int>& nodes, const char* what) {
    for (int u : nodes) {
      if (u < 0 || u >= m->spec.node_count) {
        throw std::invalid_argument(std::string("TensegrityModel: ") + what + " node " + std::to_string(u) +
                                    " out of range");
      }
    }
  };
  check_nodes(m->output_nodes, "output");
  check_nodes(m->measured_nodes, "measured");
}

TensegrityModel scaled_prestress(const TensegrityModel& model, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scaled_prestress(): scale must be positive");
  TensegrityModel out = model;
  out.prestress *= scale;
  finalize(&out);
  return out;
}

LinearizedStructure linearize(const TensegrityModel& model) {
  LinearizedStructure out;
  out.statics = static_forces(model.topology, model.config, model.constraints);
  const double scale = std::max(1.0, out.statics.nodal_force.norm() + model.config.prestress.norm());
  if (out.statics.residual > 1e-8 * scale) {
    throw std::invalid_argument("linearize(): configuration is not an equilibrium (residual " +
                                std::to_string(out.statics.residual) + ")");
  }
  out.class1 = assemble_class1(model.topology, model.config, out.statics.nodal_force);
  out.modes = bar_mode_basis(model.topology, model.config);
  out.minimal = minimal_model(out.class1, model.constraints, out.modes);
  return out;
}

TensegrityModel desk_beam() {
  TensegrityModel m;
  m.name = "desk_beam";
  m.spec.dimension = 2;
  m.spec.node_count = 6;
  // bottom 0 1 2, top 3 4 5
  m.spec.bars = {{0, 4}, {3, 1}, {1, 5}, {4, 2}};
  m.spec.strings = {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {1, 4}, {2, 5}};
  m.user_positions.resize(12);
  m.user_positions << 0, 0, 1, 0, 2, 0, 0, 1, 1, 1, 2, 1;
  m.params.bar_mass = 1.0;
  m.params.point_mass = 0.5;
  m.params.string_stiffness = 1e4;
  m.params.string_damping = 0.0;
  // Self-stress of this geometry: unit bar compressions give these force
  // densities; the middle vertical carries both cells.
  m.prestress.resize(6);
  m.prestress << 100, 100, 100, 100, 200, 100;
  m.fixed_nodes = {0, 3};
  m.output_nodes = {5};
  m.measured_nodes = {1, 2, 4, 5};
  finalize(&m);
  return m;
}

TensegrityModel desk_arm() {
  TensegrityModel m;
  m.name = "desk_arm";
  m.spec.dimension = 2;
  m.spec.node_count = 4;
  // wall nodes 0 (bottom) and 1 (top); tip nodes 2 (bottom) and 3 (top)
  m.spec.bars = {{0, 3}, {1, 2}};
  m.spec.strings = {{0, 2}, {1, 3}, {2, 3}};
  m.user_positions.resize(8);
  m.user_positions << 0, 0, 0, 1, 1, 0, 1, 1;
  m.params.bar_mass = 1.0;
  m.params.string_stiffness = 1e4;
  m.prestress = VectorXd::Constant(3, 100.0);
  m.fixed_nodes = {0, 1};
  m.output_nodes = {3};
  m.measured_nodes = {2, 3};
  finalize(&m);
  return m;
}

}  // namespace tcd
