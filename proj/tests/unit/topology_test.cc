#include <random>

#include "doctest.h"
#include "random_structures.h"
#include "tcd/constraint_set.h"
#include "tcd/topology.h"

using namespace tcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("single bar incidence") {
  TopologySpec spec{2, 3, {{0, 1}}, {}, {}};
  Topology t = build_connectivity(spec);
  CHECK(t.C_b.rows() == 1);
  CHECK(t.C_b(0, 0) == -1.0);
  CHECK(t.C_b(0, 1) == 1.0);
  CHECK(t.C_r(0, 0) == 0.5);
  CHECK(t.C_r(0, 1) == 0.5);
  CHECK(t.transform_identity_residual() < 1e-12);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(build_connectivity({2, 3, {{0, 0}}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(build_connectivity({2, 3, {{0, 1}, {1, 0}}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(build_connectivity({3, 3, {{0, 1}}, {}, {1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(build_connectivity({3, 3, {{0, 1}}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(build_connectivity({2, 3, {{0, 2}}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(build_connectivity({2, 4, {{0, 1}}, {}, {}}), std::invalid_argument);
}

TEST_CASE("8-bar 12-string beam shapes") {
  // Four X-braced cells: bottom nodes 0..4, top nodes 5..9.
  TopologySpec spec;
  spec.dimension = 2;
  spec.node_count = 10;
  for (int i = 0; i < 4; ++i) {
    spec.bars.push_back({i, 5 + i + 1});
    spec.bars.push_back({5 + i, i + 1});
  }
  for (int i = 0; i < 4; ++i) {
    spec.strings.push_back({i, i + 1});
    spec.strings.push_back({5 + i, 5 + i + 1});
  }
  for (int i = 1; i < 5; ++i) spec.strings.push_back({i, 5 + i});
  Topology t = build_connectivity(spec);
  CHECK(t.C_b.rows() == 8);
  CHECK(t.C_s.rows() == 12);
  CHECK(t.C_b.cols() == t.node_count);
  CHECK(t.node_count == 16);  // 6 interior nodes are shared by two bars
  CHECK(t.joints.size() == 6);
  CHECK(t.transform_identity_residual() < 1e-12);
}

TEST_CASE("random topologies satisfy the incidence invariants") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 120; ++trial) {
    std::uniform_int_distribution<int> nb(1, 5), ns(0, 8), np(0, 3), dim(2, 3);
    auto rs = testing::random_class1(rng, dim(rng), nb(rng), ns(rng) + 1, np(rng));
    const Topology& t = rs.topology;
    for (int i = 0; i < t.bar_count(); ++i) {
      CHECK(t.C_b.row(i).sum() == 0.0);
      CHECK(t.C_b.row(i).cwiseAbs().sum() == 2.0);
      CHECK(t.C_r.row(i).sum() == 1.0);
      CHECK((t.C_r.row(i).array() == 0.5).count() == 2);
    }
    for (int i = 0; i < t.string_count(); ++i) {
      CHECK(t.C_s.row(i).sum() == 0.0);
      CHECK(t.C_s.row(i).maxCoeff() == 1.0);
      CHECK(t.C_s.row(i).minCoeff() == -1.0);
    }
    const MatrixXd sum = (0.5 * t.C_b * t.C_nb).transpose() * (t.C_b * t.C_nb) +
                         (2.0 * t.C_r * t.C_nb).transpose() * (t.C_r * t.C_nb) + t.C_ns.transpose() * t.C_ns;
    CHECK((sum - MatrixXd::Identity(t.node_count, t.node_count)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.transform_identity_residual() < 1e-12);
  }
}

TEST_CASE("equilibrium residual") {
  // point mass 2 between two anchored bars' free ends... use three point
  // masses on a line with two strings.
  TopologySpec spec{3, 2, {}, {{0, 1}, {1, 2}}, {0, 1, 2}};
  Topology t = build_connectivity(spec);
  VectorXd x(6);
  x << -1, 0, 0, 0, 1, 0;
  UniformParameters p;
  SUBCASE("no forces") {
    Configuration c = make_configuration(t, x, p, VectorXd::Zero(2));
    CHECK(equilibrium_residual(t, c).norm() == 0.0);
  }
  SUBCASE("balanced pair") {
    Configuration c = make_configuration(t, x, p, VectorXd::Constant(2, 3.0));
    CHECK(equilibrium_residual(t, c).segment(2, 2).norm() < 1e-14);
  }
  SUBCASE("perturbed pair gives the tension difference") {
    VectorXd g(2);
    g << 5.0, 3.0;
    Configuration c = make_configuration(t, x, p, g);
    // node 1 pulled toward 0 by string 0 (s0 = +x) and toward 2 by string 1
    VectorXd expected(2);
    expected << -(5.0 - 3.0) * 1.0, 0.0;
    CHECK((equilibrium_residual(t, c).segment(2, 2) - expected).norm() < 1e-14);
  }
}

TEST_CASE("rest lengths") {
  TopologySpec spec{2, 3, {}, {{0, 1}}, {0, 1}};
  Topology t = build_connectivity(spec);
  VectorXd x(6);
  x << 0, 0, 0, 2, 0, 0;
  UniformParameters p;
  p.string_stiffness = 100.0;
  Configuration c = make_configuration(t, x, p, VectorXd::Zero(1));
  CHECK(rest_lengths_from_prestress(t, c)(0) == doctest::Approx(2.0));
  c.prestress(0) = 50.0;
  CHECK(rest_lengths_from_prestress(t, c)(0) == doctest::Approx(1.0));
  c.prestress(0) = 37.25;
  const VectorXd rho = rest_lengths_from_prestress(t, c);
  CHECK(std::abs(prestress_from_rest_lengths(t, c, rho)(0) - 37.25) < 1e-12);
  c.prestress(0) = 100.0;
  CHECK_THROWS_AS(rest_lengths_from_prestress(t, c), std::invalid_argument);
}

TEST_CASE("rest-length round trip on random structures") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto rs = testing::random_class1(rng, 3, 2, 4, 1);
    const VectorXd rho = rest_lengths_from_prestress(rs.topology, rs.config);
    const VectorXd g = prestress_from_rest_lengths(rs.topology, rs.config, rho);
    CHECK((g - rs.config.prestress).cwiseAbs().maxCoeff() < 1e-12 * rs.config.prestress.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("class-k expansion adds joint constraints") {
  // two bars sharing node 1 (a V), nodes 0 and 2 pinned
  TopologySpec spec{3, 2, {{0, 1}, {2, 1}}, {{0, 2}}, {}};
  Topology t = build_connectivity(spec);
  CHECK(t.node_count == 4);
  REQUIRE(t.joints.size() == 1);
  CHECK(t.joints[0][0] == 1);
  CHECK(t.joints[0][1] == 3);
  CHECK(t.bars[1][1] == 3);
  VectorXd user(6);
  user << 0, 0, 1, 1, 2, 0;
  const VectorXd x = t.expand(user);
  ConstraintSet cs = make_constraints(t, x, {0, 2});
  CHECK(cs.rows() == 6);
  CHECK(cs.residual(x) == 0.0);
}

TEST_CASE("static forces recover reactions of a pinned V") {
  // Two bars meeting at an apex, feet pinned, string between the feet
  // pulling them together; the apex is held by the bars alone.
  TopologySpec spec{3, 2, {{0, 1}, {2, 1}}, {{0, 2}}, {}};
  Topology t = build_connectivity(spec);
  VectorXd user(6);
  user << 0, 0, 1, 1, 2, 0;
  const VectorXd x = t.expand(user);
  Configuration c = make_configuration(t, x, UniformParameters{}, VectorXd::Constant(1, 10.0));
  c.external_force.segment(2, 2) << 0.0, -4.0;  // load on the apex
  ConstraintSet cs = make_constraints(t, x, {0, 2});
  StaticForces sf = static_forces(t, c, cs);
  CHECK(sf.residual < 1e-10);
  // Each bar takes half the vertical load: mu * b_y = 2 with b_y = 1.
  CHECK(sf.bar_compression(0) == doctest::Approx(2.0));
  CHECK(sf.bar_compression(1) == doctest::Approx(2.0));
}
