#include <random>

#include "doctest.h"
#include "oracles.h"
#include "random_structures.h"
#include "tcd/linalg.h"
#include "tcd/model.h"
#include "tcd/reduction.h"

using namespace tcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// eig(M^-1 K) on the subspace spanned by the columns of N.
VectorXd restricted_spectrum(const MatrixXd& M, const MatrixXd& K, const MatrixXd& N) {
  const MatrixXd Mn = N.transpose() * M * N, Kn = N.transpose() * K * N;
  return testing::sorted_real_eigenvalues(Mn.llt().solve(Kn));
}

}  // namespace

TEST_CASE("svd_project basics") {
  MatrixXd A(1, 3);
  A << 1, 0, 0;
  ProjectionBasis pb = svd_project(A);
  CHECK(pb.rank == 1);
  CHECK(pb.sigma1(0) == doctest::Approx(1.0));
  CHECK(pb.V2.cols() == 2);
  CHECK(std::abs(pb.V2.row(0).norm()) < 1e-15);

  MatrixXd dup(3, 4);
  dup << 1, 2, 0, 1, 1, 2, 0, 1, 0, 1, 1, 0;
  ProjectionBasis pd = svd_project(dup);
  CHECK(pd.rank == 2);
  CHECK(pd.dropped == 1);

  CHECK_THROWS_AS(svd_project(MatrixXd::Zero(2, 3)), std::invalid_argument);

  std::mt19937 rng(4);
  const MatrixXd R = testing::random_matrix(rng, 4, 9);
  ProjectionBasis pr = svd_project(R);
  CHECK((R * pr.V2).norm() < 1e-10);
  MatrixXd V(9, 9);
  V << pr.V1, pr.V2;
  CHECK((V.transpose() * V - MatrixXd::Identity(9, 9)).norm() < 1e-10);
  CHECK((pr.U * pr.sigma1.asDiagonal() * pr.V1.transpose() - R).norm() < 1e-10);
}

TEST_CASE("reduce_classk") {
  std::mt19937 rng(6);
  auto rs = testing::random_class1(rng, 3, 3, 5, 1, false);
  const auto& t = rs.topology;
  Class1Model m = assemble_class1(t, rs.config);
  SUBCASE("empty constraints leave the model unchanged") {
    SecondOrderModel r = reduce_classk(m, ConstraintSet{}, rs.config.positions);
    CHECK((r.M - m.M).norm() == 0.0);
    CHECK((r.K - m.K).norm() == 0.0);
  }
  SUBCASE("pinning one node removes d coordinates") {
    ConstraintSet cs = make_constraints(t, rs.config.positions, {0});
    SecondOrderModel r = reduce_classk(m, cs, rs.config.positions);
    CHECK(r.M.rows() == t.coordinate_count() - 3);
  }
  SUBCASE("spectrum equals the independently reduced pencil") {
    ConstraintSet cs = make_constraints(t, rs.config.positions, {0, 3});
    SecondOrderModel r = reduce_classk(m, cs, rs.config.positions);
    const MatrixXd N = testing::kernel_basis(cs.A);
    const VectorXd ref = restricted_spectrum(m.M, m.K, N);
    const VectorXd got = testing::sorted_real_eigenvalues(r.M.llt().solve(r.K));
    CHECK((got - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));
  }
  SUBCASE("inconsistent equilibrium is rejected") {
    ConstraintSet cs = make_constraints(t, rs.config.positions, {0});
    cs.d(0) += 1.0;
    CHECK_THROWS_AS(reduce_classk(m, cs, rs.config.positions), std::invalid_argument);
  }
}

TEST_CASE("bar mode basis") {
  TopologySpec spec{2, 3, {{0, 1}}, {}, {}};
  Topology t = build_connectivity(spec);
  VectorXd x(6);
  x << 0, 0, 0, 2, 0, 0;
  Configuration c = make_configuration(t, x, UniformParameters{}, VectorXd(0));
  BarModeBasis bm = bar_mode_basis(t, c);
  VectorXd expected(6);
  expected << -1, 0, 0, 1, 0, 0;
  expected /= std::sqrt(2.0);
  CHECK((bm.Phi1.col(0) - expected).norm() < 1e-14);
  CHECK(bm.Phi2.cols() == 5);

  std::mt19937 rng(17);
  for (int k = 0; k < 10; ++k) {
    auto rs = testing::random_class1(rng, 2 + k % 2, 1 + k % 4, 3, k % 3, false);
    BarModeBasis b = bar_mode_basis(rs.topology, rs.config);
    MatrixXd Phi(b.Phi1.rows(), b.Phi1.cols() + b.Phi2.cols());
    Phi << b.Phi1, b.Phi2;
    REQUIRE(Phi.cols() == Phi.rows());
    CHECK((Phi.transpose() * Phi - MatrixXd::Identity(Phi.cols(), Phi.cols())).cwiseAbs().maxCoeff() < 1e-10);
    const int d = rs.topology.dimension;
    for (int dir = 0; dir < d; ++dir) {
      VectorXd translation = VectorXd::Zero(rs.topology.coordinate_count());
      for (int v = 0; v < rs.topology.node_count; ++v) translation(d * v + dir) = 1.0;
      CHECK((b.Phi1.transpose() * translation).cwiseAbs().maxCoeff() < 1e-12);
    }
    // each stretch column touches only its bar's nodes
    for (int i = 0; i < rs.topology.bar_count(); ++i) {
      int nonzero_nodes = 0;
      for (int v = 0; v < rs.topology.node_count; ++v) {
        if (b.Phi1.block(d * v, i, d, 1).norm() > 0.0) ++nonzero_nodes;
      }
      CHECK(nonzero_nodes == 2);
    }
  }
}

TEST_CASE("minimal model mode counts") {
  for (int d : {2, 3}) {
    TopologySpec spec{2, d, {{0, 1}}, {}, {}};
    Topology t = build_connectivity(spec);
    VectorXd x = VectorXd::Zero(2 * d);
    x(d) = 1.0;
    Configuration c = make_configuration(t, x, UniformParameters{}, VectorXd(0));
    Class1Model m = assemble_class1(t, c);
    MinimalModel mm = minimal_model(m, ConstraintSet{}, bar_mode_basis(t, c));
    CHECK(mm.size() == (d == 2 ? 3 : 5));
    CHECK(mm.size() == minimal_mode_count(d, 1, 0, 0));
    // class-1: identical to the Phi2-only reduction
    CHECK((mm.P_tot - bar_mode_basis(t, c).Phi2).norm() == 0.0);
  }
}

TEST_CASE("desk beam minimal model") {
  TensegrityModel beam = desk_beam();
  LinearizedStructure L = linearize(beam);
  const MinimalModel& mm = L.minimal;
  CHECK(mm.size() == minimal_mode_count(2, 4, 0, mm.constraint_rank));
  CHECK(mm.size() == 4);
  CHECK((beam.constraints.A * mm.P_tot).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((L.modes.Phi1.transpose() * mm.P_tot).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((mm.K - mm.K.transpose()).cwiseAbs().maxCoeff() < 1e-10 * mm.K.norm());
  CHECK(min_eigenvalue(mm.K) > 0.0);
  CHECK(min_eigenvalue(mm.M) > 0.0);
  // spectrum against an independent kernel of [A; Phi1']
  MatrixXd stacked(beam.constraints.rows() + L.modes.Phi1.cols(), mm.P_tot.rows());
  stacked << beam.constraints.A, L.modes.Phi1.transpose();
  const MatrixXd N = testing::kernel_basis(stacked);
  REQUIRE(N.cols() == mm.size());
  const VectorXd ref = restricted_spectrum(L.class1.M, L.class1.K, N);
  const VectorXd got = testing::sorted_real_eigenvalues(mm.M.llt().solve(mm.K));
  CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-8 * ref.cwiseAbs().maxCoeff());
}
