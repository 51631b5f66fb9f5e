#include <random>

#include "doctest.h"
#include "oracles.h"
#include "tcd/linalg.h"
#include "tcd/model.h"
#include "tcd/statespace.h"

using namespace tcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// One point mass in the plane whose minimal coordinate is its x position.
struct ScalarChain {
  Topology topology;
  MinimalModel mm;
};

ScalarChain scalar_chain(double m, double c, double k) {
  TopologySpec spec;
  spec.dimension = 2;
  spec.node_count = 1;
  spec.point_mass_nodes = {0};
  ScalarChain out;
  out.topology = build_connectivity(spec);
  out.mm.M = MatrixXd::Constant(1, 1, m);
  out.mm.D = MatrixXd::Constant(1, 1, c);
  out.mm.K = MatrixXd::Constant(1, 1, k);
  out.mm.P = MatrixXd::Constant(1, 2, 0.0);
  out.mm.P(0, 0) = 1.0;
  out.mm.B = MatrixXd::Constant(1, 1, 1.0);
  out.mm.P_tot = MatrixXd::Zero(2, 1);
  out.mm.P_tot(0, 0) = 1.0;
  return out;
}

ClosedLoop scalar_loop(double a) {
  ClosedLoop cl;
  cl.E = MatrixXd::Identity(1, 1);
  cl.A = MatrixXd::Constant(1, 1, a);
  cl.B = MatrixXd::Identity(1, 1);
  cl.C = MatrixXd::Identity(1, 1);
  cl.M = MatrixXd::Zero(1, 1);
  return cl;
}

Controller zero_controller(const DescriptorSystem& ds, int order) {
  return Controller{-MatrixXd::Identity(order, order), MatrixXd::Zero(order, ds.measurement_count()),
                    MatrixXd::Zero(ds.input_count(), order)};
}

// The force-density model carries no damping of its own; add a Rayleigh
// term D = c M so the open loop is Hurwitz.
DescriptorSystem damped_descriptor(const TensegrityModel& model, double c) {
  LinearizedStructure ls = linearize(model);
  ls.minimal.D = c * ls.minimal.M;
  return to_descriptor(ls.minimal, affine_stiffness(model, ls.minimal), model.topology, model.output_nodes,
                       model.measured_nodes);
}

}  // namespace

TEST_CASE("AffineMatrixFamily is exactly affine") {
  std::mt19937 rng(11);
  std::vector<MatrixXd> coeffs;
  for (int i = 0; i < 4; ++i) coeffs.push_back(testing::random_matrix(rng, 3, 5));
  const AffineMatrixFamily f(testing::random_matrix(rng, 3, 5), coeffs);
  const VectorXd zero = VectorXd::Zero(4);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd a = VectorXd::Random(4), b = VectorXd::Random(4);
    const MatrixXd lhs = f(a + b) - f(zero);
    const MatrixXd rhs = (f(a) - f(zero)) + (f(b) - f(zero));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(f.parameter_count() == 4);
  CHECK_FALSE(f.is_constant());
  CHECK(AffineMatrixFamily(MatrixXd::Ones(2, 2)).with_parameter_count(3).is_constant());
  CHECK_THROWS_AS(f(VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(AffineMatrixFamily(MatrixXd::Zero(2, 2), {MatrixXd::Zero(3, 2)}), std::invalid_argument);
}

TEST_CASE("to_descriptor on a scalar chain") {
  const ScalarChain sc = scalar_chain(2.0, 0.3, 5.0);
  const DescriptorSystem ds = to_descriptor(sc.mm, sc.topology, {0}, {0});
  MatrixXd E(2, 2), A(2, 2);
  E << 1, 0, 0, 2;
  A << 0, 1, -5, -0.3;
  CHECK((ds.E.base() - E).norm() == 0.0);
  CHECK((ds.A.base() - A).norm() == 0.0);
  CHECK(ds.C_y.rows() == 2);
  CHECK(ds.C_z.rows() == 4);
  CHECK(ds.D_s.isIdentity());
  CHECK(ds.B(1, 0) == 1.0);
  CHECK((ds.D_a.base() - ds.B).norm() == 0.0);
  CHECK(to_descriptor(sc.mm, sc.topology, {0}, {0}, false).C_z.rows() == 2);
  CHECK_THROWS_AS(to_descriptor(sc.mm, sc.topology, {}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(to_descriptor(sc.mm, sc.topology, {1}, {0}), std::invalid_argument);
}

TEST_CASE("descriptor spectrum matches the independently reduced pencil") {
  for (const TensegrityModel& model : {desk_beam(), desk_arm()}) {
    const LinearizedStructure ls = linearize(model);
    const DescriptorSystem ds = to_descriptor(ls.minimal, model.topology, model.output_nodes, model.measured_nodes);
    CHECK(ds.C_y.rows() == 2 * static_cast<int>(model.output_nodes.size()));

    // Oracle: restrict the class-1 pencil to ker[A; Phi1'] directly.
    MatrixXd stacked(model.constraints.A.rows() + ls.modes.Phi1.cols(), ls.modes.Phi1.rows());
    stacked << model.constraints.A, ls.modes.Phi1.transpose();
    const MatrixXd N = testing::kernel_basis(stacked);
    const MatrixXd Mn = N.transpose() * ls.class1.M * N, Kn = N.transpose() * ls.class1.K * N;
    const VectorXd mu = testing::sorted_real_eigenvalues(Mn.llt().solve(Kn));

    // Undamped: eig(E^-1 A) = +-i sqrt(mu).
    const MatrixXd Abar = ds.E.base().lu().solve(ds.A.base());
    const Eigen::VectorXcd lam = Abar.eigenvalues();
    std::vector<double> w2;
    for (int i = 0; i < lam.size(); ++i) {
      CHECK(std::abs(lam(i).real()) < 1e-8 * std::sqrt(mu.maxCoeff()));
      if (lam(i).imag() > 0) w2.push_back(lam(i).imag() * lam(i).imag());
    }
    std::sort(w2.begin(), w2.end());
    REQUIRE(static_cast<int>(w2.size()) == mu.size());
    for (int i = 0; i < mu.size(); ++i) CHECK(w2[i] == doctest::Approx(mu(i)).epsilon(1e-8));
  }
}

TEST_CASE("affine_stiffness reproduces the minimal stiffness") {
  const TensegrityModel model = desk_beam();
  const LinearizedStructure ls = linearize(model);
  const AffineMatrixFamily K = affine_stiffness(model, ls.minimal);
  REQUIRE(K.parameter_count() == model.topology.string_count());
  const double scale = ls.minimal.K.cwiseAbs().maxCoeff();
  CHECK((K(model.config.prestress) - ls.minimal.K).cwiseAbs().maxCoeff() < 1e-10 * scale);

  const VectorXd zero = VectorXd::Zero(K.parameter_count());
  const VectorXd g = model.config.prestress;
  CHECK(((K(2 * g) - K(zero)) - 2 * (K(g) - K(zero))).cwiseAbs().maxCoeff() < 1e-10 * scale);

  // No prestress and no load: nothing is left of the geometric stiffness.
  CHECK(K(zero).cwiseAbs().maxCoeff() < 1e-10 * scale);

  // Scaling the prestress and relinearizing from scratch lands on the family.
  for (double s : {0.5, 3.0}) {
    const TensegrityModel scaled = scaled_prestress(model, s);
    const LinearizedStructure lss = linearize(scaled);
    CHECK((lss.minimal.P_tot - ls.minimal.P_tot).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((K(s * g) - lss.minimal.K).cwiseAbs().maxCoeff() < 1e-10 * s * scale);
  }

  // Each coefficient is symmetric. A single string is not a self-stress, so
  // its coefficient also carries the bar compressions that balance it and
  // need not be PSD; the prestress direction as a whole stiffens.
  for (const MatrixXd& Ki : K.coefficients()) {
    CHECK((Ki - Ki.transpose()).cwiseAbs().maxCoeff() < 1e-10 * scale);
  }
  CHECK(min_eigenvalue(symmetrize(K(g) - K(zero))) > 0.0);
}

TEST_CASE("assemble_closed_loop structure") {
  const TensegrityModel model = desk_arm();
  const DescriptorSystem ds = tensegrity_descriptor(model);
  const VectorXd alpha = model.config.prestress;
  const int nc = 3;
  std::mt19937 rng(5);
  const Controller k{testing::random_matrix(rng, nc, nc), testing::random_matrix(rng, nc, ds.measurement_count()),
                     testing::random_matrix(rng, ds.input_count(), nc)};
  const ClosedLoop cl = assemble_closed_loop(ds, alpha, k);
  const int n = ds.state_count();
  CHECK(cl.A.rows() == n + nc);
  CHECK(cl.B.cols() == ds.disturbance_count() + ds.input_count() + ds.measurement_count());
  CHECK((cl.A.topRightCorner(n, nc) - ds.B * k.C_c).norm() < 1e-14);
  CHECK((cl.A.bottomLeftCorner(nc, n) - k.B_c * ds.C_z).norm() < 1e-14);
  CHECK((cl.A.bottomRightCorner(nc, nc) - k.A_c).norm() == 0.0);
  CHECK(cl.E.bottomRightCorner(nc, nc).isIdentity());
  CHECK(cl.M.leftCols(n).norm() == 0.0);
  CHECK(cl.C.rightCols(nc).norm() == 0.0);

  Controller bad = k;
  bad.B_c = MatrixXd::Zero(nc, ds.measurement_count() + 1);
  CHECK_THROWS_AS(assemble_closed_loop(ds, alpha, bad), std::invalid_argument);
}

TEST_CASE("zero controller preserves the open-loop output covariance") {
  const TensegrityModel model = desk_arm();
  const DescriptorSystem ds = damped_descriptor(model, 0.5);
  const VectorXd alpha = model.config.prestress;
  NoiseModel nm{MatrixXd::Identity(ds.disturbance_count(), ds.disturbance_count()),
                VectorXd::Constant(ds.input_count(), 4.0), VectorXd::Constant(ds.measurement_count(), 100.0)};
  const ClosedLoop cl = assemble_closed_loop(ds, alpha, zero_controller(ds, 2));
  const CovarianceResult cov = lyapunov_covariance(cl, nm.covariance());

  // Oracle: Kronecker Lyapunov solve of the open loop alone.
  const MatrixXd Einv = ds.E(alpha).inverse();
  const MatrixXd Abar = Einv * ds.A(alpha);
  MatrixXd Bw(ds.state_count(), ds.disturbance_count() + ds.input_count());
  Bw << Einv * ds.D_p(alpha), Einv * ds.D_a(alpha);
  MatrixXd Wo = MatrixXd::Zero(Bw.cols(), Bw.cols());
  Wo.topLeftCorner(ds.disturbance_count(), ds.disturbance_count()) = nm.W_p;
  Wo.bottomRightCorner(ds.input_count(), ds.input_count()).diagonal() = nm.gamma_a.cwiseInverse();
  const MatrixXd X = testing::kron_lyapunov(Abar, Bw * Wo * Bw.transpose());
  const MatrixXd Y = ds.C_y(alpha) * X * ds.C_y(alpha).transpose();
  CHECK(testing::relative_error(cov.Y, Y) < 1e-9);
  CHECK(cov.U.norm() == 0.0);
}

TEST_CASE("lyapunov_covariance") {
  ClosedLoop cl = scalar_loop(-1.0);
  CHECK(lyapunov_covariance(cl, MatrixXd::Identity(1, 1)).X(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lyapunov_covariance(cl, MatrixXd::Zero(1, 1)).X.norm() == 0.0);
  CHECK_THROWS_AS(lyapunov_covariance(scalar_loop(1.0), MatrixXd::Identity(1, 1)), std::invalid_argument);
  CHECK_THROWS_AS(lyapunov_covariance(cl, MatrixXd::Identity(2, 2)), std::invalid_argument);

  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    ClosedLoop r;
    r.E = testing::random_matrix(rng, 6, 6) + 4.0 * MatrixXd::Identity(6, 6);
    r.A = r.E * testing::random_hurwitz(rng, 6);
    r.B = testing::random_matrix(rng, 6, 3);
    r.C = testing::random_matrix(rng, 2, 6);
    r.M = testing::random_matrix(rng, 1, 6);
    const MatrixXd G = testing::random_matrix(rng, 3, 3);
    const MatrixXd W = G * G.transpose();
    const CovarianceResult cov = lyapunov_covariance(r, W);
    const MatrixXd Ab = r.E.lu().solve(r.A), Bb = r.E.lu().solve(r.B);
    const MatrixXd res = Ab * cov.X + cov.X * Ab.transpose() + Bb * W * Bb.transpose();
    CHECK(res.norm() < 1e-9 * std::max(1.0, cov.X.norm()));
    CHECK(min_eigenvalue(cov.X) > -1e-12);
    CHECK(testing::relative_error(cov.X, testing::kron_lyapunov(Ab, Bb * W * Bb.transpose())) < 1e-9);
  }
}

TEST_CASE("stability_check") {
  StabilityReport s = stability_check(scalar_loop(-1.0));
  CHECK(s.stable);
  CHECK(s.abscissa == doctest::Approx(-1.0));
  CHECK_FALSE(stability_check(scalar_loop(1.0)).stable);
  ClosedLoop singular = scalar_loop(-1.0);
  singular.E(0, 0) = 0.0;
  CHECK_THROWS(stability_check(singular));

  // Undamped pinned structure: marginal, reported not stable.
  const TensegrityModel model = desk_beam();
  const DescriptorSystem ds = tensegrity_descriptor(model);
  const StabilityReport open = stability_check(ds.E(model.config.prestress), ds.A(model.config.prestress));
  CHECK(std::abs(open.abscissa) < 1e-8);
  CHECK_FALSE(open.stable);

  const DescriptorSystem dds = damped_descriptor(model, 0.5);
  const StabilityReport ds_report = stability_check(dds.E(model.config.prestress), dds.A(model.config.prestress));
  CHECK(ds_report.stable);
  CHECK(ds_report.abscissa == doctest::Approx(-0.25));
}
