#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tcd/model.h"
#include "tcd/reduction.h"
#include "tcd/topology.h"

namespace tcd {

/// A(alpha) = A0 + sum_i alpha_i A_i.
class AffineMatrixFamily {
 public:
  AffineMatrixFamily() = default;
  explicit AffineMatrixFamily(Eigen::MatrixXd base, std::vector<Eigen::MatrixXd> coefficients = {});

  Eigen::MatrixXd operator()(const Eigen::VectorXd& alpha) const;
  const Eigen::MatrixXd& base() const { return base_; }
  const std::vector<Eigen::MatrixXd>& coefficients() const { return coefficients_; }
  int parameter_count() const { return static_cast<int>(coefficients_.size()); }
  int rows() const { return static_cast<int>(base_.rows()); }
  int cols() const { return static_cast<int>(base_.cols()); }
  bool is_constant() const;

  /// A constant family padded with p zero coefficients, so constant blocks
  /// share the parameter count of the system.
  AffineMatrixFamily with_parameter_count(int p) const;

 private:
  Eigen::MatrixXd base_;
  std::vector<Eigen::MatrixXd> coefficients_;
};

/// E(alpha) x' = A(alpha) x + B u + D_p(alpha) w_p + D_a(alpha) w_a,
/// y = C_y(alpha) x,  z = C_z x + D_s w_s.
struct DescriptorSystem {
  AffineMatrixFamily E, A, D_p, D_a, C_y;
  Eigen::MatrixXd B, C_z, D_s;

  int state_count() const { return A.rows(); }
  int input_count() const { return static_cast<int>(B.cols()); }
  int output_count() const { return C_y.rows(); }
  int measurement_count() const { return static_cast<int>(C_z.rows()); }
  int disturbance_count() const { return D_p.cols(); }
  int parameter_count() const { return A.parameter_count(); }
  /// Throws std::invalid_argument on inconsistent shapes or parameter counts.
  void validate() const;
};

/// W_p fixed; W_a = diag(gamma_a)^-1, W_s = diag(gamma_s)^-1.
struct NoiseModel {
  Eigen::MatrixXd W_p;
  Eigen::VectorXd gamma_a;
  Eigen::VectorXd gamma_s;
  /// blkdiag(W_p, W_a, W_s); throws if a precision is not positive.
  Eigen::MatrixXd covariance() const;
};

/// Dynamic compensator x_c' = A_c x_c + B_c z, u = C_c x_c (D_c = 0).
struct Controller {
  Eigen::MatrixXd A_c, B_c, C_c;
  int order() const { return static_cast<int>(A_c.rows()); }
};

struct ClosedLoop {
  Eigen::MatrixXd E, A, B, C, M;  // E_cl, A_cl, B_cl, C_cl, M_cl
};

/// Selection rows (d per node) of the given user nodes in expanded nodal
/// coordinates.
Eigen::MatrixXd node_selector(const Topology& t, const std::vector<int>& user_nodes);

/// Descriptor form of the minimal model with the given stiffness family:
/// E = blkdiag(I, M_k), A = [0 I; -K(alpha) -D_k], B = [0; B_k], D_p = [0; P_k],
/// D_a = B, C_y = [S_out P_tot 0], C_z = [S_meas P_tot 0; 0 S_meas P_tot]
/// (velocity rows only when measure_velocity), D_s = I.
DescriptorSystem to_descriptor(const MinimalModel& mm, const AffineMatrixFamily& stiffness, const Topology& t,
                               const std::vector<int>& output_nodes, const std::vector<int>& measured_nodes,
                               bool measure_velocity = true);

/// Constant-stiffness version using mm.K.
DescriptorSystem to_descriptor(const MinimalModel& mm, const Topology& t, const std::vector<int>& output_nodes,
                               const std::vector<int>& measured_nodes, bool measure_velocity = true);

/// K_k as an affine function of the prestress vector, with the geometry and
/// the minimal basis P_tot held fixed.
AffineMatrixFamily affine_stiffness(const TensegrityModel& model, const MinimalModel& mm);

/// Descriptor family of a model with alpha = prestress; output and
/// measurement nodes from the model.
DescriptorSystem tensegrity_descriptor(const TensegrityModel& model, bool measure_velocity = true);

/// Two-state desk plant m q'' + c q' + alpha q = u + w_p + w_a with the
/// stiffness alpha as the structure parameter: E = diag(1, m),
/// A = [0 1; -alpha -c], B = D_p = D_a = [0; 1], C_y = C_z = I, D_s = I.
DescriptorSystem oscillator_descriptor(double mass, double damping);

ClosedLoop assemble_closed_loop(const DescriptorSystem& ds, const Eigen::VectorXd& alpha, const Controller& k);

/// Steady-state covariance of the closed loop driven by white noise of
/// intensity W: X solves Ab X + X Ab' + Bb W Bb' = 0 with Ab = E^-1 A,
/// Bb = E^-1 B. Y = C X C', U = M X M'.
struct CovarianceResult {
  Eigen::MatrixXd X, Y, U;
};
CovarianceResult lyapunov_covariance(const ClosedLoop& cl, const Eigen::MatrixXd& W);

struct StabilityReport {
  bool stable = false;
  double abscissa = 0.0;
};
StabilityReport stability_check(const ClosedLoop& cl);
StabilityReport stability_check(const Eigen::MatrixXd& E, const Eigen::MatrixXd& A);

}  // namespace tcd
