#pragma once

#include <Eigen/Dense>

namespace thinbeam {

/// Plane elastic tensor stored as a quadratic form on symmetric 2x2 matrices.
///
/// The Voigt-type coordinates are (F11, F22, (F12 + F21)/sqrt(2)), which makes
/// the Euclidean norm of the coordinate vector equal to |sym F|. Only the
/// symmetric part of a matrix ever enters the form, so the minor symmetries of
/// the full rank-4 tensor hold by construction.
class ElasticTensor {
 public:
  ElasticTensor() : q_(Eigen::Matrix3d::Identity()) {}

  /// Stores the symmetric part of `q`. No definiteness check happens here;
  /// see coercivity_constant().
  explicit ElasticTensor(const Eigen::Matrix3d& q) : q_(0.5 * (q + q.transpose())) {}

  const Eigen::Matrix3d& voigt() const { return q_; }

  ElasticTensor scaled(double t) const { return ElasticTensor(t * q_); }

  /// Full rank-4 component C_ijkl reconstructed from the Voigt form.
  double component(int i, int j, int k, int l) const;

 private:
  Eigen::Matrix3d q_;
};

/// Voigt coordinates of sym F.
Eigen::Vector3d voigt_coordinates(const Eigen::Matrix2d& F);

/// F : C F.
double quadratic_form(const ElasticTensor& C, const Eigen::Matrix2d& F);

/// Largest c with F : C F >= c |F + F^T|^2 for all F. Throws NotCoercive when
/// the smallest eigenvalue of the Voigt form is <= 1e-12 * |q|.
double coercivity_constant(const ElasticTensor& C);

/// 2 mu |sym F|^2 + lambda tr(F)^2. Requires mu > 0 and 2 mu + lambda > 0.
ElasticTensor isotropic_tensor(double mu, double lambda);

struct BendingResult {
  double a = 0.0;
  double b_star = 0.0;
  double c_star = 0.0;
  /// Norm of the stationarity residual at (b_star, c_star).
  double residual = 0.0;
};

/// Minimum of F(b,c) : C F(b,c) over F(b,c) = [[1, b], [0, c]]. Needs the
/// form to be definite in (b, c) only and throws NotCoercive otherwise. For a
/// tensor that is not coercive the minimum may be <= 0 (isotropic: a =
/// 4 mu (mu + lambda) / (2 mu + lambda)).
BendingResult bending_constant(const ElasticTensor& C);

/// The matrix [[1, b], [0, c]].
inline Eigen::Matrix2d bending_matrix(double b, double c) {
  Eigen::Matrix2d F;
  F << 1.0, b, 0.0, c;
  return F;
}

}  // namespace thinbeam
