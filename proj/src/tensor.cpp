#include "thinbeam/tensor.hpp"

#include <cmath>

#include "thinbeam/error.hpp"

namespace thinbeam {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// Index of the Voigt slot holding the (i,j) entry and the factor that converts
// F_ij into that slot's contribution.
int voigt_slot(int i, int j) {
  if (i == j) return i;
  return 2;
}

double voigt_weight(int i, int j) { return i == j ? 1.0 : 1.0 / kSqrt2; }

}  // namespace

double ElasticTensor::component(int i, int j, int k, int l) const {
  return voigt_weight(i, j) * voigt_weight(k, l) * q_(voigt_slot(i, j), voigt_slot(k, l));
}

Eigen::Vector3d voigt_coordinates(const Eigen::Matrix2d& F) {
  return {F(0, 0), F(1, 1), (F(0, 1) + F(1, 0)) / kSqrt2};
}

double quadratic_form(const ElasticTensor& C, const Eigen::Matrix2d& F) {
  const Eigen::Vector3d s = voigt_coordinates(F);
  return s.dot(C.voigt() * s);
}

double coercivity_constant(const ElasticTensor& C) {
  const Eigen::Matrix3d& q = C.voigt();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(q, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  if (lmin <= 1e-12 * q.norm()) {
    fail(ErrorKind::NotCoercive, "elastic tensor is not coercive (smallest Voigt eigenvalue " +
                                     std::to_string(lmin) + ")");
  }
  // |F + F^T|^2 = 4 |sym F|^2 = 4 |s|^2
  return 0.25 * lmin;
}

ElasticTensor isotropic_tensor(double mu, double lambda) {
  if (!(mu > 0.0) || !(2.0 * mu + lambda > 0.0)) {
    fail(ErrorKind::InvalidLame, "Lame parameters need mu > 0 and 2 mu + lambda > 0");
  }
  Eigen::Matrix3d q = 2.0 * mu * Eigen::Matrix3d::Identity();
  q.topLeftCorner<2, 2>().array() += lambda;
  return ElasticTensor(q);
}

BendingResult bending_constant(const ElasticTensor& C) {
  const Eigen::Matrix3d& q = C.voigt();
  // s(b,c) = e1 + c e2 + (b/sqrt2) e3; minimize over t = (c, b/sqrt2).
  const Eigen::Matrix2d H = q.bottomRightCorner<2, 2>();
  const Eigen::Vector2d g = q.block<2, 1>(1, 0);
  // only the (b, c) block has to be definite; isotropic tensors with
  // -2 mu < lambda <= -mu qualify although they are not coercive
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(H).eigenvalues();
  if (!(ev(0) > 1e-12 * q.norm())) {
    fail(ErrorKind::NotCoercive, "bending minimization is not strictly convex");
  }
  const Eigen::Vector2d t = H.ldlt().solve(-g);

  BendingResult r;
  r.c_star = t(0);
  r.b_star = kSqrt2 * t(1);
  r.a = q(0, 0) + g.dot(t);
  r.residual = (H * t + g).norm();
  return r;
}

}  // namespace thinbeam
