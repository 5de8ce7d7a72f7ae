#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "thinbeam/error.hpp"
#include "thinbeam/tensor.hpp"

using namespace thinbeam;

namespace {

Eigen::Matrix2d mat(double a, double b, double c, double d) {
  Eigen::Matrix2d F;
  F << a, b, c, d;
  return F;
}

Eigen::Matrix2d random_matrix(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  return mat(U(rng), U(rng), U(rng), U(rng));
}

}  // namespace

TEST_CASE("quadratic form examples") {
  CHECK(quadratic_form(isotropic_tensor(1, 0), mat(0, 1, -1, 0)) == doctest::Approx(0.0));
  CHECK(quadratic_form(isotropic_tensor(1, 1), Eigen::Matrix2d::Identity()) == doctest::Approx(8.0));
  CHECK(quadratic_form(isotropic_tensor(1, 0), mat(1, 0, 0, 0)) == doctest::Approx(2.0));
}

TEST_CASE("quadratic form matches the rank-4 index sum") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Matrix3d q = oracle::random_spd(rng, 0.1);
    const ElasticTensor C(q);
    const Eigen::Matrix2d F = random_matrix(rng);
    CHECK(quadratic_form(C, F) == doctest::Approx(oracle::index_sum_form(q, F)).epsilon(1e-13));
    // component() reproduces the same index sum
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) s += C.component(i, j, a, b) * F(i, j) * F(a, b);
    CHECK(s == doctest::Approx(quadratic_form(C, F)).epsilon(1e-13));
  }
}

TEST_CASE("quadratic form sees only the symmetric part") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const ElasticTensor C(oracle::random_spd(rng));
    const Eigen::Matrix2d F = random_matrix(rng);
    const Eigen::Matrix2d S = 0.5 * (F + F.transpose());
    CHECK(quadratic_form(C, F) == doctest::Approx(quadratic_form(C, S)).epsilon(1e-14));
    CHECK(quadratic_form(C, F) >= 0.0);
  }
}

TEST_CASE("isotropic tensor matches 2 mu |sym F|^2 + lambda tr(F)^2") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(0.1, 5.0);
  for (int k = 0; k < 50; ++k) {
    const double mu = U(rng);
    const double lambda = U(rng) - mu;
    const ElasticTensor C = isotropic_tensor(mu, lambda);
    const Eigen::Matrix2d F = random_matrix(rng);
    const Eigen::Matrix2d S = 0.5 * (F + F.transpose());
    const double expected = 2 * mu * S.squaredNorm() + lambda * F.trace() * F.trace();
    CHECK(quadratic_form(C, F) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("isotropic tensor rejects invalid Lame parameters") {
  CHECK_THROWS_AS(isotropic_tensor(0.0, 1.0), Error);
  CHECK_THROWS_AS(isotropic_tensor(1.0, -2.0), Error);
  try {
    isotropic_tensor(-1.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidLame);
  }
}

TEST_CASE("coercivity constant") {
  CHECK(coercivity_constant(isotropic_tensor(1, 0)) == doctest::Approx(0.5));
  CHECK(coercivity_constant(isotropic_tensor(2, -1)) > 0.0);

  bool threw = false;
  try {
    coercivity_constant(ElasticTensor(Eigen::Matrix3d::Zero()));
  } catch (const Error& e) {
    threw = e.kind() == ErrorKind::NotCoercive;
  }
  CHECK(threw);
  // admissible Lame pair that is still not coercive in 2D (mu + lambda < 0)
  CHECK_THROWS_AS(coercivity_constant(isotropic_tensor(1.0, -1.5)), Error);
}

TEST_CASE("coercivity constant agrees with random sampling") {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 5; ++k) {
    const Eigen::Matrix3d q = oracle::random_spd(rng, 0.2);
    const double c = coercivity_constant(ElasticTensor(q));
    const double sampled = oracle::sampled_coercivity(q, rng);
    CHECK(sampled >= c * (1 - 1e-12));
    CHECK(sampled == doctest::Approx(c).epsilon(1e-6));
  }
}

TEST_CASE("bending constant examples") {
  const BendingResult r11 = bending_constant(isotropic_tensor(1, 1));
  CHECK(r11.a == doctest::Approx(8.0 / 3.0).epsilon(1e-14));

  const BendingResult r10 = bending_constant(isotropic_tensor(1, 0));
  CHECK(r10.a == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r10.b_star == doctest::Approx(0.0));
  CHECK(r10.c_star == doctest::Approx(0.0));

  CHECK_THROWS_AS(bending_constant(ElasticTensor(Eigen::Matrix3d::Zero())), Error);
}

TEST_CASE("bending constant closed form for isotropic tensors") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> U(0.05, 10.0);
  for (int k = 0; k < 50; ++k) {
    const double mu = U(rng);
    // down to 2 mu + lambda > 0, past the coercive range mu + lambda > 0
    const double lambda = -2 * mu + U(rng);
    const BendingResult r = bending_constant(isotropic_tensor(mu, lambda));
    const double expected = 2 * mu + 2 * mu * lambda / (2 * mu + lambda);
    CHECK(r.a == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.residual <= 1e-12 * isotropic_tensor(mu, lambda).voigt().norm());
  }
}

TEST_CASE("bending constant agrees with grid search") {
  std::mt19937_64 rng(16);
  for (int k = 0; k < 3; ++k) {
    const Eigen::Matrix3d q = oracle::random_spd(rng, 1.0);
    const BendingResult r = bending_constant(ElasticTensor(q));
    const oracle::GridMin g = oracle::grid_search_bending(q);
    CHECK(std::abs(r.a - g.a) <= 1e-5);
    CHECK(g.a >= r.a - 1e-12);
  }
}

TEST_CASE("bending constant properties") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  std::uniform_real_distribution<double> T(0.1, 10.0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Matrix3d q = oracle::random_spd(rng, 0.5);
    const ElasticTensor C(q);
    const BendingResult r = bending_constant(C);

    const double t = T(rng);
    CHECK(bending_constant(C.scaled(t)).a == doctest::Approx(t * r.a).epsilon(1e-12));

    // adding a PSD matrix can only raise the constant
    Eigen::Vector3d v(U(rng), U(rng), U(rng));
    const ElasticTensor stiffer(q + v * v.transpose());
    CHECK(bending_constant(stiffer).a >= r.a - 1e-12);

    const double best = quadratic_form(C, bending_matrix(r.b_star, r.c_star));
    CHECK(best == doctest::Approx(r.a).epsilon(1e-12));
    for (int j = 0; j < 100; ++j) {
      CHECK(quadratic_form(C, bending_matrix(U(rng), U(rng))) >= best - 1e-12);
    }
  }
}
