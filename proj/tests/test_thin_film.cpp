#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "thinbeam/error.hpp"
#include "thinbeam/thin_film.hpp"

using namespace thinbeam;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

// Smooth test field and its rescaled gradient (d1 y, h^-1 d2 y).
Eigen::Vector2d smooth(double x1, double x2) {
  return {0.3 * std::sin(2 * x1) * x2 + 0.1 * x1 * x1, 0.2 * std::cos(x1) + 0.5 * x2 * x2 * x1};
}
Eigen::Matrix2d smooth_grad(double x1, double x2, double h) {
  Eigen::Matrix2d G;
  G(0, 0) = 0.6 * std::cos(2 * x1) * x2 + 0.2 * x1;
  G(1, 0) = -0.2 * std::sin(x1) + 0.5 * x2 * x2;
  G(0, 1) = 0.3 * std::sin(2 * x1) / h;
  G(1, 1) = x2 * x1 / h;
  return G;
}

// h^-2 int 1/2 G:CG over a box by tensor Gauss-Legendre quadrature (5 points on 40 x 40 panels).
double exact_elastic(const ElasticTensor& C, double h, const Box& box) {
  const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                        0.2369268850561891};
  const int P = 40;
  const double px = box.width() / P, py = box.height() / P;
  double s = 0.0;
  for (int a = 0; a < P; ++a)
    for (int b = 0; b < P; ++b)
      for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 5; ++l) {
          const double x1 = box.x0 + (a + 0.5 + 0.5 * gx[k]) * px;
          const double x2 = box.y0 + (b + 0.5 + 0.5 * gx[l]) * py;
          s += 0.25 * gw[k] * gw[l] * px * py * 0.5 * quadratic_form(C, smooth_grad(x1, x2, h));
        }
  return s / (h * h);
}

}  // namespace

TEST_CASE("rigid motions carry no elastic energy") {
  Eigen::Matrix2d A;
  A << 0.0, 0.7, -0.7, 0.0;
  for (double h : {1.0, 0.1, 0.01}) {
    const DisplacementField f = rigid_field(20, 10, 2.0, h, A, Eigen::Vector2d(1.0, -3.0));
    const EnergyBreakdown e = evaluate_Eh(f, {}, isotropic_tensor(1, 1), 1.0);
    CHECK(std::abs(e.elastic) <= 1e-12);
    CHECK(e.jump == 0.0);
  }
}

TEST_CASE("jump term is anisotropic") {
  const DisplacementField f(8, 8, 2.0, 0.1);
  for (double h : {1.0, 0.25, 0.05}) {
    const DisplacementField g(8, 8, 2.0, h);
    CHECK(evaluate_Eh(g, vertical_crack(1.05), isotropic_tensor(1, 0), 2.5).jump == doctest::Approx(2.5));
    CrackSet horizontal;
    horizontal.add({0.3, 0.01}, {1.1, 0.01});
    CHECK(evaluate_Eh(g, horizontal, isotropic_tensor(1, 0), 2.5).jump == doctest::Approx(2.5 * 0.8 / h));
    CHECK(horizontal.anisotropic_measure(h) == doctest::Approx(horizontal.unrescaled_length(h) / h));
  }
  CrackSet outside;
  outside.add({0.5, 0.0}, {0.5, 0.7});
  CHECK(kind_of([&] { evaluate_Eh(f, outside, isotropic_tensor(1, 0), 1.0); }) == ErrorKind::CrackOutsideDomain);
}

TEST_CASE("field validation") {
  CHECK(kind_of([] { DisplacementField(1, 4, 1.0, 0.5); }) == ErrorKind::InvalidField);
  CHECK(kind_of([] { DisplacementField(4, 4, 1.0, 0.0); }) == ErrorKind::InvalidThickness);
  CHECK(kind_of([] { DisplacementField(4, 4, 1.0, 1.5); }) == ErrorKind::InvalidThickness);
  DisplacementField f(4, 4, 1.0, 0.5);
  f.at(2, 2)(0) = std::nan("");
  CHECK(kind_of([&] { evaluate_Eh(f, {}, isotropic_tensor(1, 0), 1.0); }) == ErrorKind::InvalidField);
}

TEST_CASE("elastic energy converges at second order") {
  const ElasticTensor C = isotropic_tensor(1.0, 0.5);
  const double h = 0.5, L = 2.0;
  const double exact = exact_elastic(C, h, strip_box(L));
  std::vector<double> err;
  for (int n : {8, 16, 32, 64}) {
    const DisplacementField f = DisplacementField::sample(2 * n, n, L, h, strip_box(L), smooth);
    err.push_back(std::abs(evaluate_Eh(f, {}, C, 1.0).elastic - exact));
  }
  for (std::size_t k = 0; k + 1 < err.size(); ++k) CHECK(std::log2(err[k] / err[k + 1]) >= 1.8);
}

TEST_CASE("adding a rigid motion does not change the elastic energy") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const double h = 0.2, L = 1.5;
  const DisplacementField base = DisplacementField::sample(30, 12, L, h, strip_box(L), smooth);
  const ElasticTensor C = isotropic_tensor(2.0, 1.0);
  const CrackSet crack = vertical_crack(0.775);
  const double e0 = evaluate_Eh(base, crack, C, 1.0).elastic;
  for (int trial = 0; trial < 10; ++trial) {
    const double a = U(rng);
    Eigen::Matrix2d A;
    A << 0.0, a, -a, 0.0;
    const Eigen::Vector2d b(U(rng), U(rng));
    DisplacementField moved = base;
    for (int j = 0; j <= moved.ny(); ++j)
      for (int i = 0; i <= moved.nx(); ++i)
        moved.at(i, j) += A * Eigen::Vector2d(moved.node_x1(i), h * moved.node_x2(j)) + b;
    CHECK(std::abs(evaluate_Eh(moved, crack, C, 1.0).elastic - e0) <= 1e-10 * e0);
  }
}

TEST_CASE("one-sided cells ignore the jump across a vertical crack") {
  const double h = 0.3, L = 1.0;
  const int nx = 41, ny = 10;  // L/2 sits in the middle of a cell
  const ElasticTensor C = isotropic_tensor(1.0, 1.0);
  const DisplacementField s = DisplacementField::sample(nx, ny, L, h, strip_box(L), smooth);
  DisplacementField jumped = DisplacementField::sample(nx, ny, L, h, strip_box(L), [](double x1, double x2) {
    return Eigen::Vector2d(smooth(x1, x2) + (x1 > 0.5 ? Eigen::Vector2d(1.0, -2.0) : Eigen::Vector2d::Zero()));
  });
  const CrackSet crack = vertical_crack(0.5);
  const double smooth_e = evaluate_Eh(s, {}, C, 1.0).elastic;
  const double one_sided = evaluate_Eh(jumped, crack, C, 1.0).elastic;
  const double excluded = evaluate_Eh(jumped, crack, C, 1.0, CutCellPolicy::Exclude).elastic;
  CHECK(std::abs(one_sided - smooth_e) <= 0.01 * smooth_e);
  CHECK(excluded < one_sided);
  CHECK(evaluate_Eh(jumped, {}, C, 1.0).elastic > 100 * smooth_e);
}

TEST_CASE("triangle counterexample") {
  for (double h : {0.5, 0.25, 0.125}) {
    const double L = 1.0;
    const FieldWithCrack fc = triangle_counterexample(h, L, 128);
    CHECK(fc.crack.unrescaled_length(h) == doctest::Approx(h - std::pow(h, 4)).epsilon(1e-15));
    CHECK(fc.crack.anisotropic_measure(h) == doctest::Approx(1.0 - std::pow(h, 3)).epsilon(1e-15));

    // continuity across the triangle edges, jump only below the apex
    const double h4 = std::pow(h, 4);
    const double apex = 0.5 - h4 / h;
    const double e = 1e-9;
    for (double s : {0.1, 0.5, 0.9}) {
      const double x2 = apex + s * h4 / h;
      const double off = s * h4;
      CHECK((triangle_field(h, L, L / 2 + off + e, x2) - triangle_field(h, L, L / 2 + off - e, x2)).norm() < 1e-6);
      CHECK((triangle_field(h, L, L / 2 - off + e, x2) - triangle_field(h, L, L / 2 - off - e, x2)).norm() < 1e-6);
    }
    CHECK((triangle_field(h, L, L / 2 + e, apex - 0.1) - triangle_field(h, L, L / 2 - e, apex - 0.1)).norm() > 0.01);

    // right of L/2 off the triangle the gradient is skew
    const DisplacementField right = DisplacementField::sample(
        8, 8, L, h, {0.7, 0.9, -0.4, 0.2}, [&](double x1, double x2) { return triangle_field(h, L, x1, x2); });
    CHECK(evaluate_Eh(right, {}, isotropic_tensor(1, 0), 1.0).elastic <= 1e-9);

    // on the triangle |grad w|^2 = h^-2 but |ew|^2 = h^-2 / 2, over an area of h^8
    const double sym = sym_strain_integral(fc.field, fc.crack);
    CHECK(sym / std::pow(h, 6) == doctest::Approx(0.5).epsilon(0.05));
    const EnergyBreakdown eb = evaluate_Eh(fc.field, fc.crack, isotropic_tensor(1, 0), 1.0);
    CHECK(unrescaled_elastic(eb, h) == doctest::Approx(sym).epsilon(1e-12));
  }
  CHECK(kind_of([] { triangle_counterexample(0.0, 1.0); }) == ErrorKind::InvalidThickness);
  CHECK(kind_of([] { triangle_counterexample(1.0, 1.0); }) == ErrorKind::InvalidThickness);
}

TEST_CASE("escaping ball") {
  for (double h : {0.25, 0.125}) {
    const double L = 1.0;
    const FieldWithCrack fc = escaping_ball_example(h, L, 256, 10000);
    const EnergyBreakdown e = evaluate_Eh(fc.field, fc.crack, isotropic_tensor(1, 1), 1.0);
    CHECK(std::abs(e.elastic) <= 1e-12 * std::pow(h, -10));
    CHECK(fc.field.integrate(1) == doctest::Approx(-std::numbers::pi / h).epsilon(0.01));

    // anisotropic perimeter of the circle of radius r: r int |(cos t, sin t / h)| dt
    const double r = h * h;
    double exact = 0.0;
    const int m = 200000;
    for (int k = 0; k < m; ++k) {
      const double t = (k + 0.5) * 2 * std::numbers::pi / m;
      exact += r * std::hypot(std::cos(t), std::sin(t) / h) * 2 * std::numbers::pi / m;
    }
    CHECK(fc.crack.anisotropic_measure(h) == doctest::Approx(exact).epsilon(1e-6));
    CHECK(e.jump <= 2 * std::numbers::pi * h);
  }
  CHECK(kind_of([] { escaping_ball_example(0.9, 1.0); }) == ErrorKind::BallTooLarge);
}
