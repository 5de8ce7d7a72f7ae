#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "thinbeam/compactness.hpp"
#include "thinbeam/error.hpp"
#include "thinbeam/recovery.hpp"
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

Eigen::Matrix2d skew(double a) {
  Eigen::Matrix2d A;
  A << 0, a, -a, 0;
  return A;
}

// Piecewise rigid field: motion k on the k-th piece between sorted cut points.
DisplacementField pieces(int nx, int ny, double L, double h, const std::vector<double>& cuts,
                         const std::vector<Eigen::Vector3d>& motions) {
  return DisplacementField::sample(nx, ny, L, h, strip_box(L), [&](double x1, double x2) {
    std::size_t k = 0;
    while (k < cuts.size() && x1 > cuts[k]) ++k;
    const Eigen::Vector3d& m = motions[k];
    return Eigen::Vector2d(skew(m(0)) * Eigen::Vector2d(x1, h * x2) + m.tail<2>());
  });
}

CrackSet cracks_at(const std::vector<double>& xs) {
  CrackSet c;
  for (double x : xs) c.append(vertical_crack(x));
  return c;
}

}  // namespace

TEST_CASE("classification by crack length") {
  const double L = 1.0, h = 1.0 / 8;
  const DisplacementField f = rigid_field(128, 8, L, h, skew(0.3), {1.0, -2.0});

  const GoodBadPartition empty = classify_rectangles(f, {}, 1.0 / 16);
  REQUIRE(empty.rects.size() == 7);
  for (std::size_t k = 0; k < empty.rects.size(); ++k) {
    CHECK(empty.rects[k].good);
    CHECK(empty.rects[k].z == doctest::Approx((k + 1) * h));
    CHECK(empty.rects[k].cells.size() == 32 * 8);
  }

  for (double xs : {0.43, 0.5, 0.2501}) {
    const GoodBadPartition P = classify_rectangles(f, vertical_crack(xs), 1.0 / 16);
    for (const Rectangle& R : P.rects) {
      CAPTURE(R.z);
      CHECK(R.good == !(std::abs(R.z - xs) < h));
      if (!R.good) CHECK(R.crack_length == doctest::Approx(h));
    }
  }

  // depends on the crack only
  const DisplacementField g = rigid_field(128, 8, L, h, skew(-1.7), {0.0, 5.0});
  const CrackSet c = cracks_at({0.31, 0.77});
  const GoodBadPartition P1 = classify_rectangles(f, c, 0.05), P2 = classify_rectangles(g, c, 0.05);
  for (std::size_t k = 0; k < P1.rects.size(); ++k) CHECK(P1.rects[k].good == P2.rects[k].good);

  // triangle crack {1/2} x (-1/2, 1/2 - h^3): unrescaled length h - h^4, only Q_{1/2} holds it
  const CrackSet tri = triangle_counterexample(h, L, 8).crack;
  const GoodBadPartition T = classify_rectangles(f, tri, 1.0 / 16);
  int bad = 0;
  for (const Rectangle& R : T.rects) {
    if (R.good) continue;
    ++bad;
    CHECK(R.z == 0.5);
    CHECK(R.crack_length == doctest::Approx(h - std::pow(h, 4)).epsilon(1e-14));
  }
  CHECK(bad == 1);

  // short slanted crack of unrescaled length sqrt(0.01^2 + (h 0.2)^2)
  CrackSet s;
  s.add({0.6, -0.1}, {0.61, 0.1});
  const double len = std::hypot(0.01, 0.2 * h);
  for (double delta : {0.9 * len / h, 1.1 * len / h}) {
    if (delta > 1.0 / 16) continue;
    const GoodBadPartition Q = classify_rectangles(f, s, delta);
    CHECK(Q.rects[4].good == (len <= delta * h));
  }

  CHECK(kind_of([&] { classify_rectangles(f, {}, 0.0); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { classify_rectangles(f, {}, 0.1); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { classify_rectangles(rigid_field(6, 4, L, h, skew(0), {0, 0}), {}, 0.05); }) ==
        ErrorKind::GridMismatch);
  CHECK(kind_of([&] {
          classify_rectangles(triangle_counterexample(h, L, 8).field, {}, 0.05);
        }) == ErrorKind::InvalidField);
}

TEST_CASE("omega_z and the perimeter budget") {
  const double h = 1.0 / 8;
  const DisplacementField f = rigid_field(128, 16, 1.0, h, skew(0), {0, 0});
  CrackSet c;
  c.add({0.6, -0.5}, {0.6, -0.3});
  GoodBadPartition P = classify_rectangles(f, c, 0.05);
  // the piece has unrescaled length 0.2 h > delta h, so the neighbours are bad
  for (const Rectangle& R : P.rects) CHECK(R.good == !(std::abs(R.z - 0.6) < h));

  // tiny slit in cell (77, 0): omega is that cell and its three neighbours
  CrackSet t;
  t.add({0.603, -0.5}, {0.603, -0.49});
  P = classify_rectangles(f, t, 0.0625);
  const Rectangle& R = P.rects[4];
  REQUIRE(R.good);
  CHECK(R.omega == std::vector<int>{76, 77, 78, 128 + 77});
  const double dx = 1.0 / 128, dy = 1.0 / 16;
  CHECK(R.omega_perimeter == doctest::Approx(4 * h * dy + 3 * dx));
  CHECK_FALSE(R.korn_budget_ok);

  // a rectangle whose cells are all excluded turns bad
  const DisplacementField g = rigid_field(4, 2, 1.0, 0.25, skew(0.2), {0, 1});
  CrackSet d;
  d.add({0.249, -0.001}, {0.251, 0.001});
  GoodBadPartition E = classify_rectangles(g, d, 0.0625);
  REQUIRE(E.rects[0].good);
  fit_rigid_motions(E, g);
  CHECK(E.rects[0].empty);
  CHECK_FALSE(E.rects[0].good);
  CHECK(E.rects[1].fitted);
}

TEST_CASE("rigid fits") {
  const double L = 2.0, h = 1.0 / 16;
  const Eigen::Vector3d m(0.7, -1.2, 3.5);
  const DisplacementField f = rigid_field(512, 8, L, h, skew(m(0)), m.tail<2>());
  GoodBadPartition P = classify_rectangles(f, {}, 0.05);
  fit_rigid_motions(P, f);
  for (const Rectangle& R : P.rects) {
    CHECK((R.motion - m).norm() < 1e-10);
    CHECK(R.residual < 1e-20);
  }

  // perturbation eps (sin 3 x1, cos 2 x1): the fit error is linear in eps
  double err[2];
  const double eps[2] = {1e-3, 1e-5};
  for (int k = 0; k < 2; ++k) {
    const DisplacementField g = DisplacementField::sample(512, 8, L, h, strip_box(L), [&](double x1, double x2) {
      return Eigen::Vector2d(skew(m(0)) * Eigen::Vector2d(x1, h * x2) + m.tail<2>() +
                             eps[k] * Eigen::Vector2d(std::sin(3 * x1), std::cos(2 * x1)));
    });
    GoodBadPartition Q = classify_rectangles(g, {}, 0.05);
    fit_rigid_motions(Q, g);
    err[k] = 0;
    for (const Rectangle& R : Q.rects) err[k] = std::max(err[k], std::abs(R.motion(0) - m(0)));
    CHECK(err[k] <= 2.0 * eps[k]);
  }
  CHECK(err[1] / err[0] == doctest::Approx(eps[1] / eps[0]).epsilon(1e-4));
}

TEST_CASE("fit residual is orthogonal to the rigid motions") {
  const double L = 1.0, h = 0.1;
  const DisplacementField f = DisplacementField::sample(200, 10, L, h, strip_box(L), [](double x1, double x2) {
    return Eigen::Vector2d(std::sin(5 * x1) + x2 * x2, std::exp(x1) * x2 - x1 * x1);
  });
  CrackSet c;
  c.add({0.52, -0.5}, {0.521, -0.45});
  GoodBadPartition P = classify_rectangles(f, c, 0.0625);
  fit_rigid_motions(P, f);
  int checked = 0;
  for (const Rectangle& R : P.rects) {
    if (!R.fitted) continue;
    const FitSystem F = fit_system(P, R, f);
    const Eigen::Vector2d c0 = skew(R.motion(0)) * F.centre + R.motion.tail<2>();
    const Eigen::Vector3d theta(R.motion(0), c0(0), c0(1));
    const Eigen::VectorXd res = F.r - F.M * theta;
    CHECK((F.M.transpose() * res).norm() <= 1e-10 * F.M.norm() * F.r.norm());
    CHECK(res.squaredNorm() == doctest::Approx(R.residual).epsilon(1e-9));
    if (!R.omega.empty()) ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("two rigid halves across a full crack") {
  const double L = 1.0, h = 1.0 / 8;
  const Eigen::Vector3d m1(0.2, 1.0, -1.0), m2(-0.5, 0.3, 2.0);
  const DisplacementField f = pieces(256, 8, L, h, {0.43}, {m1, m2});
  const CompactnessResult r = compactness_extract(f, vertical_crack(0.43), 0.05, 0.25);
  for (const Rectangle& R : r.partition.rects) {
    if (!R.good) continue;
    CHECK((R.motion - (R.z < 0.43 ? m1 : m2)).norm() < 1e-10);
  }
  REQUIRE(r.bridges.size() == 1);
  CHECK(r.bridges[0].verdict == BridgeVerdict::Severed);
  CHECK(r.fields.jumps == std::vector<double>{0.4375});
  CHECK(r.fields.m_cert == 1);
  CHECK((r.fields.averages[0] - m1).norm() < 1e-10);
  CHECK((r.fields.averages[1] - m2).norm() < 1e-10);
  CHECK((r.fields.evaluate_bar(0.1) - m1).norm() < 1e-10);
  CHECK((r.fields.evaluate_bar(0.9) - m2).norm() < 1e-10);
  CHECK(r.residual_max_off_omega < 1e-10);

  const CompactnessResult g = compactness_extract(rigid_field(256, 8, L, h, skew(m1(0)), m1.tail<2>()), {}, 0.05, 0.25);
  CHECK(g.fields.jump_count() == 0);
  CHECK(g.bridges.empty());
  for (double x : {0.0, 0.3, 0.77, 1.0}) CHECK((g.fields.evaluate(x) - m1).norm() < 1e-10);
  CHECK(g.residual_max_off_omega < 1e-10);
}

TEST_CASE("three rigid pieces and the jump certificate") {
  const double L = 1.0, h = 1.0 / 16;
  const std::vector<Eigen::Vector3d> m{{0, 0, 0}, {1, 2, 3}, {-1, 0.5, 0}};
  const CompactnessResult r =
      compactness_extract(pieces(512, 8, L, h, {0.29, 0.71}, m), cracks_at({0.29, 0.71}), 0.05, 0.25);
  CHECK(r.fields.jump_count() == 2);
  CHECK(r.fields.m_cert == 2);
  for (int k = 0; k < 3; ++k) CHECK((r.fields.averages[k] - m[k]).norm() < 1e-10);

  // random configurations: exactly one jump per full crack
  const double hr = 1.0 / 32;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = trial % 4;
    std::vector<double> xs;
    while (static_cast<int>(xs.size()) < k) {
      const double x = 4 * hr + U(rng) * (L - 8 * hr);
      const double off = std::abs(x / hr - std::round(x / hr));
      bool ok = off > 0.1;
      for (double y : xs) ok = ok && std::abs(x - y) >= 4 * hr;
      if (ok) xs.push_back(x);
    }
    std::sort(xs.begin(), xs.end());
    std::vector<Eigen::Vector3d> ms;
    for (int p = 0; p <= k; ++p) ms.emplace_back(U(rng) - 0.5, U(rng), U(rng));
    const CompactnessResult c = compactness_extract(pieces(512, 8, L, hr, xs, ms), cracks_at(xs), 0.05, 0.25);
    CAPTURE(trial);
    CHECK(c.fields.jump_count() == k);
    CHECK(c.fields.m_cert == k);
    CHECK(c.residual_max_off_omega < 1e-10);
  }

  // a crack of 0.9 h severs at eta = 0.2 but certifies no jump
  CrackSet part;
  part.add({0.43, -0.5}, {0.43, 0.4});
  CHECK(kind_of([&] { compactness_extract(rigid_field(256, 8, L, h, skew(0), {0, 0}), part, 0.05, 0.2); }) ==
        ErrorKind::CertificateViolation);
}

TEST_CASE("bridge verdicts") {
  const double L = 1.0, h = 1.0 / 8;
  const Eigen::Vector3d m(0.4, -0.2, 1.0);
  const DisplacementField f = rigid_field(256, 16, L, h, skew(m(0)), m.tail<2>());

  CrackSet half;
  half.add({0.43, -0.5}, {0.43, 0.0});
  GoodBadPartition P = classify_rectangles(f, half, 0.05);
  fit_rigid_motions(P, f);
  auto B = bridge_check(P, f, 0.25);
  REQUIRE(B.size() == 1);
  CHECK(B[0].verdict == BridgeVerdict::Bridged);
  CHECK(B[0].delta_fit.norm() < 1e-10);
  CHECK(B[0].delta_truss.norm() < 1e-10);
  CHECK(B[0].certified);
  REQUIRE(B[0].bars.size() == 3);
  CHECK(std::abs(B[0].bars[1].p(1) - B[0].bars[0].p(1)) >= 0.25 * h / 2);
  for (const SegmentPair& s : B[0].bars) {
    CHECK(s.p(0) == 0.25);
    CHECK(s.q(0) == 0.625);
  }

  // full crack severs, a crack near the end reaches the boundary
  P = classify_rectangles(f, vertical_crack(0.43), 0.05);
  fit_rigid_motions(P, f);
  CHECK(bridge_check(P, f, 0.25)[0].verdict == BridgeVerdict::Severed);
  P = classify_rectangles(f, vertical_crack(0.1), 0.05);
  fit_rigid_motions(P, f);
  CHECK(bridge_check(P, f, 0.25)[0].verdict == BridgeVerdict::Boundary);
  CHECK(kind_of([&] { bridge_check(P, f, 1.0); }) == ErrorKind::ConfigError);

  // smooth non-rigid field: the bound holds on the bridged run
  const DisplacementField g = DisplacementField::sample(256, 16, L, h, strip_box(L), [&](double x1, double x2) {
    return Eigen::Vector2d(0.05 * std::sin(4 * x1) - h * x2 * 0.3 * std::cos(x1), 0.3 * std::sin(x1) + 0.01 * x2);
  });
  P = classify_rectangles(g, half, 0.05);
  fit_rigid_motions(P, g);
  B = bridge_check(P, g, 0.25);
  REQUIRE(B.size() == 1);
  CHECK(B[0].verdict == BridgeVerdict::Bridged);
  CHECK(B[0].hull_energy > 0.0);
  CHECK(B[0].certified);
}

TEST_CASE("triangle crack flips at eta = h^3") {
  for (double h : {1.0 / 4, 1.0 / 8}) {
    const double L = 1.0, h3 = std::pow(h, 3);
    const CrackSet crack = triangle_counterexample(h, L, 8).crack;
    CHECK_FALSE(hull_severed(crack, 0.5 - 2 * h, 0.5 + 2 * h, h, 0.9 * h3));
    CHECK(hull_severed(crack, 0.5 - 2 * h, 0.5 + 2 * h, h, 1.1 * h3));

    const DisplacementField f = DisplacementField::sample(
        256, 64, L, h, strip_box(L), [&](double x1, double x2) { return triangle_field(h, L, x1, x2); });
    GoodBadPartition P = classify_rectangles(f, crack, 0.05);
    fit_rigid_motions(P, f);
    const auto below = bridge_check(P, f, 0.9 * h3);
    const auto above = bridge_check(P, f, 1.1 * h3);
    REQUIRE(below.size() == 1);
    CAPTURE(h);
    CHECK(below[0].verdict != BridgeVerdict::Severed);
    CHECK(above[0].verdict == BridgeVerdict::Severed);
  }
}

TEST_CASE("residual approaches y up to a rigid motion") {
  LimitConfig y;
  y.sines = {{0.5, std::numbers::pi, 0.0}};
  y.poly = {0.0, 0.2};
  const auto limit = [&](double x) { return Eigen::Vector2d(y.u(x), y.v(x)); };
  double previous = 1e300;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const RecoveryField rf = build_recovery(y, h, 0.1, isotropic_tensor(1, 1), 512, 8);
    const CompactnessResult r = compactness_extract(rf.field, rf.crack, 0.05, 0.25);
    const double d = distance_modulo_rigid(r, limit);
    CAPTURE(h);
    CHECK(d < previous);
    previous = d;
  }
  CHECK(previous < 0.02);
}

TEST_CASE("exceptional set shrinks linearly in h") {
  double area[4];
  const double hs[4] = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  for (int k = 0; k < 4; ++k) {
    const DisplacementField f = pieces(1024, 8, 1.0, hs[k], {0.43}, {Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 1, 0)});
    const CompactnessResult r = compactness_extract(f, vertical_crack(0.43), 0.05, 0.25);
    area[k] = r.omega_area;
    CHECK(r.omega_perimeter <= 4.0 + 1e-12);
  }
  for (int k = 1; k < 4; ++k) CHECK(area[k] / area[k - 1] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("profile fit") {
  const double h = 1.0 / 16;
  const std::vector<bool> none(128 * 8, false);

  LimitConfig parabola;
  parabola.poly = {0, 0, 1};
  const RecoveryField rf = build_recovery(parabola, h, 0.1, isotropic_tensor(1, 1), 128, 8);
  const ProfileFit p = profile_fit(rf.field, none, h);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    CHECK(p.valid[i]);
    CHECK(p.kappa[i] == doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK(p.residual < 1e-9);

  const ProfileFit r = profile_fit(rigid_field(128, 8, 1.0, h, skew(0.3), {1, 1}), none, h);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    CHECK(std::abs(r.kappa[i]) < 1e-12);
    CHECK(std::abs(r.T[i]) < 1e-12);
  }

  const double eps = 1e-3;
  const DisplacementField s =
      DisplacementField::sample(128, 8, 1.0, h, strip_box(1.0), [&](double x1, double) { return Eigen::Vector2d(eps * x1, 0); });
  std::vector<bool> mask = none;
  for (int j = 0; j < 7; ++j) mask[j * 128 + 5] = true;
  const ProfileFit t = profile_fit(s, mask, h);
  CHECK_FALSE(t.valid[5]);
  CHECK(t.valid[6]);
  CHECK(t.T[6] == doctest::Approx(eps / h).epsilon(1e-12));
  CHECK(std::abs(t.kappa[6]) < 1e-12);

  // profile residual is nonincreasing in h for a cubic
  LimitConfig cubic;
  cubic.poly = {0, 0, 0, 1};
  double previous = 1e300;
  for (double hh : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const RecoveryField c = build_recovery(cubic, hh, 0.5, isotropic_tensor(1, 0.5), 128, 8);
    const double res = profile_fit(c.field, none, hh).residual;
    CHECK(res <= previous + 1e-12);
    previous = res;
  }
  CHECK(kind_of([&] { profile_fit(s, std::vector<bool>(3, false), h); }) == ErrorKind::ShapeMismatch);
}
