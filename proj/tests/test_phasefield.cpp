#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "thinbeam/error.hpp"
#include "thinbeam/phasefield.hpp"
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

// Straightforward re-derivation of the AT functional: bilinear interpolation
// in local coordinates, derivatives by hand, 2 x 2 Gauss points per cell.
double oracle_energy(const DisplacementField& y, const Eigen::VectorXd& phi, const ElasticTensor& C, double beta,
                     double fidelity, const DisplacementField& g, double eps, double k) {
  const int nx = y.nx(), ny = y.ny();
  const double dx = y.dx(), dy = y.dy(), h = y.h();
  auto ph = [&](int i, int j) { return phi(j * (nx + 1) + i); };
  const double r = 1.0 / std::sqrt(3.0);
  double bulk = 0, surf = 0, fid = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      for (double gs : {-r, r})
        for (double gt : {-r, r}) {
          const double s = 0.5 + 0.5 * gs, t = 0.5 + 0.5 * gt;
          const Eigen::Vector2d a = y.at(i, j), b = y.at(i + 1, j), c = y.at(i, j + 1), d = y.at(i + 1, j + 1);
          Eigen::Matrix2d G;
          G.col(0) = ((1 - t) * (b - a) + t * (d - c)) / dx;
          G.col(1) = ((1 - s) * (c - a) + s * (d - b)) / (dy * h);
          const double pa = ph(i, j), pb = ph(i + 1, j), pc = ph(i, j + 1), pd = ph(i + 1, j + 1);
          const double p = (1 - s) * (1 - t) * pa + s * (1 - t) * pb + (1 - s) * t * pc + s * t * pd;
          const double p1 = ((1 - t) * (pb - pa) + t * (pd - pc)) / dx;
          const double p2 = ((1 - s) * (pc - pa) + s * (pd - pb)) / (dy * h);
          const double w = dx * dy / 4;
          bulk += w * (p * p + k) * 0.5 * quadratic_form(C, G) / (h * h);
          surf += w * ((1 - p) * (1 - p) / (4 * eps) + eps * (p1 * p1 + p2 * p2));
        }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double w = ((i == 0 || i == nx) ? 0.5 : 1.0) * ((j == 0 || j == ny) ? 0.5 : 1.0) * dx * dy;
      fid += w * (y.at(i, j) - g.at(i, j)).squaredNorm();
    }
  return bulk + beta * surf + fidelity * fid;
}

DisplacementField random_field(int nx, int ny, double L, double h, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  DisplacementField f(nx, ny, L, h);
  for (auto& v : f.values()) v = {U(rng), U(rng)};
  return f;
}

// Minimizer of a quadratic function of n variables from its values (polarization), dense LDLT.
Eigen::VectorXd dense_quadratic_minimizer(int n, const std::function<double(const Eigen::VectorXd&)>& E) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const double E0 = E(zero);
  Eigen::VectorXd Ei(n), grad(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = zero;
    e(i) = 1;
    Ei(i) = E(e);
    grad(i) = 0.5 * (Ei(i) - E(-e));
  }
  Eigen::MatrixXd H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Eigen::VectorXd e = zero;
      e(i) += 1;
      e(j) += 1;
      const double v = i == j ? 2 * (Ei(i) - E0 - grad(i)) : E(e) - Ei(i) - Ei(j) + E0;
      H(i, j) = H(j, i) = v;
    }
  return H.ldlt().solve(-grad);
}

struct SplitRun {
  PhaseFieldResult result;
  double sharp_best = 0, sharp_x = 0;
  CrackSet crack;
};

SplitRun split_strip(int nx, int ny) {
  const double L = 1.0, h = 0.25;
  PhaseFieldProblem pb;
  pb.g = split_strip_target(nx, ny, L, h, (nx / 2 + 0.5) * L / nx, {-0.5, 0}, {0.5, 0});
  pb.C = isotropic_tensor(1.0, 0.0);
  pb.beta = 0.1;
  pb.fidelity = 100;
  SplitRun run{minimize_alternating(pb), 1e300, 0, {}};
  for (const SharpScanEntry& s : sharp_vertical_scan(pb.g, pb.C, pb.beta))
    if (s.energy < run.sharp_best) run.sharp_best = s.energy, run.sharp_x = s.x1;
  run.crack = extract_crack(run.result.damage, strip_box(L), 0.5);
  return run;
}

bool non_increasing(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[i - 1] + 1e-12) return false;
  return true;
}

}  // namespace

TEST_CASE("at_energy matches a hand-written quadrature") {
  std::mt19937_64 rng(11);
  const DisplacementField y = random_field(5, 4, 1.3, 0.3, rng, 1.0);
  const DisplacementField g = random_field(5, 4, 1.3, 0.3, rng, 1.0);
  DamageField d = intact_damage(y, 0.2, 1e-3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (Eigen::Index k = 0; k < d.phi.size(); ++k) d.phi(k) = U(rng);
  const ElasticTensor C = isotropic_tensor(1.2, 0.7);
  const AtEnergy e = at_energy(y, d, C, 0.4, 2.5, g);
  CHECK(e.total == doctest::Approx(oracle_energy(y, d.phi, C, 0.4, 2.5, g, 0.2, 1e-3)).epsilon(1e-12));
  CHECK(e.total == doctest::Approx(e.bulk + e.surface + e.fidelity).epsilon(1e-14));
}

TEST_CASE("at_energy trivial cases") {
  const double L = 2.0, h = 0.5;
  Eigen::Matrix2d A;
  A << 0.0, -0.3, 0.3, 0.0;
  const DisplacementField y = rigid_field(8, 6, L, h, A, {0.1, -0.2});
  DamageField d = intact_damage(y, 0.1);
  CHECK(at_energy(y, d, isotropic_tensor(1, 1), 1.0, 0.0, y).total == doctest::Approx(0.0).scale(1.0));

  std::mt19937_64 rng(3);
  const DisplacementField z = random_field(8, 6, L, h, rng, 5.0);
  d.phi.setZero();
  d.k_eps = 0.0;
  const AtEnergy e = at_energy(z, d, isotropic_tensor(1, 1), 0.7, 0.0, z);
  CHECK(e.bulk == 0.0);
  CHECK(e.surface == doctest::Approx(0.7 / (4 * 0.1) * L).epsilon(1e-12));

  DamageField wrong = intact_damage(DisplacementField(4, 6, L, h), 0.1);
  CHECK(kind_of([&] { at_energy(y, wrong, isotropic_tensor(1, 1), 1, 1, y); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("surface term of the optimal vertical profile approaches beta times the strip height") {
  // continuum value of the profile 1 - exp(-|x - 1/2| / (2 eps)) on (0, 1) is 1 - exp(-1 / (2 eps))
  double previous_error = 1.0, last = 0.0;
  // eps / dx grows as eps shrinks so the discretization error vanishes too
  for (double eps : {0.1, 0.05, 0.025}) {
    const int nx = static_cast<int>(std::lround(0.8 / (eps * eps)));
    const DisplacementField y(nx, 4, 1.0, 0.5);
    DamageField d = intact_damage(y, eps);
    for (int j = 0; j <= 4; ++j)
      for (int i = 0; i <= nx; ++i) d.phi(j * (nx + 1) + i) = 1 - std::exp(-std::abs(y.node_x1(i) - 0.5) / (2 * eps));
    const double s = at_energy(y, d, isotropic_tensor(1, 0), 1.0, 0.0, y).surface;
    const double error = std::abs(s - (1 - std::exp(-1 / (2 * eps))));
    CHECK(error < previous_error);
    previous_error = error;
    last = s;
  }
  CHECK(last == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("elastic_step reproduces rigid targets and the dense oracle") {
  const double L = 1.0, h = 0.5;
  Eigen::Matrix2d A;
  A << 0.0, 0.4, -0.4, 0.0;
  const DisplacementField g = rigid_field(10, 6, L, h, A, {0.3, 0.1});
  const DisplacementField y = elastic_step(intact_damage(g, 0.2), g, isotropic_tensor(1, 0.5), 3.0);
  for (std::size_t k = 0; k < g.values().size(); ++k) CHECK((y.values()[k] - g.values()[k]).norm() < 1e-8);

  std::mt19937_64 rng(5);
  const DisplacementField target = random_field(8, 8, L, h, rng, 1.0);
  DamageField d = intact_damage(target, 0.15, 1e-2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (Eigen::Index k = 0; k < d.phi.size(); ++k) d.phi(k) = U(rng);
  const ElasticTensor C = isotropic_tensor(0.8, 0.3);
  const double fid = 4.0;
  const DisplacementField sol = elastic_step(d, target, C, fid);
  const int n = 2 * 81;
  auto E = [&](const Eigen::VectorXd& v) {
    DisplacementField f = target;
    for (int k = 0; k < 81; ++k) f.values()[k] = v.segment<2>(2 * k);
    return oracle_energy(f, d.phi, C, 0.5, fid, target, 0.15, 1e-2);
  };
  const Eigen::VectorXd ref = dense_quadratic_minimizer(n, E);
  double worst = 0;
  for (int k = 0; k < 81; ++k) worst = std::max(worst, (sol.values()[k] - ref.segment<2>(2 * k)).norm());
  CHECK(worst < 1e-8);
  CHECK(at_energy(sol, d, C, 0.5, fid, target).total <= at_energy(target, d, C, 0.5, fid, target).total);

  CHECK(kind_of([&] { elastic_step(d, target, C, 0.0); }) == ErrorKind::SingularSystem);
}

TEST_CASE("damage_step matches the dense oracle and stays in [0, 1]") {
  std::mt19937_64 rng(9);
  const double L = 1.0, h = 0.5;
  const DisplacementField y = random_field(6, 5, L, h, rng, 0.05);
  const ElasticTensor C = isotropic_tensor(1.0, 0.2);
  const double beta = 0.8, eps = 0.2;
  DamageField d0 = intact_damage(y, eps, 1e-4);
  const DamageField d = damage_step(y, d0, C, beta);
  const Eigen::VectorXd ref = dense_quadratic_minimizer(static_cast<int>(d.phi.size()), [&](const Eigen::VectorXd& p) {
    return oracle_energy(y, p, C, beta, 0.0, y, eps, 1e-4);
  });
  REQUIRE(ref.minCoeff() >= 0.0);
  REQUIRE(ref.maxCoeff() <= 1.0);
  CHECK((d.phi - ref).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(at_energy(y, d, C, beta, 0, y).total <= at_energy(y, d0, C, beta, 0, y).total + 1e-12);

  // strong loading: clamped minimizer, still a descent step
  const DisplacementField big = random_field(6, 5, L, h, rng, 3.0);
  const DamageField db = damage_step(big, d0, C, beta);
  CHECK(db.phi.minCoeff() >= 0.0);
  CHECK(db.phi.maxCoeff() <= 1.0);
  CHECK(at_energy(big, db, C, beta, 0, big).total <= at_energy(big, d0, C, beta, 0, big).total + 1e-12);
  // projected optimality: no feasible single-node move lowers the energy
  const double base = at_energy(big, db, C, beta, 0, big).total;
  for (Eigen::Index k = 0; k < db.phi.size(); k += 3) {
    for (double step : {-1e-4, 1e-4}) {
      DamageField moved = db;
      moved.phi(k) = std::clamp(moved.phi(k) + step, 0.0, 1.0);
      CHECK(at_energy(big, moved, C, beta, 0, big).total >= base - 1e-9);
    }
  }
}

TEST_CASE("damage_step for rigid and column-loaded fields") {
  const double L = 1.0, h = 0.5;
  Eigen::Matrix2d A;
  A << 0.0, 1.0, -1.0, 0.0;
  const DisplacementField rigid = rigid_field(12, 6, L, h, A, {1.0, 2.0});
  const DamageField d = damage_step(rigid, intact_damage(rigid, 0.1), isotropic_tensor(1, 1), 1.0);
  CHECK((d.phi.array() - 1.0).abs().maxCoeff() < 1e-10);

  // a shear jump across column 32 of 64
  const int nx = 64;
  const DisplacementField kink =
      DisplacementField::sample(nx, 8, L, h, strip_box(L), [&](double x1, double) {
        return Eigen::Vector2d(0.0, x1 > 0.5 + 1e-9 ? 1.0 : 0.0);
      });
  const DamageField dk = damage_step(kink, intact_damage(kink, 4.0 / nx), isotropic_tensor(1, 0), 0.1);
  for (int j = 0; j <= 8; ++j) CHECK(std::min(dk.at(32, j), dk.at(33, j)) < 0.1);
  CHECK(dk.at(4, 4) > 0.9);
}

TEST_CASE("alternating minimization with zero target stays intact") {
  PhaseFieldProblem pb;
  pb.g = DisplacementField(16, 8, 1.0, 0.5);
  pb.C = isotropic_tensor(1, 0);
  const PhaseFieldResult r = minimize_alternating(pb);
  CHECK(r.report.converged);
  for (const auto& v : r.y.values()) CHECK(v.norm() < 1e-12);
  CHECK((r.damage.phi.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("split strip: crack location, measure and energy against the sharp scan") {
  const SplitRun run = split_strip(64, 32);
  const PhaseFieldResult& r = run.result;
  CHECK(r.report.converged);
  CHECK(non_increasing(r.report.energy_trace));
  REQUIRE_FALSE(run.crack.empty());
  const double dx = 1.0 / 64;
  for (const CrackSegment& s : run.crack.segments) {
    CHECK(std::abs(s.a(0) - run.sharp_x) <= dx);
    CHECK(std::abs(s.b(0) - run.sharp_x) <= dx);
  }
  CHECK(run.crack.anisotropic_measure(0.25) == doctest::Approx(1.0).epsilon(0.2));
  CHECK(r.energy.total / run.sharp_best == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("split strip family: AT minimum tracks the sharp minimum under refinement") {
  for (int nx : {32, 64, 128}) {
    const SplitRun run = split_strip(nx, nx / 2);
    CAPTURE(nx);
    CHECK(run.result.energy.total / run.sharp_best == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("seeded runs are bit-identical") {
  PhaseFieldProblem pb;
  pb.g = split_strip_target(24, 12, 1.0, 0.25, 12.5 / 24, {0, 0}, {0.5, 0.5});
  pb.C = isotropic_tensor(1, 0.5);
  pb.beta = 0.1;
  pb.fidelity = 50;
  pb.random_init = true;
  pb.seed = 42;
  const PhaseFieldResult a = minimize_alternating(pb);
  const PhaseFieldResult b = minimize_alternating(pb);
  CHECK(a.report.energy_trace == b.report.energy_trace);
  CHECK(a.damage.phi == b.damage.phi);
  CHECK(non_increasing(a.report.energy_trace));
}

TEST_CASE("horizontal crack: surface cost scales like 1/h") {
  const double L = 0.05, beta = 0.1;
  const int nx = 64, ny = 48;
  double hs[3] = {1.0 / 8, 1.0 / 16, 1.0 / 32}, surface[3];
  for (int k = 0; k < 3; ++k) {
    const double h = hs[k];
    const double split = -0.5 + (ny / 2 + 0.5) / ny;
    PhaseFieldProblem pb;
    pb.g = DisplacementField::sample(nx, ny, L, h, strip_box(L),
                                     [&](double, double x2) { return Eigen::Vector2d(x2 < split ? -0.5 : 0.5, 0.0); });
    pb.C = isotropic_tensor(1, 0);
    pb.beta = beta;
    pb.fidelity = 1e6;
    // profile width eps / h in the rescaled thickness variable
    pb.epsilon = 0.1 * h;
    const PhaseFieldResult r = minimize_alternating(pb);
    surface[k] = r.energy.surface;
    const CrackSet crack = extract_crack(r.damage, strip_box(L), 0.5);
    CHECK(beta * crack.anisotropic_measure(h) == doctest::Approx(surface[k]).epsilon(0.2));
  }
  const double slope = std::log(surface[2] / surface[0]) / std::log(hs[2] / hs[0]);
  CHECK(slope >= -1.2);
  CHECK(slope <= -0.8);
}

TEST_CASE("extract_crack on prescribed damage") {
  const DisplacementField grid(20, 10, 1.0, 0.5);
  DamageField d = intact_damage(grid, 0.1);
  CHECK(extract_crack(d, strip_box(1.0), 0.5).empty());

  for (int j = 0; j <= 10; ++j) d.phi(j * 21 + 7) = 0.0;
  const CrackSet c = extract_crack(d, strip_box(1.0), 0.5);
  REQUIRE(c.segments.size() == 1);
  CHECK(c.segments[0].a(0) == doctest::Approx(0.35));
  CHECK(c.segments[0].b(0) == doctest::Approx(0.35));
  CHECK(c.length() == doctest::Approx(1.0));
  CHECK(std::abs(c.segments[0].normal(0)) == doctest::Approx(1.0));

  CHECK(kind_of([&] { extract_crack(d, strip_box(1.0), 1.0); }) == ErrorKind::ConfigError);
}
