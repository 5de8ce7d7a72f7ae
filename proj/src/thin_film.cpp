#include "thinbeam/thin_film.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thinbeam/error.hpp"

namespace thinbeam {

namespace {

void check_crack(const CrackSet& crack, double L) {
  const Box strip = strip_box(L);
  for (const CrackSegment& s : crack.segments) {
    const double tol = 1e-12 * (1.0 + L);
    if (!strip.contains(s.a, tol) || !strip.contains(s.b, tol)) {
      fail(ErrorKind::CrackOutsideDomain, "crack segment leaves the strip");
    }
  }
}

Eigen::Vector2d perp(const Eigen::Vector2d& x) { return {-x(1), x(0)}; }

// Visits every cell with its quadrature weight and the gradient used there.
template <class Visit>
void for_each_quadrature_cell(const DisplacementField& f, const CrackSet& crack, CutCellPolicy policy, Visit visit) {
  const int nx = f.nx(), ny = f.ny();
  const double area = f.dx() * f.dy();
  const std::vector<CutCell> cut = cut_cells(f.box(), nx, ny, crack);
  auto is_cut = [&](int i, int j) { return cut[static_cast<std::size_t>(j) * nx + i].cut; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!is_cut(i, j)) {
        visit(area, f.cell_gradient(i, j));
        continue;
      }
      if (policy == CutCellPolicy::Exclude) continue;
      const CutCell& c = cut[static_cast<std::size_t>(j) * nx + i];
      const bool steep = std::abs(c.normal(0)) >= std::abs(c.normal(1));
      double low_fraction;
      int li, lj, hi, hj;
      if (steep) {
        low_fraction = std::clamp((c.midpoint(0) - f.node_x1(i)) / f.dx(), 0.0, 1.0);
        li = i - 1, lj = j, hi = i + 1, hj = j;
      } else {
        low_fraction = std::clamp((c.midpoint(1) - f.node_x2(j)) / f.dy(), 0.0, 1.0);
        li = i, lj = j - 1, hi = i, hj = j + 1;
      }
      if (li >= 0 && lj >= 0 && !is_cut(li, lj)) visit(area * low_fraction, f.cell_gradient(li, lj));
      if (hi < nx && hj < ny && !is_cut(hi, hj)) visit(area * (1.0 - low_fraction), f.cell_gradient(hi, hj));
    }
  }
}

}  // namespace

EnergyBreakdown evaluate_Eh(const DisplacementField& field, const CrackSet& crack, const ElasticTensor& C, double beta,
                            CutCellPolicy policy) {
  if (!(beta >= 0.0)) fail(ErrorKind::ConfigError, "beta must be nonnegative");
  field.check_finite();
  check_crack(crack, field.L());
  CompensatedSum bulk;
  for_each_quadrature_cell(field, crack, policy,
                           [&](double w, const Eigen::Matrix2d& G) { bulk.add(w * 0.5 * quadratic_form(C, G)); });
  EnergyBreakdown e;
  const double h = field.h();
  e.elastic = bulk.value() / (h * h);
  e.jump = beta * crack.anisotropic_measure(h);
  e.total = e.elastic + e.jump;
  return e;
}

double sym_strain_integral(const DisplacementField& field, const CrackSet& crack, CutCellPolicy policy) {
  field.check_finite();
  CompensatedSum sym;
  for_each_quadrature_cell(field, crack, policy, [&](double w, const Eigen::Matrix2d& G) {
    sym.add(w * (0.5 * (G + G.transpose())).squaredNorm());
  });
  // grad_h y is already the unrescaled gradient; only the area element picks up h
  return field.h() * sym.value();
}

Eigen::Vector2d triangle_field(double h, double L, double x1, double x2) {
  const Eigen::Vector2d X(x1, h * x2);
  const Eigen::Vector2d t(L / 2, h / 2 - std::pow(h, 4));
  const Eigen::Vector2d d = X - t;
  const bool in_triangle = X(1) <= h / 2 && d(1) >= 0.0 && std::abs(d(0)) <= d(1);
  if (in_triangle) {
    const Eigen::Vector2d v = Eigen::Vector2d(1.0, 1.0) / std::numbers::sqrt2;
    return perp(v) * v.dot(d) / h;
  }
  if (X(0) < L / 2) return Eigen::Vector2d::Zero();
  return perp(d) / h;
}

FieldWithCrack triangle_counterexample(double h, double L, int n) {
  const double h4 = std::pow(h, 4);
  if (!(h > 0.0 && h <= 1.0) || !(h4 < h / 2)) fail(ErrorKind::InvalidThickness, "triangle example needs h^4 < h/2");
  if (!(L > 2.0 * h4)) fail(ErrorKind::InvalidField, "strip too short for the triangle");
  // bounding box in rescaled coordinates: width 2 h^4, height h^4 / h
  const Box box{L / 2 - h4, L / 2 + h4, 0.5 - h4 / h, 0.5};
  FieldWithCrack out{DisplacementField::sample(n, n, L, h, box,
                                               [&](double x1, double x2) { return triangle_field(h, L, x1, x2); }),
                     {}};
  out.crack.add({L / 2, -0.5}, {L / 2, 0.5 - h4 / h});
  return out;
}

FieldWithCrack escaping_ball_example(double h, double L, int n, int segments) {
  if (!(h > 0.0 && h <= 1.0)) fail(ErrorKind::InvalidThickness, "thickness h must lie in (0, 1]");
  const double r = h * h;
  if (!(r < std::min(L / 2, 0.5) / 2)) fail(ErrorKind::BallTooLarge, "ball does not fit in the strip");
  if (segments < 3) fail(ErrorKind::ConfigError, "polygon needs at least three sides");
  const Eigen::Vector2d c(L / 2, 0.0);
  const double step = 2.0 * std::numbers::pi / segments;
  const double apothem = r * std::cos(step / 2);
  auto inside = [&](double x1, double x2) {
    const Eigen::Vector2d d(x1 - c(0), x2 - c(1));
    if (d.norm() > r) return false;
    double theta = std::atan2(d(1), d(0));
    theta -= 0.5 * step;
    while (theta < 0) theta += 2.0 * std::numbers::pi;
    const int k = std::min(static_cast<int>(theta / step), segments - 1);
    const double mid = (k + 1.0) * step;
    return d(0) * std::cos(mid) + d(1) * std::sin(mid) <= apothem;
  };
  const Box box{c(0) - 2 * r, c(0) + 2 * r, -2 * r, 2 * r};
  const double depth = -std::pow(h, -5);
  FieldWithCrack out{DisplacementField::sample(n, n, L, h, box,
                                               [&](double x1, double x2) {
                                                 return inside(x1, x2) ? Eigen::Vector2d(0.0, depth)
                                                                       : Eigen::Vector2d::Zero();
                                               }),
                     {}};
  // vertices sit at half-step angles so that no grid node on the axes lands on the polygon
  for (int k = 0; k < segments; ++k) {
    const double t0 = (k + 0.5) * step, t1 = (k + 1.5) * step;
    const Eigen::Vector2d a = c + r * Eigen::Vector2d(std::cos(t0), std::sin(t0));
    const Eigen::Vector2d b = c + r * Eigen::Vector2d(std::cos(t1), std::sin(t1));
    out.crack.add(a, b);
  }
  return out;
}

DisplacementField rigid_field(int nx, int ny, double L, double h, const Eigen::Matrix2d& A, const Eigen::Vector2d& b) {
  return DisplacementField::sample(nx, ny, L, h, strip_box(L),
                                   [&](double x1, double x2) { return Eigen::Vector2d(A * Eigen::Vector2d(x1, h * x2) + b); });
}

CrackSet vertical_crack(double x1) {
  CrackSet c;
  c.add({x1, -0.5}, {x1, 0.5});
  return c;
}

}  // namespace thinbeam
