#include "thinbeam/field.hpp"

#include <algorithm>
#include <string>

#include "thinbeam/error.hpp"

namespace thinbeam {

DisplacementField::DisplacementField(int nx, int ny, double L, double h)
    : DisplacementField(nx, ny, L, h, strip_box(L)) {}

DisplacementField::DisplacementField(int nx, int ny, double L, double h, const Box& box)
    : nx_(nx), ny_(ny), L_(L), h_(h), box_(box) {
  if (nx < 2 || ny < 2) fail(ErrorKind::InvalidField, "field grid needs nx, ny >= 2");
  if (!(L > 0.0)) fail(ErrorKind::InvalidField, "strip length must be positive");
  if (!(h > 0.0 && h <= 1.0)) fail(ErrorKind::InvalidThickness, "thickness h must lie in (0, 1]");
  if (!(box.width() > 0.0 && box.height() > 0.0)) fail(ErrorKind::InvalidField, "field box is empty");
  values_.assign(static_cast<std::size_t>(nx + 1) * (ny + 1), Eigen::Vector2d::Zero());
}

DisplacementField DisplacementField::sample(int nx, int ny, double L, double h, const Box& box,
                                            const std::function<Eigen::Vector2d(double, double)>& f) {
  DisplacementField field(nx, ny, L, h, box);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) field.at(i, j) = f(field.node_x1(i), field.node_x2(j));
  return field;
}

void DisplacementField::check_finite() const {
  for (const Eigen::Vector2d& v : values_) {
    if (!v.allFinite()) fail(ErrorKind::InvalidField, "displacement field has non-finite values");
  }
}

Eigen::Matrix2d DisplacementField::cell_gradient(int i, int j) const {
  const Eigen::Vector2d& a = at(i, j);
  const Eigen::Vector2d& b = at(i + 1, j);
  const Eigen::Vector2d& c = at(i, j + 1);
  const Eigen::Vector2d& d = at(i + 1, j + 1);
  Eigen::Matrix2d G;
  G.col(0) = ((b + d) - (a + c)) / (2.0 * dx());
  G.col(1) = ((c + d) - (a + b)) / (2.0 * dy() * h_);
  return G;
}

Eigen::Vector2d DisplacementField::cell_mean(int i, int j) const {
  return 0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1));
}

double DisplacementField::integrate(int component) const {
  CompensatedSum s;
  const double area = dx() * dy();
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) s.add(cell_mean(i, j)(component) * area);
  return s.value();
}

void CrackSet::add(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d t = b - a;
  const double n = t.norm();
  if (n == 0.0) fail(ErrorKind::InvalidField, "crack segment has zero length");
  segments.push_back({a, b, Eigen::Vector2d(-t(1), t(0)) / n});
}

void CrackSet::append(const CrackSet& other) {
  segments.insert(segments.end(), other.segments.begin(), other.segments.end());
}

double CrackSet::length() const {
  CompensatedSum s;
  for (const CrackSegment& seg : segments) s.add(seg.length());
  return s.value();
}

double CrackSet::anisotropic_measure(double h) const {
  CompensatedSum s;
  for (const CrackSegment& seg : segments) s.add(Eigen::Vector2d(seg.normal(0), seg.normal(1) / h).norm() * seg.length());
  return s.value();
}

double CrackSet::unrescaled_length(double h) const {
  CompensatedSum s;
  for (const CrackSegment& seg : segments) {
    const Eigen::Vector2d t = seg.b - seg.a;
    s.add(std::hypot(t(0), h * t(1)));
  }
  return s.value();
}

std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_segment(const Eigen::Vector2d& p,
                                                                         const Eigen::Vector2d& q,
                                                                         const Box& box) {
  const Eigen::Vector2d d = q - p;
  double t0 = 0.0, t1 = 1.0;
  const double P[4] = {-d(0), d(0), -d(1), d(1)};
  const double Q[4] = {p(0) - box.x0, box.x1 - p(0), p(1) - box.y0, box.y1 - p(1)};
  for (int k = 0; k < 4; ++k) {
    if (P[k] == 0.0) {
      if (Q[k] < 0.0) return std::nullopt;
      continue;
    }
    const double r = Q[k] / P[k];
    if (P[k] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(Eigen::Vector2d(p + t0 * d), Eigen::Vector2d(p + t1 * d));
}

std::vector<CutCell> cut_cells(const Box& box, int nx, int ny, const CrackSet& crack) {
  std::vector<CutCell> cells(static_cast<std::size_t>(nx) * ny);
  const double dx = box.width() / nx, dy = box.height() / ny;
  const double eps = 1e-12;
  for (const CrackSegment& seg : crack.segments) {
    const auto whole = clip_segment(seg.a, seg.b, box);
    if (!whole) continue;
    const auto& [p, q] = *whole;
    const int i0 = std::clamp(static_cast<int>(std::floor((std::min(p(0), q(0)) - box.x0) / dx)), 0, nx - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor((std::max(p(0), q(0)) - box.x0) / dx)), 0, nx - 1);
    const int j0 = std::clamp(static_cast<int>(std::floor((std::min(p(1), q(1)) - box.y0) / dy)), 0, ny - 1);
    const int j1 = std::clamp(static_cast<int>(std::floor((std::max(p(1), q(1)) - box.y0) / dy)), 0, ny - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const Box cell{box.x0 + i * dx, box.x0 + (i + 1) * dx, box.y0 + j * dy, box.y0 + (j + 1) * dy};
        const auto piece = clip_segment(p, q, cell);
        if (!piece) continue;
        const Eigen::Vector2d m = 0.5 * (piece->first + piece->second);
        // pieces lying on a cell edge do not enter the interior
        const bool interior = m(0) > cell.x0 + eps * dx && m(0) < cell.x1 - eps * dx && m(1) > cell.y0 + eps * dy &&
                              m(1) < cell.y1 - eps * dy;
        const double len = (piece->second - piece->first).norm();
        if (!interior || len <= eps * std::min(dx, dy)) continue;
        CutCell& c = cells[static_cast<std::size_t>(j) * nx + i];
        c.cut = true;
        if (len > c.piece) {
          c.piece = len;
          c.normal = seg.normal;
          c.midpoint = m;
        }
      }
    }
  }
  return cells;
}

}  // namespace thinbeam
