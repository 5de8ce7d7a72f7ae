#include "thinbeam/compactness.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>

#include "thinbeam/error.hpp"

namespace thinbeam {

namespace {

double unrescaled(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double h) {
  return std::hypot(b(0) - a(0), h * (b(1) - a(1)));
}

double crack_in_box(const CrackSet& crack, const Box& box, double h) {
  CompensatedSum s;
  for (const CrackSegment& seg : crack.segments)
    if (const auto piece = clip_segment(seg.a, seg.b, box)) {
      // the rectangles are open: pieces on a vertical side do not count
      const bool on_side = (piece->first(0) == box.x0 && piece->second(0) == box.x0) ||
                           (piece->first(0) == box.x1 && piece->second(0) == box.x1);
      if (!on_side) s.add(unrescaled(piece->first, piece->second, h));
    }
  return s.value();
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a(0) * b(1) - a(1) * b(0); }

// Closed segments p-q and a-b share a point.
bool segments_meet(const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Eigen::Vector2d& a,
                   const Eigen::Vector2d& b) {
  const double d1 = cross(q - p, a - p), d2 = cross(q - p, b - p);
  const double d3 = cross(b - a, p - a), d4 = cross(b - a, q - a);
  auto on = [](const Eigen::Vector2d& s, const Eigen::Vector2d& t, const Eigen::Vector2d& r) {
    return std::min(s(0), t(0)) <= r(0) && r(0) <= std::max(s(0), t(0)) && std::min(s(1), t(1)) <= r(1) &&
           r(1) <= std::max(s(1), t(1));
  };
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on(p, q, a)) return true;
  if (d2 == 0 && on(p, q, b)) return true;
  if (d3 == 0 && on(a, b, p)) return true;
  if (d4 == 0 && on(a, b, q)) return true;
  return false;
}

bool crack_free(const CrackSet& crack, const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
  for (const CrackSegment& s : crack.segments)
    if (segments_meet(p, q, s.a, s.b)) return false;
  return true;
}

// Unrescaled perimeter of a cell set, counting only edges inside the strip.
double cell_set_perimeter(const std::vector<bool>& in, int nx, int ny, double dx, double dy, double h) {
  double p = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!in[j * nx + i]) continue;
      if (i > 0 && !in[j * nx + i - 1]) p += h * dy;
      if (i + 1 < nx && !in[j * nx + i + 1]) p += h * dy;
      if (j > 0 && !in[(j - 1) * nx + i]) p += dx;
      if (j + 1 < ny && !in[(j + 1) * nx + i]) p += dx;
    }
  return p;
}

Eigen::Vector2d apply_motion(const Eigen::Vector3d& m, const Eigen::Vector2d& X) {
  // A = a [[0, 1], [-1, 0]]
  return {m(0) * X(1) + m(1), -m(0) * X(0) + m(2)};
}

}  // namespace

Eigen::Vector2d interpolate(const DisplacementField& f, double x1, double x2) {
  const double s = std::clamp((x1 - f.box().x0) / f.dx(), 0.0, static_cast<double>(f.nx()));
  const double t = std::clamp((x2 - f.box().y0) / f.dy(), 0.0, static_cast<double>(f.ny()));
  const int i = std::min(static_cast<int>(s), f.nx() - 1), j = std::min(static_cast<int>(t), f.ny() - 1);
  const double u = s - i, v = t - j;
  return (1 - u) * (1 - v) * f.at(i, j) + u * (1 - v) * f.at(i + 1, j) + (1 - u) * v * f.at(i, j + 1) +
         u * v * f.at(i + 1, j + 1);
}

GoodBadPartition classify_rectangles(const DisplacementField& field, const CrackSet& crack, double delta,
                                     const CompactnessOptions& options) {
  if (!(delta > 0.0 && delta <= options.delta0)) fail(ErrorKind::ConfigError, "delta must lie in (0, delta0]");
  const double L = field.L(), h = field.h();
  const Box strip = strip_box(L);
  const Box& box = field.box();
  if (box.x0 != strip.x0 || box.x1 != strip.x1 || box.y0 != strip.y0 || box.y1 != strip.y1)
    fail(ErrorKind::InvalidField, "rectangle classification needs a field on the whole strip");
  const int count = static_cast<int>(std::floor(L / h + 1e-12)) - 1;
  if (count < 1) fail(ErrorKind::InvalidThickness, "strip shorter than 2h holds no rectangle");
  if (2.0 * h / field.dx() < 2.0 - 1e-12) fail(ErrorKind::GridMismatch, "rectangles need at least two cell columns");

  GoodBadPartition P;
  P.h = h;
  P.delta = delta;
  P.nx = field.nx();
  P.ny = field.ny();
  P.box = box;
  P.options = options;
  P.crack = crack;
  const int nx = P.nx, ny = P.ny;
  const std::vector<CutCell> cut = cut_cells(box, nx, ny, crack);
  P.cut.assign(static_cast<std::size_t>(nx) * ny, false);
  for (std::size_t k = 0; k < cut.size(); ++k) P.cut[k] = cut[k].cut;
  P.near_crack = P.cut;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!P.cut[j * nx + i]) continue;
      if (i > 0) P.near_crack[j * nx + i - 1] = true;
      if (i + 1 < nx) P.near_crack[j * nx + i + 1] = true;
      if (j > 0) P.near_crack[(j - 1) * nx + i] = true;
      if (j + 1 < ny) P.near_crack[(j + 1) * nx + i] = true;
    }

  const double dx = field.dx(), dy = field.dy();
  for (int k = 1; k <= count; ++k) {
    Rectangle R;
    R.z = k * h;
    R.crack_length = crack_in_box(crack, {R.z - h, R.z + h, -0.5, 0.5}, h);
    R.good = R.crack_length <= delta * h * (1.0 + 1e-12);
    std::vector<bool> omega(static_cast<std::size_t>(nx) * ny, false);
    for (int i = 0; i < nx; ++i) {
      const double c = (i + 0.5) * dx;
      if (!(c > R.z - h && c < R.z + h)) continue;
      for (int j = 0; j < ny; ++j) {
        const int cell = j * nx + i;
        R.cells.push_back(cell);
        if (P.near_crack[cell]) {
          R.omega.push_back(cell);
          omega[cell] = true;
        }
      }
    }
    std::sort(R.cells.begin(), R.cells.end());
    std::sort(R.omega.begin(), R.omega.end());
    R.omega_perimeter = cell_set_perimeter(omega, nx, ny, dx, dy, h);
    R.korn_budget_ok = R.omega_perimeter <= options.korn_constant * R.crack_length * (1.0 + 1e-12);
    P.rects.push_back(std::move(R));
  }
  return P;
}

FitSystem fit_system(const GoodBadPartition& P, const Rectangle& R, const DisplacementField& field) {
  const double h = P.h;
  const double s = std::sqrt(field.dx() * field.dy());
  std::vector<int> used;
  std::set_difference(R.cells.begin(), R.cells.end(), R.omega.begin(), R.omega.end(), std::back_inserter(used));
  FitSystem F;
  F.centre = {R.z, 0.0};
  F.M = Eigen::MatrixXd::Zero(6 * static_cast<Eigen::Index>(used.size()), 3);
  F.r = Eigen::VectorXd::Zero(F.M.rows());
  Eigen::Index row = 0;
  for (int cell : used) {
    const int i = cell % P.nx, j = cell / P.nx;
    const Eigen::Vector2d xi(field.node_x1(i) + 0.5 * field.dx() - R.z, h * (field.node_x2(j) + 0.5 * field.dy()));
    const Eigen::Vector2d w = field.cell_mean(i, j);
    const Eigen::Matrix2d G = field.cell_gradient(i, j);
    // unknowns (a, c1, c2) with w ~ A xi + c
    F.M.row(row) << s * xi(1) / h, s / h, 0.0;
    F.r(row++) = s * w(0) / h;
    F.M.row(row) << -s * xi(0) / h, 0.0, s / h;
    F.r(row++) = s * w(1) / h;
    F.M.row(row) << s, 0.0, 0.0;
    F.r(row++) = s * G(0, 1);
    F.M.row(row) << -s, 0.0, 0.0;
    F.r(row++) = s * G(1, 0);
    F.r(row++) = s * G(0, 0);
    F.r(row++) = s * G(1, 1);
  }
  return F;
}

void fit_rigid_motions(GoodBadPartition& P, const DisplacementField& field) {
  if (field.nx() != P.nx || field.ny() != P.ny || field.h() != P.h)
    fail(ErrorKind::ShapeMismatch, "field does not match the partition grid");
  for (Rectangle& R : P.rects) {
    if (!R.good) continue;
    if (R.omega.size() == R.cells.size()) {
      R.empty = true;
      R.good = false;
      continue;
    }
    const FitSystem F = fit_system(P, R, field);
    const Eigen::Matrix3d N = F.M.transpose() * F.M;
    const Eigen::Vector3d c = N.ldlt().solve(F.M.transpose() * F.r);
    R.residual = (F.M * c - F.r).squaredNorm();
    // back to b = c - A (z, 0)
    const Eigen::Vector2d Az = apply_motion({c(0), 0.0, 0.0}, F.centre);
    R.motion << c(0), c(1) - Az(0), c(2) - Az(1);
    R.fitted = true;
  }
}

std::string to_string(BridgeVerdict v) {
  switch (v) {
    case BridgeVerdict::Bridged:
      return "BRIDGED";
    case BridgeVerdict::Severed:
      return "SEVERED";
    case BridgeVerdict::Boundary:
      return "BOUNDARY";
    case BridgeVerdict::NoSegmentsFound:
      return "NO_SEGMENTS_FOUND";
  }
  return "?";
}

bool hull_severed(const CrackSet& crack, double x0, double x1, double h, double eta) {
  return crack_in_box(crack, {x0, x1, -0.5, 0.5}, h) >= (1.0 - eta) * h;
}

namespace {

struct Interval {
  double lo, hi;
};

// Heights in [-1/2, 1/2] whose horizontal line over [z0, z1] misses the crack,
// as a sorted list of intervals (ends included only at the strip boundary).
std::vector<Interval> free_heights(const CrackSet& crack, double z0, double z1) {
  std::vector<Interval> blocked;
  for (const CrackSegment& s : crack.segments)
    if (const auto piece = clip_segment(s.a, s.b, {z0, z1, -0.5, 0.5}))
      blocked.push_back({std::min(piece->first(1), piece->second(1)), std::max(piece->first(1), piece->second(1))});
  std::sort(blocked.begin(), blocked.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  double from = -0.5;
  bool open = false;  // `from` is a blocked end, so it is excluded
  const double gap = 1e-9;
  for (const Interval& b : blocked) {
    if (b.lo > from) out.push_back({open ? from + gap : from, b.lo - gap});
    if (b.hi >= from) {
      from = b.hi;
      open = true;
    }
  }
  if (from < 0.5) out.push_back({open ? from + gap : from, 0.5});
  std::erase_if(out, [](const Interval& i) { return !(i.hi >= i.lo); });
  return out;
}

}  // namespace

std::vector<BridgeResult> bridge_check(const GoodBadPartition& P, const DisplacementField& field, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) fail(ErrorKind::ConfigError, "eta must lie in (0, 1)");
  const double h = P.h, L = P.box.x1;
  const int n = static_cast<int>(P.rects.size());
  std::vector<BridgeResult> out;
  for (int k = 0; k < n;) {
    if (P.rects[k].good) {
      ++k;
      continue;
    }
    BridgeResult B;
    B.first = k;
    while (k < n && !P.rects[k].good) ++k;
    B.last = k - 1;
    B.left = B.first > 0 ? B.first - 1 : -1;
    B.right = k < n ? k : -1;
    const double x0 = B.left >= 0 ? P.rects[B.left].z - h : 0.0;
    const double x1 = B.right >= 0 ? P.rects[B.right].z + h : L;
    B.hull_crack = crack_in_box(P.crack, {x0, x1, -0.5, 0.5}, h);
    if (B.left < 0 || B.right < 0) {
      B.verdict = BridgeVerdict::Boundary;
      out.push_back(std::move(B));
      continue;
    }
    if (B.hull_crack >= (1.0 - eta) * h) {
      B.verdict = BridgeVerdict::Severed;
      out.push_back(std::move(B));
      continue;
    }
    const Rectangle& RL = P.rects[B.left];
    const Rectangle& RR = P.rects[B.right];
    B.delta_fit = RL.motion - RR.motion;
    B.verdict = BridgeVerdict::NoSegmentsFound;
    const double z0 = RL.z, z1 = RR.z;
    const std::vector<Interval> free = free_heights(P.crack, z0, z1);
    if (!free.empty()) {
      const double low = free.front().lo, high = free.back().hi;
      const int N = B.last - B.first + 1;
      const double theta = eta * eta / (N + 2);
      const double rise = theta * (z1 - z0) / h;
      std::optional<std::pair<double, double>> diag;
      for (double sign : {1.0, -1.0}) {
        for (const Interval& I : free) {
          for (int t = 0; t < 33 && !diag; ++t) {
            const double c = I.lo + (t + 0.5) / 33.0 * (I.hi - I.lo);
            const double c2 = c + sign * rise;
            if (c2 < -0.5 || c2 > 0.5) continue;
            if (crack_free(P.crack, {z0, c}, {z1, c2})) diag = std::make_pair(c, c2);
          }
        }
        if (diag) break;
      }
      if (high - low >= eta / 2 && diag) {
        auto bar = [&](double c0, double c1) {
          SegmentPair s;
          s.p = Eigen::Vector2d(z0, h * c0);
          s.q = Eigen::Vector2d(z1, h * c1);
          return s;
        };
        B.bars = {bar(low, low), bar(high, high), bar(diag->first, diag->second)};
        Eigen::VectorXd mu(3);
        for (int b = 0; b < 3; ++b) {
          const Eigen::Vector2d p = B.bars[b].p, q = B.bars[b].q;
          // elongation of the bar: equals (R_z - R_z')(p) . (p - q) when both ends follow their fits
          mu(b) = (interpolate(field, p(0), p(1) / h) - interpolate(field, q(0), q(1) / h)).dot(p - q);
        }
        B.truss_det = truss_det(B.bars);
        try {
          const RigidMotion m = solve_rigid_from_truss(B.bars, mu);
          B.delta_truss = rigid_coordinates(m);
          B.verdict = BridgeVerdict::Bridged;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::SingularTruss) throw;
          B.bars.clear();
        }
      }
    }
    if (B.verdict == BridgeVerdict::Bridged) {
      CompensatedSum E;
      const double area = field.dx() * field.dy() * h;
      for (int j = 0; j < P.ny; ++j)
        for (int i = 0; i < P.nx; ++i) {
          const double c = field.node_x1(i) + 0.5 * field.dx();
          if (!(c > x0 && c < x1) || P.cut[j * P.nx + i]) continue;
          const Eigen::Matrix2d G = field.cell_gradient(i, j);
          E.add(area * (0.5 * (G + G.transpose())).squaredNorm());
        }
      B.hull_energy = E.value();
      const int N = B.last - B.first + 1;
      const double C = P.options.bridge_constant * (N + 2) / (eta * eta);
      B.bound = C / h * std::sqrt(B.hull_energy);
      B.certified = B.delta_fit.norm() <= B.bound + 1e-10;
    }
    out.push_back(std::move(B));
  }
  return out;
}

Eigen::Vector3d PiecewiseRigidFields::evaluate(double x) const {
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  if (it == knots.begin()) return values.front();
  const std::size_t k = static_cast<std::size_t>(it - knots.begin()) - 1;
  if (k + 1 == knots.size()) return values.back();
  const double zl = knots[k], zr = knots[k + 1];
  for (double c : jumps)
    if (c > zl && c < zr) return x < c ? values[k] : values[k + 1];
  const double s = (x - zl) / (zr - zl);
  return (1 - s) * values[k] + s * values[k + 1];
}

Eigen::Vector3d PiecewiseRigidFields::evaluate_bar(double x) const {
  const auto piece = static_cast<std::size_t>(std::upper_bound(jumps.begin(), jumps.end(), x) - jumps.begin());
  return averages[piece];
}

PiecewiseRigidFields build_piecewise_fields(const GoodBadPartition& P, const std::vector<BridgeResult>& bridges) {
  PiecewiseRigidFields F;
  F.L = P.box.x1;
  for (const Rectangle& R : P.rects)
    if (R.good && R.fitted) {
      F.knots.push_back(R.z);
      F.values.push_back(R.motion);
    }
  if (F.knots.empty()) fail(ErrorKind::NoGoodRectangles, "no good rectangle to interpolate from");
  for (const BridgeResult& B : bridges)
    if (B.verdict == BridgeVerdict::Severed) F.jumps.push_back(0.5 * (P.rects[B.first].z + P.rects[B.last].z));
  std::sort(F.jumps.begin(), F.jumps.end());
  F.m_cert = static_cast<int>(std::floor(P.crack.anisotropic_measure(P.h) + 1e-9));
  if (F.jump_count() > F.m_cert)
    fail(ErrorKind::CertificateViolation, std::to_string(F.jump_count()) + " severed components exceed the certificate " +
                                              std::to_string(F.m_cert));
  std::vector<double> ends{0.0};
  ends.insert(ends.end(), F.jumps.begin(), F.jumps.end());
  ends.push_back(F.L);
  for (std::size_t p = 0; p + 1 < ends.size(); ++p) {
    std::vector<double> pts{ends[p]};
    for (double z : F.knots)
      if (z > ends[p] && z < ends[p + 1]) pts.push_back(z);
    pts.push_back(ends[p + 1]);
    // A_h is affine between consecutive points, so the midpoint rule is exact
    Eigen::Vector3d integral = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      integral += (pts[k + 1] - pts[k]) * F.evaluate(0.5 * (pts[k] + pts[k + 1]));
    F.averages.push_back(integral / (ends[p + 1] - ends[p]));
  }
  return F;
}

CompactnessResult compactness_extract(const DisplacementField& field, const CrackSet& crack, double delta, double eta,
                                      const CompactnessOptions& options) {
  CompactnessResult out;
  out.partition = classify_rectangles(field, crack, delta, options);
  fit_rigid_motions(out.partition, field);
  out.bridges = bridge_check(out.partition, field, eta);
  out.fields = build_piecewise_fields(out.partition, out.bridges);

  const GoodBadPartition& P = out.partition;
  const double h = P.h;
  out.residual = field;
  for (int i = 0; i <= field.nx(); ++i) {
    const double x1 = field.node_x1(i);
    const Eigen::Vector3d m = out.fields.evaluate_bar(x1);
    for (int j = 0; j <= field.ny(); ++j)
      out.residual.at(i, j) = field.at(i, j) - apply_motion(m, {x1, h * field.node_x2(j)});
  }

  const int nx = P.nx, ny = P.ny;
  out.omega = P.near_crack;
  for (const Rectangle& R : P.rects)
    if (!R.good)
      for (int c : R.cells) out.omega[c] = true;
  const double layer = (std::floor(field.L() / h + 1e-12) - 1.0) * h;
  for (int i = 0; i < nx; ++i)
    if (field.node_x1(i) + 0.5 * field.dx() > layer)
      for (int j = 0; j < ny; ++j) out.omega[j * nx + i] = true;

  const double dx = field.dx(), dy = field.dy();
  int count = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int c = j * nx + i;
      if (out.omega[c]) {
        ++count;
        if (i > 0 && !out.omega[c - 1]) out.omega_perimeter += dy;
        if (i + 1 < nx && !out.omega[c + 1]) out.omega_perimeter += dy;
        if (j > 0 && !out.omega[c - nx]) out.omega_perimeter += dx / h;
        if (j + 1 < ny && !out.omega[c + nx]) out.omega_perimeter += dx / h;
      } else {
        out.residual_max_off_omega = std::max(out.residual_max_off_omega, out.residual.cell_mean(i, j).norm());
      }
    }
  out.omega_area = count * dx * dy;
  return out;
}

double distance_modulo_rigid(const CompactnessResult& r, const std::function<Eigen::Vector2d(double)>& y) {
  const DisplacementField& f = r.residual;
  const int nx = f.nx(), ny = f.ny();
  const double area = f.dx() * f.dy();
  // weighted least squares for d1 ~ c1 and d2 ~ c2 + a x1
  Eigen::Matrix2d N = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  double s1 = 0, w = 0;
  std::vector<std::pair<double, Eigen::Vector2d>> samples;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (r.omega[j * nx + i]) continue;
      const double x1 = f.node_x1(i) + 0.5 * f.dx();
      const Eigen::Vector2d d = f.cell_mean(i, j) - y(x1);
      samples.emplace_back(x1, d);
      s1 += area * d(0);
      w += area;
      const Eigen::Vector2d phi(1.0, x1);
      N += area * phi * phi.transpose();
      rhs += area * d(1) * phi;
    }
  if (samples.empty()) return 0.0;
  const double c1 = s1 / w;
  const Eigen::Vector2d c = N.ldlt().solve(rhs);
  CompensatedSum e;
  for (const auto& [x1, d] : samples) {
    const double r1 = d(0) - c1, r2 = d(1) - c(0) - c(1) * x1;
    e.add(area * (r1 * r1 + r2 * r2));
  }
  return std::sqrt(e.value());
}

ProfileFit profile_fit(const DisplacementField& field, const std::vector<bool>& omega, double h) {
  const int nx = field.nx(), ny = field.ny();
  if (omega.size() != static_cast<std::size_t>(nx) * ny) fail(ErrorKind::ShapeMismatch, "mask does not match the grid");
  if (!(h > 0.0)) fail(ErrorKind::InvalidThickness, "thickness h must be positive");
  ProfileFit out;
  const double area = field.dx() * field.dy();
  CompensatedSum res;
  for (int i = 0; i < nx; ++i) {
    out.x.push_back(field.node_x1(i) + 0.5 * field.dx());
    std::vector<std::pair<double, double>> pts;
    for (int j = 0; j < ny; ++j)
      if (!omega[j * nx + i]) pts.emplace_back(field.node_x2(j) + 0.5 * field.dy(), field.cell_gradient(i, j)(0, 0) / h);
    if (pts.size() < 2) {
      out.kappa.push_back(0.0);
      out.T.push_back(0.0);
      out.valid.push_back(false);
      continue;
    }
    // W ~ -x2 kappa + T
    Eigen::MatrixXd A(pts.size(), 2);
    Eigen::VectorXd b(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      A(k, 0) = -pts[k].first;
      A(k, 1) = 1.0;
      b(k) = pts[k].second;
    }
    const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
    out.kappa.push_back(sol(0));
    out.T.push_back(sol(1));
    out.valid.push_back(true);
    res.add(area * (A * sol - b).squaredNorm());
  }
  out.residual = std::sqrt(std::max(0.0, res.value()));
  return out;
}

}  // namespace thinbeam
