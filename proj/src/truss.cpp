#include "thinbeam/truss.hpp"

#include <cmath>
#include <string>

#include "thinbeam/error.hpp"

namespace thinbeam {

namespace {

constexpr double kParallelTol = 1e-12;

int dimension_of(const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  if (d != 2 && d != 3) fail(ErrorKind::ConfigError, "truss points must have dimension 2 or 3");
  return d;
}

double wedge2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a(0) * b(1) - a(1) * b(0); }

// |a ^ b| in 2D or 3D
double wedge_norm(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() == 2) return std::abs(wedge2(a, b));
  return Eigen::Vector3d(a).cross(Eigen::Vector3d(b)).norm();
}

// Coefficients of (A p) . v in the skew coordinates.
Eigen::VectorXd skew_row(const Eigen::VectorXd& p, const Eigen::VectorXd& v) {
  if (p.size() == 2) {
    Eigen::VectorXd r(1);
    r(0) = -wedge2(p, v);
    return r;
  }
  const Eigen::Vector3d c = Eigen::Vector3d(p).cross(Eigen::Vector3d(v));
  Eigen::VectorXd r(3);
  r << -c(2), c(1), -c(0);
  return r;
}

Eigen::VectorXd row_for(const Eigen::VectorXd& p, const Eigen::VectorXd& v) {
  const int d = static_cast<int>(p.size());
  Eigen::VectorXd row(rigid_dimension(d));
  const Eigen::VectorXd s = skew_row(p, v);
  row.head(s.size()) = s;
  row.tail(d) = v;
  return row;
}

void check_count(int n, int d) {
  if (n != rigid_dimension(d)) {
    fail(ErrorKind::WrongCount, "need " + std::to_string(rigid_dimension(d)) + " bars in dimension " +
                                    std::to_string(d) + ", got " + std::to_string(n));
  }
}

Eigen::Vector2d intersect(const OrientedLine& a, const OrientedLine& b) {
  const double t = wedge2(b.point - a.point, b.dir) / wedge2(a.dir, b.dir);
  return a.point + t * a.dir;
}

}  // namespace

int rigid_dimension(int d) { return d * (d + 1) / 2; }

Eigen::VectorXd skew_coordinates(const Eigen::MatrixXd& A) {
  if (A.rows() == 2) {
    Eigen::VectorXd a(1);
    a(0) = A(0, 1);
    return a;
  }
  Eigen::VectorXd a(3);
  a << A(0, 1), A(0, 2), A(1, 2);
  return a;
}

Eigen::MatrixXd skew_from_coordinates(const Eigen::VectorXd& a, int d) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  A(0, 1) = a(0);
  if (d == 3) {
    A(0, 2) = a(1);
    A(1, 2) = a(2);
  }
  return A - A.transpose();
}

Eigen::VectorXd rigid_coordinates(const RigidMotion& m) {
  const int d = static_cast<int>(m.b.size());
  Eigen::VectorXd x(rigid_dimension(d));
  const Eigen::VectorXd a = skew_coordinates(m.A);
  x.head(a.size()) = a;
  x.tail(d) = m.b;
  return x;
}

RigidMotion rigid_from_coordinates(const Eigen::VectorXd& x, int d) {
  const int k = rigid_dimension(d) - d;
  return {skew_from_coordinates(x.head(k), d), x.tail(d)};
}

Eigen::MatrixXd truss_matrix(const std::vector<SegmentPair>& pairs) {
  if (pairs.empty()) fail(ErrorKind::WrongCount, "truss has no bars");
  const int d = dimension_of(pairs.front().p);
  Eigen::MatrixXd F(pairs.size(), rigid_dimension(d));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SegmentPair& s = pairs[i];
    if (s.p.size() != d || s.q.size() != d) fail(ErrorKind::ConfigError, "bars of mixed dimension");
    const Eigen::VectorXd v = s.p - s.q;
    if (v.norm() == 0.0) fail(ErrorKind::DegeneratePair, "bar " + std::to_string(i) + " has p = q");
    F.row(i) = row_for(s.p, v).transpose();
  }
  return F;
}

double truss_det(const std::vector<SegmentPair>& pairs) {
  if (pairs.empty()) fail(ErrorKind::WrongCount, "truss has no bars");
  check_count(static_cast<int>(pairs.size()), dimension_of(pairs.front().p));
  return truss_matrix(pairs).determinant();
}

OrientedLine line_of(const SegmentPair& pair) {
  const Eigen::VectorXd v = pair.p - pair.q;
  const double n = v.norm();
  if (n == 0.0) fail(ErrorKind::DegeneratePair, "bar has p = q");
  return {pair.p, v / n};
}

Eigen::VectorXd line_row(const OrientedLine& line) {
  dimension_of(line.point);
  return row_for(line.point, line.dir);
}

double line_function_f(const std::vector<OrientedLine>& lines) {
  if (lines.empty()) fail(ErrorKind::WrongCount, "no lines");
  const int d = dimension_of(lines.front().point);
  check_count(static_cast<int>(lines.size()), d);
  Eigen::MatrixXd M(lines.size(), rigid_dimension(d));
  for (std::size_t i = 0; i < lines.size(); ++i) M.row(i) = line_row(lines[i]).transpose();
  return M.determinant();
}

bool same_line(const OrientedLine& a, const OrientedLine& b) {
  if ((a.dir - b.dir).norm() > kParallelTol) return false;
  const Eigen::VectorXd dx = a.point - b.point;
  return wedge_norm(dx, a.dir) <= kParallelTol * (1.0 + dx.norm());
}

double f2d_closed_form(const OrientedLine& L1, const OrientedLine& L2, const OrientedLine& L3) {
  if (L1.point.size() != 2 || L2.point.size() != 2 || L3.point.size() != 2) {
    fail(ErrorKind::ConfigError, "f2d_closed_form needs planar lines");
  }
  const double sa = wedge2(L1.dir, L2.dir);
  const double sb = wedge2(L1.dir, L3.dir);
  const bool par12 = std::abs(sa) <= kParallelTol;
  const bool par13 = std::abs(sb) <= kParallelTol;
  const bool par23 = std::abs(wedge2(L2.dir, L3.dir)) <= kParallelTol;
  if (par12 && par13 && par23) return 0.0;
  if (par12 || par13) {
    fail(ErrorKind::NeedsReordering, "first line must be transversal to the other two");
  }
  const Eigen::Vector2d p = intersect(L1, L2);
  const Eigen::Vector2d q = intersect(L1, L3);
  return (p - q).norm() * std::abs(sa) * std::abs(sb);
}

double f3d_factorization(const std::vector<OrientedLine>& lines) {
  if (lines.size() != 6) fail(ErrorKind::WrongCount, "f3d_factorization needs six lines");
  for (const OrientedLine& l : lines) {
    if (l.point.size() != 3 || l.dir.size() != 3) fail(ErrorKind::ConfigError, "f3d_factorization needs space lines");
  }
  const Eigen::Vector3d v1 = lines[0].dir;
  if ((lines[1].dir - v1).norm() > kParallelTol || (lines[2].dir - v1).norm() > kParallelTol) {
    fail(ErrorKind::NotParallelTriple, "first three lines must share a direction");
  }
  // orthonormal basis (e, f) of the plane orthogonal to v1
  Eigen::Vector3d seed = Eigen::Vector3d::UnitX();
  if (std::abs(v1.dot(seed)) > 0.9) seed = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e = (seed - seed.dot(v1) * v1).normalized();
  const Eigen::Vector3d f = v1.cross(e);
  auto project = [&](const Eigen::VectorXd& x) -> Eigen::Vector2d { return {x.dot(e), x.dot(f)}; };

  const Eigen::Vector2d x1 = project(lines[0].point);
  const Eigen::Vector2d x2 = project(lines[1].point);
  const Eigen::Vector2d x3 = project(lines[2].point);
  double value = std::abs(wedge2(x2 - x1, x3 - x1));

  std::vector<OrientedLine> planar;
  for (int i = 3; i < 6; ++i) {
    const Eigen::Vector2d vb = project(lines[i].dir);
    const double n = vb.norm();
    if (n <= kParallelTol) {
      fail(ErrorKind::DegenerateProjection, "line " + std::to_string(i + 1) + " is parallel to the first three");
    }
    value *= n;
    planar.push_back({project(lines[i].point), vb / n});
  }
  return value * std::abs(line_function_f(planar));
}

RigidMotion solve_rigid_from_truss(const std::vector<SegmentPair>& pairs, const Eigen::VectorXd& measurements) {
  const Eigen::MatrixXd F = truss_matrix(pairs);
  const int d = static_cast<int>(pairs.front().p.size());
  check_count(static_cast<int>(pairs.size()), d);
  if (measurements.size() != F.rows()) fail(ErrorKind::WrongCount, "measurement count differs from bar count");
  const double det = F.determinant();
  const double scale = F.rowwise().norm().maxCoeff();
  if (!(std::abs(det) > 1e-10 * std::pow(scale, static_cast<double>(F.rows())))) {
    fail(ErrorKind::SingularTruss, "truss determinant " + std::to_string(det) + " is below the singularity threshold");
  }
  const Eigen::VectorXd x = F.partialPivLu().solve(measurements);
  return rigid_from_coordinates(x, d);
}

}  // namespace thinbeam
