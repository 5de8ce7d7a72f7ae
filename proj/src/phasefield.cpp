#include "thinbeam/phasefield.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "thinbeam/error.hpp"
#include "thinbeam/thin_film.hpp"

namespace thinbeam {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Shape data of the bilinear element at its four Gauss points. Corners are
// ordered (i,j), (i+1,j), (i,j+1), (i+1,j+1).
struct Element {
  double weight = 0.0;                   // area / 4
  std::array<Eigen::Vector4d, 4> N;      // N[q](a)
  std::array<Eigen::Vector4d, 4> D1;     // d1 N
  std::array<Eigen::Vector4d, 4> D2;     // h^-1 d2 N
};

Element make_element(double dx, double dy, double h) {
  Element e;
  e.weight = dx * dy / 4.0;
  const double g = 0.5 / std::numbers::sqrt3;
  const double pts[2] = {0.5 - g, 0.5 + g};
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      const double s = pts[qx], t = pts[qy];
      const int q = 2 * qy + qx;
      e.N[q] << (1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t;
      e.D1[q] << -(1 - t), (1 - t), -t, t;
      e.D1[q] /= dx;
      e.D2[q] << -(1 - s), -s, (1 - s), s;
      e.D2[q] /= dy * h;
    }
  }
  return e;
}

struct Grid {
  int nx, ny;
  double dx, dy, h;
  int node(int i, int j) const { return j * (nx + 1) + i; }
  std::array<int, 4> corners(int i, int j) const {
    return {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
  }
  int nodes() const { return (nx + 1) * (ny + 1); }
};

Grid grid_of(const DisplacementField& f) { return {f.nx(), f.ny(), f.dx(), f.dy(), f.h()}; }

// 3 x 8 strain operator; dofs ordered (y1, y2) per corner.
Eigen::Matrix<double, 3, 8> strain_operator(const Element& e, int q) {
  Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    B(0, 2 * a) = e.D1[q](a);
    B(1, 2 * a + 1) = e.D2[q](a);
    B(2, 2 * a) = e.D2[q](a) / std::numbers::sqrt2;
    B(2, 2 * a + 1) = e.D1[q](a) / std::numbers::sqrt2;
  }
  return B;
}

Eigen::Matrix<double, 8, 1> cell_dofs(const DisplacementField& y, int i, int j) {
  Eigen::Matrix<double, 8, 1> u;
  u.segment<2>(0) = y.at(i, j);
  u.segment<2>(2) = y.at(i + 1, j);
  u.segment<2>(4) = y.at(i, j + 1);
  u.segment<2>(6) = y.at(i + 1, j + 1);
  return u;
}

Eigen::Vector4d cell_phi(const DamageField& d, int i, int j) {
  return {d.at(i, j), d.at(i + 1, j), d.at(i, j + 1), d.at(i + 1, j + 1)};
}

// Trapezoid weight of node (i, j).
double node_weight(const Grid& g, int i, int j) {
  const double wx = (i == 0 || i == g.nx) ? 0.5 : 1.0;
  const double wy = (j == 0 || j == g.ny) ? 0.5 : 1.0;
  return wx * wy * g.dx * g.dy;
}

void check_shapes(const DisplacementField& y, const DamageField& d) {
  const auto expected = static_cast<Eigen::Index>(y.nx() + 1) * (y.ny() + 1);
  if (d.nx != y.nx() || d.ny != y.ny() || d.phi.size() != expected)
    fail(ErrorKind::ShapeMismatch, "damage and displacement grids differ");
}

void check_same_grid(const DisplacementField& a, const DisplacementField& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny() || a.L() != b.L() || a.h() != b.h() || a.box().x0 != b.box().x0 ||
      a.box().x1 != b.box().x1 || a.box().y0 != b.box().y0 || a.box().y1 != b.box().y1)
    fail(ErrorKind::ShapeMismatch, "displacement grids differ");
}

// Elastic energy density h^-2 1/2 e : C e at every Gauss point, cell-major.
std::vector<double> elastic_density(const DisplacementField& y, const Element& e, const Eigen::Matrix3d& Q) {
  const Grid g = grid_of(y);
  std::vector<double> W(static_cast<std::size_t>(g.nx) * g.ny * 4);
  const double scale = 0.5 / (g.h * g.h);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto u = cell_dofs(y, i, j);
      for (int q = 0; q < 4; ++q) {
        const Eigen::Vector3d s = strain_operator(e, q) * u;
        W[(static_cast<std::size_t>(j) * g.nx + i) * 4 + q] = scale * s.dot(Q * s);
      }
    }
  return W;
}

// Damage quadratic form: energy(phi) = phi' A phi - 2 b' phi + const.
struct DamageSystem {
  SpMat A;
  Eigen::VectorXd b;
  double constant = 0.0;

  double energy(const Eigen::VectorXd& phi) const { return phi.dot(A * phi) - 2.0 * b.dot(phi) + constant; }
};

DamageSystem damage_system(const DisplacementField& y, const DamageField& d, const ElasticTensor& C, double beta) {
  const Grid g = grid_of(y);
  const Element e = make_element(g.dx, g.dy, g.h);
  const std::vector<double> W = elastic_density(y, e, C.voigt());
  const double eps = d.epsilon;
  const double reaction = beta / (4.0 * eps);
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(g.nx) * g.ny * 16);
  DamageSystem sys;
  sys.b = Eigen::VectorXd::Zero(g.nodes());
  CompensatedSum constant;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto idx = g.corners(i, j);
      Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
      Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
      for (int q = 0; q < 4; ++q) {
        const double w = e.weight;
        const double Wq = W[(static_cast<std::size_t>(j) * g.nx + i) * 4 + q];
        K += w * (Wq + reaction) * e.N[q] * e.N[q].transpose();
        K += w * beta * eps * (e.D1[q] * e.D1[q].transpose() + e.D2[q] * e.D2[q].transpose());
        rhs += w * reaction * e.N[q];
        // k_eps part of the bulk does not depend on phi
        constant.add(w * (reaction + d.k_eps * Wq));
      }
      for (int a = 0; a < 4; ++a) {
        sys.b(idx[a]) += rhs(a);
        for (int c = 0; c < 4; ++c) trip.emplace_back(idx[a], idx[c], K(a, c));
      }
    }
  sys.A.resize(g.nodes(), g.nodes());
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.constant = constant.value();
  return sys;
}

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b, const Eigen::VectorXd& guess) {
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(1e-10);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * A.rows()));
  cg.compute(A);
  if (cg.info() != Eigen::Success) fail(ErrorKind::SolverDiverged, "incomplete Cholesky factorization failed");
  Eigen::VectorXd x = cg.solveWithGuess(b, guess);
  if (cg.info() != Eigen::Success || !x.allFinite())
    fail(ErrorKind::SolverDiverged, "conjugate gradient did not reach relative residual 1e-10");
  return x;
}

// Projected Gauss-Seidel sweeps on min phi' A phi - 2 b' phi over [0, 1].
void projected_gauss_seidel(const SpMat& A, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
  for (int sweep = 0; sweep < 2000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
      double diag = 0.0, off = 0.0;
      for (SpMat::InnerIterator it(A, r); it; ++it) {
        if (it.col() == r)
          diag = it.value();
        else
          off += it.value() * x(it.col());
      }
      const double v = std::clamp((b(r) - off) / diag, 0.0, 1.0);
      change = std::max(change, std::abs(v - x(r)));
      x(r) = v;
    }
    if (change < 1e-12) return;
  }
}

}  // namespace

double default_epsilon(const DisplacementField& grid) { return 4.0 * std::max(grid.dx(), grid.h() * grid.dy()); }

DamageField intact_damage(const DisplacementField& field, double epsilon, double k_eps) {
  if (!(epsilon > 0.0)) fail(ErrorKind::ConfigError, "epsilon must be positive");
  if (!(k_eps >= 0.0)) fail(ErrorKind::ConfigError, "k_eps must be nonnegative");
  DamageField d;
  d.nx = field.nx();
  d.ny = field.ny();
  d.phi = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d.nx + 1) * (d.ny + 1));
  d.epsilon = epsilon;
  d.k_eps = k_eps;
  return d;
}

AtEnergy at_energy(const DisplacementField& y, const DamageField& d, const ElasticTensor& C, double beta,
                   double fidelity, const DisplacementField& g) {
  check_shapes(y, d);
  check_same_grid(y, g);
  const Grid gr = grid_of(y);
  const Element e = make_element(gr.dx, gr.dy, gr.h);
  const Eigen::Matrix3d& Q = C.voigt();
  CompensatedSum bulk, surface, fid;
  const double scale = 0.5 / (gr.h * gr.h);
  for (int j = 0; j < gr.ny; ++j)
    for (int i = 0; i < gr.nx; ++i) {
      const auto u = cell_dofs(y, i, j);
      const Eigen::Vector4d p = cell_phi(d, i, j);
      for (int q = 0; q < 4; ++q) {
        const Eigen::Vector3d s = strain_operator(e, q) * u;
        const double pq = e.N[q].dot(p);
        bulk.add(e.weight * (pq * pq + d.k_eps) * scale * s.dot(Q * s));
        const double g1 = e.D1[q].dot(p), g2 = e.D2[q].dot(p);
        surface.add(e.weight * ((1 - pq) * (1 - pq) / (4 * d.epsilon) + d.epsilon * (g1 * g1 + g2 * g2)));
      }
    }
  for (int j = 0; j <= gr.ny; ++j)
    for (int i = 0; i <= gr.nx; ++i) fid.add(node_weight(gr, i, j) * (y.at(i, j) - g.at(i, j)).squaredNorm());
  AtEnergy out;
  out.bulk = bulk.value();
  out.surface = beta * surface.value();
  out.fidelity = fidelity * fid.value();
  out.total = out.bulk + out.surface + out.fidelity;
  return out;
}

DisplacementField elastic_step(const DamageField& d, const DisplacementField& g, const ElasticTensor& C,
                               double fidelity) {
  check_shapes(g, d);
  if (!(fidelity > 0.0)) fail(ErrorKind::SingularSystem, "elastic step needs a positive fidelity weight");
  g.check_finite();
  const Grid gr = grid_of(g);
  const Element e = make_element(gr.dx, gr.dy, gr.h);
  const Eigen::Matrix3d& Q = C.voigt();
  const double scale = 1.0 / (gr.h * gr.h);
  const int n = 2 * gr.nodes();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(gr.nx) * gr.ny * 64 + n);
  for (int j = 0; j < gr.ny; ++j)
    for (int i = 0; i < gr.nx; ++i) {
      const auto idx = gr.corners(i, j);
      const Eigen::Vector4d p = cell_phi(d, i, j);
      Eigen::Matrix<double, 8, 8> K = Eigen::Matrix<double, 8, 8>::Zero();
      for (int q = 0; q < 4; ++q) {
        const double pq = e.N[q].dot(p);
        const auto B = strain_operator(e, q);
        K += e.weight * (pq * pq + d.k_eps) * scale * B.transpose() * Q * B;
      }
      for (int a = 0; a < 8; ++a)
        for (int c = 0; c < 8; ++c) trip.emplace_back(2 * idx[a / 2] + a % 2, 2 * idx[c / 2] + c % 2, K(a, c));
    }
  Eigen::VectorXd rhs(n), guess(n);
  for (int j = 0; j <= gr.ny; ++j)
    for (int i = 0; i <= gr.nx; ++i) {
      const int k = gr.node(i, j);
      const double w = 2.0 * fidelity * node_weight(gr, i, j);
      for (int c = 0; c < 2; ++c) {
        trip.emplace_back(2 * k + c, 2 * k + c, w);
        rhs(2 * k + c) = w * g.at(i, j)(c);
        guess(2 * k + c) = g.at(i, j)(c);
      }
    }
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  const Eigen::VectorXd x = solve_spd(A, rhs, guess);
  DisplacementField y = g;
  for (int k = 0; k < gr.nodes(); ++k) y.values()[k] = x.segment<2>(2 * k);
  return y;
}

DamageField damage_step(const DisplacementField& y, const DamageField& previous, const ElasticTensor& C, double beta) {
  check_shapes(y, previous);
  if (!(beta > 0.0)) fail(ErrorKind::ConfigError, "beta must be positive");
  const DamageSystem sys = damage_system(y, previous, C, beta);
  DamageField next = previous;
  Eigen::VectorXd x = solve_spd(sys.A, sys.b, previous.phi);
  const bool inside = (x.array() >= 0.0).all() && (x.array() <= 1.0).all();
  if (inside) {
    next.phi = x;
    return next;
  }
  x = x.cwiseMax(0.0).cwiseMin(1.0);
  projected_gauss_seidel(sys.A, sys.b, x);
  Eigen::VectorXd from_previous = previous.phi.cwiseMax(0.0).cwiseMin(1.0);
  if (sys.energy(x) > sys.energy(from_previous)) {
    projected_gauss_seidel(sys.A, sys.b, from_previous);
    x = from_previous;
  }
  next.phi = x;
  return next;
}

PhaseFieldResult minimize_alternating(const PhaseFieldProblem& pb) {
  if (pb.max_iter < 1) fail(ErrorKind::ConfigError, "max_iter must be positive");
  const double eps = pb.epsilon > 0.0 ? pb.epsilon : default_epsilon(pb.g);
  DamageField d = intact_damage(pb.g, eps, pb.k_eps);
  if (pb.random_init) {
    std::mt19937_64 rng(pb.seed);
    std::uniform_real_distribution<double> U(0.9, 1.0);
    for (Eigen::Index k = 0; k < d.phi.size(); ++k) d.phi(k) = U(rng);
  }
  PhaseFieldResult r{elastic_step(d, pb.g, pb.C, pb.fidelity), d, {}, {}};
  double E = at_energy(r.y, r.damage, pb.C, pb.beta, pb.fidelity, pb.g).total;
  r.report.energy_trace.push_back(E);
  for (int it = 1; it <= pb.max_iter; ++it) {
    r.damage = damage_step(r.y, r.damage, pb.C, pb.beta);
    r.y = elastic_step(r.damage, pb.g, pb.C, pb.fidelity);
    const double next = at_energy(r.y, r.damage, pb.C, pb.beta, pb.fidelity, pb.g).total;
    r.report.energy_trace.push_back(next);
    r.report.iterations = it;
    const double decrease = E - next;
    E = next;
    if (decrease < pb.tol * std::max(std::abs(E), 1e-300)) {
      r.report.converged = true;
      break;
    }
  }
  r.energy = at_energy(r.y, r.damage, pb.C, pb.beta, pb.fidelity, pb.g);
  return r;
}

namespace {

struct ValleyPoint {
  double pos;  // refined coordinate across the valley
  int along;   // row (steep) or column (flat) index
};

// Vertex of the parabola through (-1, a), (0, b), (1, c), clamped to [-1/2, 1/2].
double parabola_offset(double a, double b, double c) {
  const double curv = a - 2 * b + c;
  if (curv <= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / curv, -0.5, 0.5);
}

// Polylines through valley points grouped by their along-index, linking
// consecutive indices whose positions differ by at most 1.5 cells.
std::vector<std::vector<ValleyPoint>> chain(std::vector<ValleyPoint> pts, double cell) {
  std::sort(pts.begin(), pts.end(),
            [](const ValleyPoint& a, const ValleyPoint& b) { return a.along != b.along ? a.along < b.along : a.pos < b.pos; });
  std::vector<std::vector<ValleyPoint>> chains;
  std::vector<bool> used(pts.size(), false);
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (used[s]) continue;
    std::vector<ValleyPoint> c{pts[s]};
    used[s] = true;
    for (std::size_t k = s + 1; k < pts.size(); ++k) {
      if (used[k]) continue;
      const ValleyPoint& last = c.back();
      if (pts[k].along == last.along + 1 && std::abs(pts[k].pos - last.pos) <= 1.5 * cell) {
        c.push_back(pts[k]);
        used[k] = true;
      } else if (pts[k].along > last.along + 1) {
        break;
      }
    }
    chains.push_back(std::move(c));
  }
  return chains;
}

// Drops interior vertices where the polyline goes straight on.
std::vector<Eigen::Vector2d> simplify(const std::vector<Eigen::Vector2d>& p) {
  if (p.size() <= 2) return p;
  std::vector<Eigen::Vector2d> out{p.front()};
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    const Eigen::Vector2d u = p[k] - out.back(), v = p[k + 1] - p[k];
    const double cross = u(0) * v(1) - u(1) * v(0);
    if (std::abs(cross) > 1e-12 * u.norm() * v.norm()) out.push_back(p[k]);
  }
  out.push_back(p.back());
  return out;
}

}  // namespace

CrackSet extract_crack(const DamageField& d, const Box& box, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorKind::ConfigError, "threshold must lie in (0, 1)");
  const int nx = d.nx, ny = d.ny;
  const double dx = box.width() / nx, dy = box.height() / ny;
  auto phi = [&](int i, int j) { return d.at(std::clamp(i, 0, nx), std::clamp(j, 0, ny)); };
  std::vector<ValleyPoint> steep, flat;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double c = phi(i, j);
      if (!(c < threshold)) continue;
      // one-sided differences at the boundary become zero curvature there
      const double pxx = (i > 0 && i < nx) ? (phi(i - 1, j) - 2 * c + phi(i + 1, j)) / (dx * dx) : 0.0;
      const double pyy = (j > 0 && j < ny) ? (phi(i, j - 1) - 2 * c + phi(i, j + 1)) / (dy * dy) : 0.0;
      const double pxy = (phi(i + 1, j + 1) - phi(i + 1, j - 1) - phi(i - 1, j + 1) + phi(i - 1, j - 1)) /
                         ((std::min(i + 1, nx) - std::max(i - 1, 0)) * dx * (std::min(j + 1, ny) - std::max(j - 1, 0)) * dy);
      Eigen::Matrix2d H;
      H << pxx, pxy, pxy, pyy;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
      // across a valley the curvature is positive and dominates; flanks of
      // the profile are concave across and only noisy along
      if (!(es.eigenvalues()(1) > std::abs(es.eigenvalues()(0)))) continue;
      const Eigen::Vector2d n = es.eigenvectors().col(1);
      if (std::abs(n(0)) >= std::abs(n(1))) {
        if (i == 0 || i == nx || c > phi(i - 1, j) || c > phi(i + 1, j)) continue;
        steep.push_back({box.x0 + (i + parabola_offset(phi(i - 1, j), c, phi(i + 1, j))) * dx, j});
      } else {
        if (j == 0 || j == ny || c > phi(i, j - 1) || c > phi(i, j + 1)) continue;
        flat.push_back({box.y0 + (j + parabola_offset(phi(i, j - 1), c, phi(i, j + 1))) * dy, i});
      }
    }
  CrackSet crack;
  auto emit = [&](const std::vector<Eigen::Vector2d>& poly) {
    const auto s = simplify(poly);
    for (std::size_t k = 0; k + 1 < s.size(); ++k)
      if ((s[k + 1] - s[k]).norm() > 0.0) crack.add(s[k], s[k + 1]);
  };
  for (const auto& c : chain(steep, dx)) {
    std::vector<Eigen::Vector2d> poly;
    // every valley node owns a piece one cell tall
    poly.emplace_back(c.front().pos, std::max(box.y0, box.y0 + (c.front().along - 0.5) * dy));
    for (const ValleyPoint& p : c) poly.emplace_back(p.pos, box.y0 + p.along * dy);
    poly.emplace_back(c.back().pos, std::min(box.y1, box.y0 + (c.back().along + 0.5) * dy));
    emit(poly);
  }
  for (const auto& c : chain(flat, dy)) {
    std::vector<Eigen::Vector2d> poly;
    poly.emplace_back(std::max(box.x0, box.x0 + (c.front().along - 0.5) * dx), c.front().pos);
    for (const ValleyPoint& p : c) poly.emplace_back(box.x0 + p.along * dx, p.pos);
    poly.emplace_back(std::min(box.x1, box.x0 + (c.back().along + 0.5) * dx), c.back().pos);
    emit(poly);
  }
  return crack;
}

std::vector<SharpScanEntry> sharp_vertical_scan(const DisplacementField& y, const ElasticTensor& C, double beta) {
  std::vector<SharpScanEntry> out;
  out.reserve(y.nx());
  for (int i = 0; i < y.nx(); ++i) {
    const double x = y.node_x1(i) + 0.5 * y.dx();
    out.push_back({x, evaluate_Eh(y, vertical_crack(x), C, beta).total});
  }
  return out;
}

DisplacementField split_strip_target(int nx, int ny, double L, double h, double split, const Eigen::Vector2d& g_left,
                                     const Eigen::Vector2d& g_right) {
  return DisplacementField::sample(nx, ny, L, h, strip_box(L), [&](double x1, double) {
    return x1 < split ? g_left : g_right;
  });
}

}  // namespace thinbeam
