#include "thinbeam/beam.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "thinbeam/error.hpp"

namespace thinbeam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const BeamProblem& prob) {
  if (prob.g_u.size() != prob.g_v.size()) fail(ErrorKind::GridMismatch, "g_u and g_v differ in length");
  if (prob.n() < 2) fail(ErrorKind::GridMismatch, "beam grid needs at least two nodes");
  if (!(prob.a > 0.0) || !(prob.beta > 0.0) || !(prob.L > 0.0)) {
    fail(ErrorKind::ConfigError, "beam problem needs a > 0, beta > 0, L > 0");
  }
  if (!(prob.fidelity_weight >= 0.0) || !(prob.prefactor > 0.0)) {
    fail(ErrorKind::ConfigError, "beam problem needs fidelity_weight >= 0 and prefactor > 0");
  }
}

double second_difference(const Eigen::VectorXd& v, int j, double dx) {
  return (v(j - 1) - 2.0 * v(j) + v(j + 1)) / (dx * dx);
}

// Minimizer of kappa * bending + fw * sum t (v - g)^2 on nodes s..e.
Eigen::VectorXd solve_v_block(const BeamProblem& prob, const Eigen::VectorXd& t, int s, int e) {
  const int m = e - s + 1;
  const int n = prob.n();
  const double dx = prob.dx();
  const double kappa = prob.prefactor * prob.a;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    trip.emplace_back(i, i, prob.fidelity_weight * t(s + i));
    rhs(i) = prob.fidelity_weight * t(s + i) * prob.g_v(s + i);
  }
  const double stencil[3] = {1.0, -2.0, 1.0};
  for (int j = s + 1; j < e; ++j) {
    const double c = kappa * bending_weight(j, n, dx) / std::pow(dx, 4);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) trip.emplace_back(j - 1 - s + p, j - 1 - s + q, c * stencil[p] * stencil[q]);
  }
  Eigen::SparseMatrix<double> H(m, m);
  H.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::SingularSystem, "beam segment system is singular");
  return ldlt.solve(rhs);
}

double weighted_mean(const Eigen::VectorXd& g, const Eigen::VectorXd& t, int s, int e) {
  double num = 0.0, den = 0.0;
  for (int i = s; i <= e; ++i) {
    num += t(i) * g(i);
    den += t(i);
  }
  return num / den;
}

// Exact-count suffix tables and lazily computed segment costs.
class SegmentDp {
 public:
  SegmentDp(const BeamProblem& prob, int max_jumps)
      : prob_(prob), n_(prob.n()), J_(max_jumps), t_(trapezoid_weights(prob.n(), prob.dx())),
        cost_(static_cast<std::size_t>(n_) * n_, std::numeric_limits<double>::quiet_NaN()),
        G_(static_cast<std::size_t>(n_ + 1) * (J_ + 1), kInf) {
    for (int s = n_ - 1; s >= 0; --s) {
      G(s, 0) = cost(s, n_ - 1);
      for (int r = 1; r <= J_; ++r) {
        double best = kInf;
        for (int e = s; e + 1 <= n_ - 1; ++e) {
          const double tail = G(e + 1, r - 1);
          if (tail == kInf) continue;
          best = std::min(best, cost(s, e) + prob_.beta + tail);
        }
        G(s, r) = best;
      }
    }
  }

  double& G(int s, int r) { return G_[static_cast<std::size_t>(s) * (J_ + 1) + r]; }

  double cost(int s, int e) {
    double& c = cost_[static_cast<std::size_t>(s) * n_ + e];
    if (std::isnan(c)) c = evaluate(s, e);
    return c;
  }

  // Sorted interface list of the chosen segmentation.
  std::vector<int> select() {
    double emin = kInf;
    for (int r = 0; r <= J_; ++r) emin = std::min(emin, G(0, r));
    const double tol = 1e-10 * (1.0 + std::abs(emin));
    int jumps = 0;
    while (G(0, jumps) > emin + tol) ++jumps;
    std::vector<int> S;
    double acc = 0.0;
    int s = 0;
    for (int r = jumps; r > 0; --r) {
      for (int e = s; e + 1 <= n_ - 1; ++e) {
        const double total = acc + cost(s, e) + prob_.beta + G(e + 1, r - 1);
        if (total <= emin + tol) {
          S.push_back(e);
          acc += cost(s, e) + prob_.beta;
          s = e + 1;
          break;
        }
      }
    }
    return S;
  }

  const Eigen::VectorXd& trapezoid() const { return t_; }

 private:
  double evaluate(int s, int e) {
    const double fw = prob_.fidelity_weight;
    const double c = weighted_mean(prob_.g_u, t_, s, e);
    const Eigen::VectorXd v = solve_v_block(prob_, t_, s, e);
    double fid = 0.0;
    for (int i = s; i <= e; ++i) {
      fid += t_(i) * ((c - prob_.g_u(i)) * (c - prob_.g_u(i)) + (v(i - s) - prob_.g_v(i)) * (v(i - s) - prob_.g_v(i)));
    }
    return prob_.prefactor * prob_.a * block_bending_local(v, s, e) + fw * fid;
  }

  double block_bending_local(const Eigen::VectorXd& v, int s, int e) const {
    const double dx = prob_.dx();
    double sum = 0.0;
    for (int j = s + 1; j < e; ++j) {
      const double d = (v(j - 1 - s) - 2.0 * v(j - s) + v(j + 1 - s)) / (dx * dx);
      sum += bending_weight(j, n_, dx) * d * d;
    }
    return sum;
  }

  const BeamProblem& prob_;
  int n_;
  int J_;
  Eigen::VectorXd t_;
  std::vector<double> cost_;
  std::vector<double> G_;
};

// Jump types at the points of S read off the piecewise solution (u, v).
BeamState classify(Eigen::VectorXd u, Eigen::VectorXd v, const std::vector<int>& S) {
  BeamState st;
  const int n = static_cast<int>(v.size());
  const double tol_u = 1e-7 * (1.0 + u.cwiseAbs().maxCoeff());
  const double tol_v = 1e-7 * (1.0 + v.cwiseAbs().maxCoeff());
  auto in_S = [&](int k) { return std::binary_search(S.begin(), S.end(), k); };
  for (int k : S) {
    if (std::abs(u(k) - u(k + 1)) > tol_u) st.J_u.push_back(k);
    const bool left = k >= 1 && !in_S(k - 1);
    const bool right = k + 2 <= n - 1 && !in_S(k + 1);
    const double sl = left ? v(k) - v(k - 1) : 0.0;
    const double sr = right ? v(k + 2) - v(k + 1) : 0.0;
    const double vl = v(k) + 0.5 * sl;
    const double vr = v(k + 1) - 0.5 * sr;
    if (std::abs(vl - vr) > tol_v) {
      st.J_v.push_back(k);
    } else if (std::abs(sl - sr) > tol_v || std::abs(u(k) - u(k + 1)) <= tol_u) {
      // a point that separates nothing still counts as a jump point
      st.J_vprime.push_back(k);
    }
  }
  st.u = std::move(u);
  st.v = std::move(v);
  return st;
}

std::vector<bool> mark(const std::vector<int>& ks, int interfaces) {
  std::vector<bool> m(interfaces, false);
  for (int k : ks) m[k] = true;
  return m;
}

}  // namespace

std::vector<int> BeamState::jump_points() const {
  std::vector<int> all = J_u;
  all.insert(all.end(), J_v.begin(), J_v.end());
  all.insert(all.end(), J_vprime.begin(), J_vprime.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

Eigen::VectorXd trapezoid_weights(int n, double dx) {
  Eigen::VectorXd t = Eigen::VectorXd::Constant(n, dx);
  t(0) = t(n - 1) = 0.5 * dx;
  return t;
}

double bending_weight(int j, int n, double dx) {
  if (n == 3) return 2.0 * dx;
  if (j == 1 || j == n - 2) return 1.5 * dx;
  return dx;
}

BeamEnergy beam_energy(const BeamState& state, const BeamProblem& prob) {
  validate(prob);
  const int n = prob.n();
  if (state.u.size() != n || state.v.size() != n) fail(ErrorKind::GridMismatch, "state and problem grids differ");
  for (const auto* J : {&state.J_u, &state.J_v, &state.J_vprime}) {
    for (int k : *J) {
      if (k < 0 || k > n - 2) fail(ErrorKind::GridMismatch, "jump interface " + std::to_string(k) + " out of range");
    }
  }
  const double dx = prob.dx();
  std::vector<bool> brk = mark(state.J_v, n - 1);
  for (int k : state.J_vprime) brk[k] = true;

  BeamEnergy E;
  double bend = 0.0;
  for (int j = 1; j + 1 < n; ++j) {
    if (brk[j - 1] || brk[j]) continue;
    const double d = second_difference(state.v, j, dx);
    bend += bending_weight(j, n, dx) * d * d;
  }
  E.elastic = prob.prefactor * prob.a * bend;
  E.jump = prob.beta * static_cast<double>(state.jump_points().size());
  const Eigen::VectorXd t = trapezoid_weights(n, dx);
  E.fidelity = prob.fidelity_weight *
               (t.array() * ((state.u - prob.g_u).array().square() + (state.v - prob.g_v).array().square())).sum();
  E.total = E.elastic + E.jump + E.fidelity;
  return E;
}

BeamState solve_beam(const BeamProblem& prob, int max_jumps) {
  validate(prob);
  if (prob.fidelity_weight == 0.0) fail(ErrorKind::TrivialProblem, "fidelity_weight = 0 makes the zero state optimal");
  const int n = prob.n();
  max_jumps = std::clamp(max_jumps, 0, n - 1);

  SegmentDp dp(prob, max_jumps);
  const std::vector<int> S = dp.select();

  Eigen::VectorXd u(n), v(n);
  int s = 0;
  std::vector<int> ends = S;
  ends.push_back(n - 1);
  for (int e : ends) {
    u.segment(s, e - s + 1).setConstant(weighted_mean(prob.g_u, dp.trapezoid(), s, e));
    v.segment(s, e - s + 1) = solve_v_block(prob, dp.trapezoid(), s, e);
    s = e + 1;
  }
  return classify(std::move(u), std::move(v), S);
}

BeamState brute_force_beam(const BeamProblem& prob, int max_jumps) {
  validate(prob);
  const int n = prob.n();
  if (n > 16) fail(ErrorKind::TooLarge, "brute force is limited to 16 nodes");
  if (prob.fidelity_weight == 0.0) fail(ErrorKind::TrivialProblem, "fidelity_weight = 0 makes the zero state optimal");
  const int nk = n - 1;
  max_jumps = std::clamp(max_jumps, 0, nk);
  const double dx = prob.dx();
  const double fw = prob.fidelity_weight;
  const double kappa = prob.prefactor * prob.a;
  const Eigen::VectorXd t = trapezoid_weights(n, dx);

  // min x^T H x - 2 b^T x + c subject to C x = 0, via the full KKT system
  auto constrained_min = [&](const Eigen::MatrixXd& H, const Eigen::VectorXd& b, double c,
                             const std::vector<Eigen::VectorXd>& rows, Eigen::VectorXd& x) {
    const int m = static_cast<int>(H.rows());
    const int r = static_cast<int>(rows.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + r, m + r);
    K.topLeftCorner(m, m) = 2.0 * H;
    for (int i = 0; i < r; ++i) {
      K.block(m + i, 0, 1, m) = rows[i].transpose();
      K.block(0, m + i, m, 1) = rows[i];
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + r);
    rhs.head(m) = 2.0 * b;
    x = K.fullPivLu().solve(rhs).head(m);
    return x.dot(H * x) - 2.0 * b.dot(x) + c;
  };

  // every subset of interfaces with at most max_jumps elements
  std::vector<std::vector<int>> subsets;
  std::vector<int> cur;
  std::function<void(int)> grow = [&](int from) {
    subsets.push_back(cur);
    if (static_cast<int>(cur.size()) == max_jumps) return;
    for (int k = from; k < nk; ++k) {
      cur.push_back(k);
      grow(k + 1);
      cur.pop_back();
    }
  };
  grow(0);

  // u part: piecewise constant between u jumps
  struct Part {
    double cost;
    Eigen::VectorXd x;
  };
  std::map<std::vector<int>, Part> u_parts;
  {
    const Eigen::MatrixXd H = fw * Eigen::MatrixXd(t.asDiagonal());
    const Eigen::VectorXd b = fw * t.cwiseProduct(prob.g_u);
    const double c = fw * t.dot(prob.g_u.cwiseProduct(prob.g_u));
    for (const auto& ju : subsets) {
      const std::vector<bool> jump = mark(ju, nk);
      std::vector<Eigen::VectorXd> rows;
      for (int k = 0; k < nk; ++k) {
        if (jump[k]) continue;
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        row(k) = 1.0;
        row(k + 1) = -1.0;
        rows.push_back(row);
      }
      Part p;
      p.cost = constrained_min(H, b, c, rows, p.x);
      u_parts[ju] = std::move(p);
    }
  }

  // v part: each jump point is a v' jump (kind 1) or a v jump (kind 2)
  struct VLabel {
    std::vector<int> points;
    std::vector<int> kinds;
  };
  std::vector<VLabel> v_labels;
  for (const auto& jv : subsets) {
    const int m = static_cast<int>(jv.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
      VLabel lab{jv, std::vector<int>(m)};
      for (int i = 0; i < m; ++i) lab.kinds[i] = (mask >> i) & 1 ? 2 : 1;
      v_labels.push_back(std::move(lab));
    }
  }
  std::vector<Part> v_parts;
  for (const VLabel& lab : v_labels) {
    const std::vector<bool> brk = mark(lab.points, nk);
    Eigen::MatrixXd H = fw * Eigen::MatrixXd(t.asDiagonal());
    for (int j = 1; j + 1 < n; ++j) {
      if (brk[j - 1] || brk[j]) continue;
      Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
      d(j - 1) = 1.0;
      d(j) = -2.0;
      d(j + 1) = 1.0;
      d /= dx * dx;
      H += kappa * bending_weight(j, n, dx) * d * d.transpose();
    }
    const Eigen::VectorXd b = fw * t.cwiseProduct(prob.g_v);
    const double c = fw * t.dot(prob.g_v.cwiseProduct(prob.g_v));
    std::vector<Eigen::VectorXd> rows;
    for (std::size_t i = 0; i < lab.points.size(); ++i) {
      if (lab.kinds[i] != 1) continue;
      const int k = lab.points[i];
      // v_k + (v_k - v_{k-1})/2 = v_{k+1} + (v_{k+1} - v_{k+2})/2 with one-node pieces held constant
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      if (k >= 1 && !brk[k - 1]) {
        row(k) += 1.5;
        row(k - 1) -= 0.5;
      } else {
        row(k) += 1.0;
      }
      if (k + 2 <= n - 1 && !brk[k + 1]) {
        row(k + 1) -= 1.5;
        row(k + 2) += 0.5;
      } else {
        row(k + 1) -= 1.0;
      }
      rows.push_back(row);
    }
    Part p;
    p.cost = constrained_min(H, b, c, rows, p.x);
    v_parts.push_back(std::move(p));
  }

  // combine, keeping the documented order: energy, jump count, leftmost positions
  double best_e = kInf;
  std::vector<int> best_S;
  const Eigen::VectorXd* best_u = nullptr;
  const Eigen::VectorXd* best_v = nullptr;
  struct Candidate {
    double e;
    std::vector<int> S;
    const Eigen::VectorXd* u;
    const Eigen::VectorXd* v;
  };
  std::vector<Candidate> cands;
  for (const auto& [ju, up] : u_parts) {
    for (std::size_t i = 0; i < v_labels.size(); ++i) {
      std::vector<int> S;
      std::set_union(ju.begin(), ju.end(), v_labels[i].points.begin(), v_labels[i].points.end(), std::back_inserter(S));
      if (static_cast<int>(S.size()) > max_jumps) continue;
      const double e = up.cost + v_parts[i].cost + prob.beta * static_cast<double>(S.size());
      cands.push_back({e, std::move(S), &up.x, &v_parts[i].x});
      best_e = std::min(best_e, e);
    }
  }
  const double tol = 1e-10 * (1.0 + std::abs(best_e));
  bool found = false;
  double chosen_e = kInf;
  for (const Candidate& c : cands) {
    if (c.e > best_e + tol) continue;
    const bool better = !found || c.S.size() < best_S.size() ||
                        (c.S.size() == best_S.size() && (c.S < best_S || (c.S == best_S && c.e < chosen_e)));
    if (better) {
      found = true;
      chosen_e = c.e;
      best_S = c.S;
      best_u = c.u;
      best_v = c.v;
    }
  }
  return classify(*best_u, *best_v, best_S);
}

}  // namespace thinbeam
