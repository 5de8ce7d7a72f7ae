#include "thinbeam/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "thinbeam/error.hpp"
#include "thinbeam/thin_film.hpp"

namespace thinbeam {

namespace {

constexpr double kGaussX[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
constexpr double kGaussW[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};

// int_a^b f over m equal panels, 5 Gauss points each.
template <class F>
double gauss(double a, double b, int m, F f) {
  CompensatedSum s;
  const double w = (b - a) / m;
  for (int p = 0; p < m; ++p) {
    const double c = a + (p + 0.5) * w;
    for (int k = 0; k < 5; ++k) s.add(0.5 * w * kGaussW[k] * f(c + 0.5 * w * kGaussX[k]));
  }
  return s.value();
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double max_frequency(const LimitConfig& y) {
  double f = 0.0;
  for (const SineMode& s : y.sines) f = std::max(f, std::abs(s.frequency));
  return f;
}

// Panels per unit length that resolve the sine modes.
int panels(double length, const LimitConfig& y) {
  return std::max(4, static_cast<int>(std::ceil(length * (4.0 + 2.0 * max_frequency(y)))));
}

// Breakpoints 0 = b_0 < ... < b_m = L including the interior points given.
std::vector<double> with_ends(const std::vector<double>& interior, double L) {
  std::vector<double> b{0.0};
  b.insert(b.end(), interior.begin(), interior.end());
  b.push_back(L);
  return b;
}

}  // namespace

void LimitConfig::validate() const {
  if (!(L > 0.0)) fail(ErrorKind::ConfigError, "limit configuration needs L > 0");
  if (u_values.size() != u_breaks.size() + 1) fail(ErrorKind::ConfigError, "u needs one value per piece");
  auto inside = [&](double x) { return x > 0.0 && x < L; };
  for (std::size_t k = 0; k < u_breaks.size(); ++k) {
    if (!inside(u_breaks[k])) fail(ErrorKind::ConfigError, "u jump outside (0, L)");
    if (k > 0 && !(u_breaks[k] > u_breaks[k - 1])) fail(ErrorKind::ConfigError, "u jumps must increase");
    if (u_values[k] == u_values[k + 1]) fail(ErrorKind::ConfigError, "u jump of size zero");
  }
  for (const auto* list : {&v_jumps, &vprime_jumps, &curvature_jumps})
    for (const Kink& k : *list) {
      if (!inside(k.x)) fail(ErrorKind::ConfigError, "v offset outside (0, L)");
      if (k.size == 0.0) fail(ErrorKind::ConfigError, "v offset of size zero");
    }
}

double LimitConfig::u(double x) const {
  const auto it = std::upper_bound(u_breaks.begin(), u_breaks.end(), x);
  return u_values[static_cast<std::size_t>(it - u_breaks.begin())];
}

double LimitConfig::v(double x) const {
  double s = 0.0, p = 1.0;
  for (double c : poly) s += c * p, p *= x;
  for (const SineMode& m : sines) s += m.amplitude * std::sin(m.frequency * x + m.phase);
  for (const Kink& k : v_jumps)
    if (x >= k.x) s += k.size;
  for (const Kink& k : vprime_jumps)
    if (x > k.x) s += k.size * (x - k.x);
  for (const Kink& k : curvature_jumps)
    if (x > k.x) s += 0.5 * k.size * (x - k.x) * (x - k.x);
  return s;
}

double LimitConfig::dv(double x) const {
  double s = 0.0, p = 1.0;
  for (std::size_t k = 1; k < poly.size(); ++k) s += static_cast<double>(k) * poly[k] * p, p *= x;
  for (const SineMode& m : sines) s += m.amplitude * m.frequency * std::cos(m.frequency * x + m.phase);
  for (const Kink& k : vprime_jumps)
    if (x >= k.x) s += k.size;
  for (const Kink& k : curvature_jumps)
    if (x > k.x) s += k.size * (x - k.x);
  return s;
}

double LimitConfig::d2v(double x) const {
  double s = 0.0, p = 1.0;
  for (std::size_t k = 2; k < poly.size(); ++k) s += static_cast<double>(k * (k - 1)) * poly[k] * p, p *= x;
  for (const SineMode& m : sines) s -= m.amplitude * m.frequency * m.frequency * std::sin(m.frequency * x + m.phase);
  for (const Kink& k : curvature_jumps)
    if (x >= k.x) s += k.size;
  return s;
}

std::vector<double> LimitConfig::jump_points() const {
  std::vector<double> p = u_breaks;
  for (const Kink& k : v_jumps) p.push_back(k.x);
  for (const Kink& k : vprime_jumps) p.push_back(k.x);
  return sorted_unique(p);
}

std::vector<double> LimitConfig::v_breaks() const {
  std::vector<double> p;
  for (const Kink& k : v_jumps) p.push_back(k.x);
  for (const Kink& k : vprime_jumps) p.push_back(k.x);
  return sorted_unique(p);
}

std::vector<double> LimitConfig::curvature_breaks() const {
  std::vector<double> p = v_breaks();
  for (const Kink& k : curvature_jumps) p.push_back(k.x);
  return sorted_unique(p);
}

double curvature_l2_squared(const LimitConfig& y) {
  y.validate();
  const std::vector<double> b = with_ends(y.curvature_breaks(), y.L);
  CompensatedSum s;
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    const double len = b[k + 1] - b[k];
    s.add(gauss(b[k], b[k + 1], panels(len, y), [&](double x) {
      const double c = y.d2v(x);
      return c * c;
    }));
  }
  return s.value();
}

double limit_energy(const LimitConfig& y, double a, double beta) {
  return a / 24.0 * curvature_l2_squared(y) + beta * static_cast<double>(y.jump_points().size());
}

namespace {

struct Mollifier {
  const LimitConfig& y;
  int n;
  std::vector<double> pieces;  // 0, v breaks, L
  std::vector<double> cbreaks;

  double f(double x) const { return -y.d2v(x); }

  // -v'' just inside [s0, s1] at its endpoint x.
  double f_inside(double x, double s0, double s1) const {
    const double nudge = 1e-12 * (1.0 + y.L);
    return f(std::clamp(x, s0 + nudge, s1 - nudge));
  }

  std::vector<double> nodal(double width) const {
    const double dx = y.L / n;
    std::vector<double> g(n + 1);
    for (int k = 0; k <= n; ++k) {
      const double x = k * dx;
      // the piece containing x; a node on a break belongs to the piece on its right
      std::size_t p = static_cast<std::size_t>(std::upper_bound(pieces.begin(), pieces.end(), x) - pieces.begin());
      p = std::clamp<std::size_t>(p, 1, pieces.size() - 1);
      const double s0 = pieces[p - 1], s1 = pieces[p];
      if (width < 1e-3 * dx) {
        g[k] = f_inside(x, s0, s1);
        continue;
      }
      const double a = std::max(s0, x - 6.0 * width), b = std::min(s1, x + 6.0 * width);
      // split the window at curvature breaks so each panel sees a smooth integrand
      std::vector<double> cuts{a};
      for (double c : cbreaks)
        if (c > a && c < b) cuts.push_back(c);
      cuts.push_back(b);
      CompensatedSum num, den;
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double len = cuts[c + 1] - cuts[c];
        if (len <= 0.0) continue;
        const int m = std::max(8, static_cast<int>(std::ceil(4.0 * len / width))) + panels(len, y);
        num.add(gauss(cuts[c], cuts[c + 1], m, [&](double t) {
          const double r = (t - x) / width;
          return std::exp(-0.5 * r * r) * f_inside(t, s0, s1);
        }));
        den.add(gauss(cuts[c], cuts[c + 1], m, [&](double t) {
          const double r = (t - x) / width;
          return std::exp(-0.5 * r * r);
        }));
      }
      g[k] = num.value() / den.value();
    }
    return g;
  }

  // |f - g|_{L^2(0, L)}. g is linear between nodes except in cells holding a
  // v break, where each side continues the line of its own neighbouring cell.
  double error(const std::vector<double>& g) const {
    const double dx = y.L / n;
    auto line = [&](int k0, double t) {
      // line through nodes k0, k0 + 1 evaluated at t
      k0 = std::clamp(k0, 0, n - 1);
      return g[k0] + (g[k0 + 1] - g[k0]) * (t - k0 * dx) / dx;
    };
    CompensatedSum s;
    for (int k = 0; k < n; ++k) {
      const double x0 = k * dx, x1 = (k + 1) * dx;
      double split = -1.0;
      for (std::size_t p = 1; p + 1 < pieces.size(); ++p)
        if (pieces[p] > x0 && pieces[p] < x1) split = pieces[p];
      std::vector<double> cuts{x0};
      for (double c : cbreaks)
        if (c > x0 && c < x1) cuts.push_back(c);
      cuts.push_back(x1);
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        s.add(gauss(cuts[c], cuts[c + 1], 1 + panels(cuts[c + 1] - cuts[c], y) / 4, [&](double t) {
          double lin;
          if (split < 0.0)
            lin = line(k, t);
          else
            lin = t < split ? (k > 0 ? line(k - 1, t) : g[k]) : (k + 1 < n ? line(k + 1, t) : g[k + 1]);
          const double d = f(t) - lin;
          return d * d;
        }));
      }
    }
    return std::sqrt(std::max(0.0, s.value()));
  }
};

}  // namespace

SmoothedCurvature smooth_second_derivative(const LimitConfig& y, double eta, int n) {
  y.validate();
  if (!(eta > 0.0)) fail(ErrorKind::ConfigError, "eta must be positive");
  if (n < 2) fail(ErrorKind::ConfigError, "mollification grid needs n >= 2");
  const Mollifier M{y, n, with_ends(y.v_breaks(), y.L), y.curvature_breaks()};
  SmoothedCurvature out;
  auto attempt = [&](double w) {
    SmoothedCurvature s;
    s.g = M.nodal(w);
    s.width = w;
    s.error = M.error(s.g);
    return s;
  };
  SmoothedCurvature widest = attempt(y.L);
  if (widest.error <= eta) return widest;
  const double dx = y.L / n;
  double lo = 1e-3 * dx;
  SmoothedCurvature best = attempt(lo);
  if (best.error > eta) {
    SmoothedCurvature sampled = attempt(0.0);
    if (sampled.error <= eta) return sampled;
    const double norm = std::sqrt(curvature_l2_squared(y));
    if (norm <= eta) {
      out.g.assign(n + 1, 0.0);
      out.error = norm;
      out.zero_fallback = true;
      return out;
    }
    fail(ErrorKind::CannotAchieveEta, "grid too coarse for the requested eta; refine the grid");
  }
  double hi = y.L;
  for (int it = 0; it < 40 && hi / lo > 1.0 + 1e-6; ++it) {
    const double mid = std::sqrt(lo * hi);
    SmoothedCurvature s = attempt(mid);
    if (s.error <= eta) {
      lo = mid;
      best = std::move(s);
    } else {
      hi = mid;
    }
  }
  return best;
}

RecoveryField build_recovery(const LimitConfig& y, double h, double eta, const ElasticTensor& C, int nx, int ny,
                             bool with_correction) {
  y.validate();
  if (!(h > 0.0 && h <= 1.0)) fail(ErrorKind::InvalidThickness, "thickness h must lie in (0, 1]");
  const double dx = y.L / nx;
  for (double p : y.jump_points()) {
    const double t = p / dx;
    if (std::abs(t - std::round(t)) < 1e-9) fail(ErrorKind::GridMismatch, "jump point lies on a grid column");
  }
  coercivity_constant(C);
  const BendingResult bend = bending_constant(C);
  SmoothedCurvature g;
  if (with_correction) g = smooth_second_derivative(y, eta, nx);
  RecoveryField out{DisplacementField(nx, ny, y.L, h), {}, g};
  DisplacementField& f = out.field;
  for (int i = 0; i <= nx; ++i) {
    const double x1 = f.node_x1(i);
    const double u = y.u(x1), v = y.v(x1), dv = y.dv(x1);
    const double gi = with_correction ? g.g[i] : 0.0;
    for (int j = 0; j <= ny; ++j) {
      const double x2 = f.node_x2(j);
      const double q = 0.5 * x2 * x2 * h * h * gi;
      f.at(i, j) = Eigen::Vector2d(u - x2 * h * dv + q * bend.b_star, v + q * bend.c_star);
    }
  }
  for (double p : y.jump_points()) out.crack.add({p, -0.5}, {p, 0.5});
  return out;
}

std::vector<SweepRow> gamma_sweep(const LimitConfig& y, const std::vector<double>& h_list,
                                  const std::vector<double>& eta_list, const ElasticTensor& C, double beta, int nx,
                                  int ny) {
  if (h_list.empty() || eta_list.empty()) fail(ErrorKind::ConfigError, "sweep lists must be nonempty");
  std::vector<std::pair<double, double>> pairs;
  if (h_list.size() == eta_list.size()) {
    for (std::size_t k = 0; k < h_list.size(); ++k) pairs.emplace_back(h_list[k], eta_list[k]);
  } else {
    for (double h : h_list)
      for (double eta : eta_list) pairs.emplace_back(h, eta);
  }
  const double a = bending_constant(C).a;
  const double limit = limit_energy(y, a, beta);
  std::vector<SweepRow> rows;
  for (const auto& [h, eta] : pairs) {
    const RecoveryField r = build_recovery(y, h, eta, C, nx, ny);
    const EnergyBreakdown e = evaluate_Eh(r.field, r.crack, C, beta);
    SweepRow row;
    row.h = h;
    row.eta = eta;
    row.energy = e.total;
    row.elastic = e.elastic;
    row.jump = e.jump;
    row.limit = limit;
    row.gap = std::abs(e.total - limit);
    row.relative_gap = limit != 0.0 ? row.gap / std::abs(limit) : row.gap;
    for (int i = 0; i <= nx; ++i) {
      const Eigen::Vector2d lim(y.u(r.field.node_x1(i)), y.v(r.field.node_x1(i)));
      for (int j = 0; j <= ny; ++j) row.sup_error = std::max(row.sup_error, (r.field.at(i, j) - lim).cwiseAbs().maxCoeff());
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace thinbeam
