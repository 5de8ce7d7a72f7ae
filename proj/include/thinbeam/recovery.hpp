#pragma once

#include <vector>

#include "thinbeam/field.hpp"
#include "thinbeam/tensor.hpp"

namespace thinbeam {

struct SineMode {
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

/// Offset attached at a point of (0, L).
struct Kink {
  double x = 0.0;
  double size = 0.0;
};

/// Limit displacement y(x1) = (u(x1), v(x1)) of the thin-beam class.
///
/// u is piecewise constant. v is a smooth base (polynomial plus sine modes)
/// plus offsets: size * H(x - p) for v-jumps, size * (x - p)_+ for jumps of v',
/// and size * (x - p)_+^2 / 2 for jumps of v'' (v'' may jump freely; such
/// points are not part of the crack).
struct LimitConfig {
  double L = 1.0;
  std::vector<double> u_breaks;
  /// One value per piece: u_breaks.size() + 1 entries.
  std::vector<double> u_values{0.0};
  std::vector<double> poly;
  std::vector<SineMode> sines;
  std::vector<Kink> v_jumps;
  std::vector<Kink> vprime_jumps;
  std::vector<Kink> curvature_jumps;

  /// Throws ConfigError for points outside (0, L), zero offsets or a wrong
  /// number of u values.
  void validate() const;

  double u(double x) const;
  double v(double x) const;
  double dv(double x) const;
  double d2v(double x) const;

  /// Sorted union of the u, v and v' jump points.
  std::vector<double> jump_points() const;
  /// Sorted union of the v and v' jump points (breaks of the mollification).
  std::vector<double> v_breaks() const;
  /// Points where v'' may be discontinuous (v, v' and v'' offsets).
  std::vector<double> curvature_breaks() const;
};

/// a / 24 int_0^L |v''|^2 + beta #(J_u u J_v u J_v').
double limit_energy(const LimitConfig& y, double a, double beta);

/// int_0^L |v''|^2 by piecewise Gauss-Legendre quadrature.
double curvature_l2_squared(const LimitConfig& y);

struct SmoothedCurvature {
  /// Nodal values on x_k = k L / n, k = 0..n; linear in between except in
  /// cells holding a point of J_v u J_v', where each side extends its own
  /// neighbouring cell.
  std::vector<double> g;
  double width = 0.0;
  double error = 0.0;
  /// True if g = 0 was returned because no mollification met eta on this grid.
  bool zero_fallback = false;
};

/// g_eta with |-v'' - g_eta|_{L^2(0,L)} <= eta. g_eta is the
/// normalized Gaussian mollification of -v'' inside each piece between points
/// of J_v u J_v', sampled at the nodes; the width is the largest one (found by
/// bisection) that keeps the error below eta. If no width works, g = 0 is
/// used when |v''| <= eta, and CannotAchieveEta is thrown otherwise.
SmoothedCurvature smooth_second_derivative(const LimitConfig& y, double eta, int n);

struct RecoveryField {
  DisplacementField field;
  CrackSet crack;
  SmoothedCurvature curvature;
};

/// Samples y_h = (u - x2 h v', v) + 1/2 x2^2 h^2 g_eta (b*, c*) on an nx x ny
/// grid of the strip, with (b*, c*) from bending_constant(C). The crack is a
/// full-height vertical segment at every point of J_u u J_v u J_v'. With
/// with_correction = false the g_eta term is dropped (first-order ansatz).
/// Throws GridMismatch if a jump point lies on a grid column and NotCoercive
/// for a tensor that is not coercive.
RecoveryField build_recovery(const LimitConfig& y, double h, double eta, const ElasticTensor& C, int nx, int ny,
                             bool with_correction = true);

struct SweepRow {
  double h = 0.0;
  double eta = 0.0;
  double energy = 0.0;
  double elastic = 0.0;
  double jump = 0.0;
  double limit = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double sup_error = 0.0;
};

/// E_h of the recovery field against E_0(y) for every pair (h_list[k],
/// eta_list[k]) when both lists have the same length, and for all pairs
/// otherwise. Throws ConfigError on empty lists.
std::vector<SweepRow> gamma_sweep(const LimitConfig& y, const std::vector<double>& h_list,
                                  const std::vector<double>& eta_list, const ElasticTensor& C, double beta, int nx,
                                  int ny);

}  // namespace thinbeam
