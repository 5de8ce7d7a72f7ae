#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "thinbeam/field.hpp"
#include "thinbeam/truss.hpp"

namespace thinbeam {

struct CompactnessOptions {
  /// Largest admissible delta.
  double delta0 = 1.0 / 16;
  /// Constant of the perimeter budget of omega_z.
  double korn_constant = 8.0;
  /// C(eta, N) = bridge_constant (N + 2) / eta^2.
  double bridge_constant = 8.0;
};

/// Rectangle Q_z = (z - h, z + h) x (-1/2, 1/2) in rescaled coordinates.
struct Rectangle {
  double z = 0.0;
  bool good = false;
  /// Unrescaled crack length inside Q_z.
  double crack_length = 0.0;
  /// Cells of the grid whose centres lie in Q_z (row-major cell indices).
  std::vector<int> cells;
  /// Cells of Q_z within one cell (4-neighbourhood) of a cut cell.
  std::vector<int> omega;
  /// Unrescaled perimeter of omega inside the strip.
  double omega_perimeter = 0.0;
  bool korn_budget_ok = true;
  /// Set by fit_rigid_motions when omega covers every cell of Q_z.
  bool empty = false;
  /// Rigid-motion coordinates (a, b1, b2) with A = a [[0, 1], [-1, 0]] acting
  /// on unrescaled points (x1, h x2).
  Eigen::Vector3d motion = Eigen::Vector3d::Zero();
  double residual = 0.0;
  bool fitted = false;
};

struct GoodBadPartition {
  double h = 1.0;
  double delta = 0.0;
  int nx = 0, ny = 0;
  Box box;
  CompactnessOptions options;
  std::vector<Rectangle> rects;
  /// Per-cell flags, row-major.
  std::vector<bool> cut;
  std::vector<bool> near_crack;
  CrackSet crack;
};

/// Flags every Q_z, z = h, 2h, ..., (floor(L/h) - 1) h, as good when the
/// unrescaled crack length in Q_z is <= delta h (exact clipping). Throws
/// ConfigError unless 0 < delta <= delta0, InvalidField for windowed fields,
/// and GridMismatch when a rectangle holds fewer than two cell columns.
GoodBadPartition classify_rectangles(const DisplacementField& field, const CrackSet& crack, double delta,
                                     const CompactnessOptions& options = {});

/// Least-squares rigid motion on every good Q_z minus omega_z, minimizing
/// h^-2 |w - A x - b|^2 + |grad w - A|^2 by the cell-midpoint rule. Good
/// rectangles whose cells are all excluded are marked empty and turned bad.
void fit_rigid_motions(GoodBadPartition& partition, const DisplacementField& field);

/// Design matrix and right-hand side of the fit on one rectangle, rows weighted
/// by the square root of the cell area. Unknowns are (a, c1, c2) for the motion
/// A (X - centre) + c, so b = c - A centre.
struct FitSystem {
  Eigen::MatrixXd M;
  Eigen::VectorXd r;
  Eigen::Vector2d centre = Eigen::Vector2d::Zero();
};
FitSystem fit_system(const GoodBadPartition& partition, const Rectangle& rect, const DisplacementField& field);

enum class BridgeVerdict { Bridged, Severed, Boundary, NoSegmentsFound };
std::string to_string(BridgeVerdict v);

/// Maximal run of bad rectangles first..last (indices into rects).
struct BridgeResult {
  int first = 0, last = 0;
  /// Flanking good rectangles, -1 when the run touches an end of the strip.
  int left = -1, right = -1;
  BridgeVerdict verdict = BridgeVerdict::Boundary;
  /// Unrescaled crack length in conv(Q_z u Q_z').
  double hull_crack = 0.0;
  /// Crack-avoiding bars in unrescaled coordinates: two horizontal, one diagonal.
  std::vector<SegmentPair> bars;
  double truss_det = 0.0;
  /// Coordinates of R_z - R_z' from the fits and from the bar elongations.
  Eigen::Vector3d delta_fit = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta_truss = Eigen::Vector3d::Zero();
  /// Unrescaled int |e(w)|^2 over the uncut cells of the hull.
  double hull_energy = 0.0;
  /// C(eta, N) h^-1 sqrt(hull_energy); certified means |delta_fit| <= bound.
  double bound = 0.0;
  bool certified = false;
};

/// Bridge verdicts for every maximal run of bad rectangles. A run whose hull
/// carries unrescaled crack length >= (1 - eta) h is severed. Otherwise two
/// crack-free horizontal bars at the extreme free heights (separation at least
/// eta h / 2) and one crack-free bar of slope eta^2 / (N + 2) between the
/// flanking centres are sought, the truss is solved for R_z - R_z' from the
/// bar elongations, and |R_z - R_z'| <= C(eta, N) h^-1 sqrt(hull energy) is
/// checked. Throws ConfigError unless 0 < eta < 1.
std::vector<BridgeResult> bridge_check(const GoodBadPartition& partition, const DisplacementField& field, double eta);

/// Only the clipping part of the bridge test: severed iff the unrescaled crack
/// length in (x0, x1) x (-1/2, 1/2) is >= (1 - eta) h.
bool hull_severed(const CrackSet& crack, double x0, double x1, double h, double eta);

struct PiecewiseRigidFields {
  /// Good centres and their motions (a, b1, b2).
  std::vector<double> knots;
  std::vector<Eigen::Vector3d> values;
  /// Jump points: centres of severed runs.
  std::vector<double> jumps;
  double L = 1.0;
  /// Piece averages of (A_h, b_h) between consecutive jump points.
  std::vector<Eigen::Vector3d> averages;
  int m_cert = 0;

  /// (A_h, b_h) at x1; at a jump point the value on the right.
  Eigen::Vector3d evaluate(double x1) const;
  /// (Abar, bbar) at x1.
  Eigen::Vector3d evaluate_bar(double x1) const;
  int jump_count() const { return static_cast<int>(jumps.size()); }
};

/// Interpolates the good-rectangle motions: linear between good centres and
/// across bridged runs, a jump at the centre of each severed run, constant
/// beyond the first and last good centre. M_cert is floor of the anisotropic
/// crack measure. Throws NoGoodRectangles and CertificateViolation.
PiecewiseRigidFields build_piecewise_fields(const GoodBadPartition& partition,
                                            const std::vector<BridgeResult>& bridges);

struct CompactnessResult {
  GoodBadPartition partition;
  std::vector<BridgeResult> bridges;
  PiecewiseRigidFields fields;
  /// y_h - Abar (x1, h x2) - bbar at every node.
  DisplacementField residual;
  /// Cells of the rescaled exceptional set.
  std::vector<bool> omega;
  double omega_area = 0.0;
  /// int over the boundary of omega inside the strip of |(nu1, nu2 / h)|.
  double omega_perimeter = 0.0;
  /// Largest |cell mean of the residual| over cells outside omega.
  double residual_max_off_omega = 0.0;
};

/// classify, fit, bridge and interpolate in one pass, then the residual field
/// and the exceptional set: omega_z, bad rectangles, and the cells beyond
/// (floor(L/h) - 1) h.
CompactnessResult compactness_extract(const DisplacementField& field, const CrackSet& crack, double delta, double eta,
                                      const CompactnessOptions& options = {});

/// L2 distance over the cells outside omega between the residual and y,
/// after removing the best limit rigid motion (c1, c2 + a x1).
double distance_modulo_rigid(const CompactnessResult& result, const std::function<Eigen::Vector2d(double)>& y);

struct ProfileFit {
  /// Cell-column centres.
  std::vector<double> x;
  std::vector<double> kappa;
  std::vector<double> T;
  /// False where fewer than two cells of the column are outside omega.
  std::vector<bool> valid;
  /// L2 norm of W minus the per-column fit over the cells used.
  double residual = 0.0;
};

/// W = h^-1 d1 y1 on the cells outside omega, fitted per column by
/// -x2 kappa + T. Throws ShapeMismatch if omega does not match the grid.
ProfileFit profile_fit(const DisplacementField& field, const std::vector<bool>& omega, double h);

/// Bilinear interpolation of the nodal field at a rescaled point of its box.
Eigen::Vector2d interpolate(const DisplacementField& field, double x1, double x2);

}  // namespace thinbeam
