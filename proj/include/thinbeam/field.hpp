#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace thinbeam {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1] in rescaled coordinates.
struct Box {
  double x0 = 0.0, x1 = 1.0, y0 = -0.5, y1 = 0.5;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(const Eigen::Vector2d& p, double tol = 0.0) const {
    return p(0) >= x0 - tol && p(0) <= x1 + tol && p(1) >= y0 - tol && p(1) <= y1 + tol;
  }
};

/// The rescaled strip (0, L) x (-1/2, 1/2).
inline Box strip_box(double L) { return {0.0, L, -0.5, 0.5}; }

/// Nodal 2-vector field on an (nx+1) x (ny+1) grid over a box of the rescaled
/// strip, with the thickness h carried along. The box is the whole strip unless
/// a smaller window is given; energies of a windowed field assume zero strain
/// outside the window.
class DisplacementField {
 public:
  DisplacementField() = default;
  /// Throws InvalidField for nx, ny < 2 or L <= 0, InvalidThickness unless 0 < h <= 1.
  DisplacementField(int nx, int ny, double L, double h);
  DisplacementField(int nx, int ny, double L, double h, const Box& box);

  /// Samples f at every node; f receives rescaled coordinates.
  static DisplacementField sample(int nx, int ny, double L, double h, const Box& box,
                                  const std::function<Eigen::Vector2d(double, double)>& f);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double L() const { return L_; }
  double h() const { return h_; }
  const Box& box() const { return box_; }
  double dx() const { return box_.width() / nx_; }
  double dy() const { return box_.height() / ny_; }
  double node_x1(int i) const { return box_.x0 + i * dx(); }
  double node_x2(int j) const { return box_.y0 + j * dy(); }

  Eigen::Vector2d& at(int i, int j) { return values_[index(i, j)]; }
  const Eigen::Vector2d& at(int i, int j) const { return values_[index(i, j)]; }

  /// Node values in row-major order (x1 fastest).
  const std::vector<Eigen::Vector2d>& values() const { return values_; }
  std::vector<Eigen::Vector2d>& values() { return values_; }

  /// Throws InvalidField if some value is not finite.
  void check_finite() const;

  /// Rescaled gradient (d1 y, h^-1 d2 y) of the bilinear interpolant at the
  /// centre of cell (i, j); columns are the two partial derivatives.
  Eigen::Matrix2d cell_gradient(int i, int j) const;

  /// Mean of the four corner values of cell (i, j).
  Eigen::Vector2d cell_mean(int i, int j) const;

  /// Integral of one component over the box by the cell-mean rule.
  double integrate(int component) const;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * (nx_ + 1) + i; }

  int nx_ = 0, ny_ = 0;
  double L_ = 1.0, h_ = 1.0;
  Box box_;
  std::vector<Eigen::Vector2d> values_;
};

/// Crack segment in rescaled coordinates with unit normal.
struct CrackSegment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
  Eigen::Vector2d normal;

  double length() const { return (b - a).norm(); }
};

struct CrackSet {
  std::vector<CrackSegment> segments;

  /// Appends the segment a-b with normal (b - a)^perp / |b - a|.
  void add(const Eigen::Vector2d& a, const Eigen::Vector2d& b);
  void append(const CrackSet& other);

  bool empty() const { return segments.empty(); }
  /// Euclidean length in rescaled coordinates.
  double length() const;
  /// Sum of |(nu1, nu2 / h)| times length; equals the unrescaled length over h.
  double anisotropic_measure(double h) const;
  /// Length after mapping (x1, x2) -> (x1, h x2).
  double unrescaled_length(double h) const;
};

/// Part of the segment p-q inside the closed box (Liang-Barsky clipping).
std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_segment(const Eigen::Vector2d& p,
                                                                         const Eigen::Vector2d& q,
                                                                         const Box& box);

/// Per-cell crack information on a grid.
struct CutCell {
  bool cut = false;
  /// Normal and midpoint of the longest crack piece inside the cell.
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  Eigen::Vector2d midpoint = Eigen::Vector2d::Zero();
  double piece = 0.0;
};

/// Cells of an nx x ny grid over the box whose interior meets the crack.
std::vector<CutCell> cut_cells(const Box& box, int nx, int ny, const CrackSet& crack);

}  // namespace thinbeam
