#pragma once

#include "thinbeam/field.hpp"
#include "thinbeam/tensor.hpp"

namespace thinbeam {

/// How cells crossed by the crack enter the bulk quadrature.
enum class CutCellPolicy {
  /// Drop the cell.
  Exclude,
  /// Split the cell at the crack; each side takes the gradient of the
  /// uncut neighbour on its side (left/right for steep cracks, below/above for
  /// flat ones). A side without such a neighbour is dropped.
  OneSided,
};

struct EnergyBreakdown {
  double elastic = 0.0;
  double jump = 0.0;
  double total = 0.0;
};

/// h^-2 int 1/2 grad_h y : C grad_h y over the field box by the cell-midpoint
/// rule, plus beta times the anisotropic crack measure. Throws
/// CrackOutsideDomain if a segment leaves the closed strip.
EnergyBreakdown evaluate_Eh(const DisplacementField& field, const CrackSet& crack, const ElasticTensor& C,
                            double beta, CutCellPolicy policy = CutCellPolicy::OneSided);

/// Unrescaled elastic energy int_{Omega_h} 1/2 ew : C ew, i.e. h^3 times the elastic part of E_h.
inline double unrescaled_elastic(const EnergyBreakdown& e, double h) { return h * h * h * e.elastic; }

/// Unrescaled integral of |ew|^2 over the field box, with the same quadrature
/// as evaluate_Eh.
double sym_strain_integral(const DisplacementField& field, const CrackSet& crack,
                           CutCellPolicy policy = CutCellPolicy::OneSided);

struct FieldWithCrack {
  DisplacementField field;
  CrackSet crack;
};

/// Counterexample field: zero left of L/2, h^-1 (x - t_h)^perp right of L/2 and
/// h^-1 (v^perp (x) v)(x - t_h) on the triangle with apex t_h = (L/2, h/2 - h^4)
/// and top corners (L/2 -+ h^4, h/2), in unrescaled coordinates. The field is
/// sampled on the triangle's bounding box (n x n cells); outside that box its
/// symmetric gradient vanishes. The crack is {L/2} x (-1/2, 1/2 - h^3) in
/// rescaled coordinates. Throws InvalidThickness unless h^4 < h/2 and 0 < h <= 1.
FieldWithCrack triangle_counterexample(double h, double L, int n = 512);

/// Exact field of triangle_counterexample at a rescaled point.
Eigen::Vector2d triangle_field(double h, double L, double x1, double x2);

/// y = -h^-5 e2 inside a regular polygon with `segments` sides inscribed in the
/// rescaled disc B((L/2, 0), h^2), zero outside, sampled on the box
/// [L/2 - 2h^2, L/2 + 2h^2] x [-2h^2, 2h^2] with n x n cells. The crack is the
/// polygon. Throws BallTooLarge unless h^2 < min(L/2, 1/2)/2.
FieldWithCrack escaping_ball_example(double h, double L, int n = 512, int segments = 10000);

/// Rigid field y = A (x1, h x2) + b on the whole strip.
DisplacementField rigid_field(int nx, int ny, double L, double h, const Eigen::Matrix2d& A, const Eigen::Vector2d& b);

/// Vertical segment {x1} x (-1/2, 1/2).
CrackSet vertical_crack(double x1);

}  // namespace thinbeam
