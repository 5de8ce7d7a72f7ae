#pragma once

#include <Eigen/Dense>
#include <vector>

namespace thinbeam {

/// Bar of a truss between the points p and q (dimension 2 or 3).
struct SegmentPair {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
};

/// Line through `point` with unit direction `dir`.
struct OrientedLine {
  Eigen::VectorXd point;
  Eigen::VectorXd dir;
};

/// Infinitesimal rigid motion x -> A x + b with A skew.
struct RigidMotion {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// Number of coordinates of Skew(d) x R^d, i.e. d(d+1)/2.
int rigid_dimension(int d);

/// Coordinates of a skew matrix in the basis E_ij = e_i (x) e_j - e_j (x) e_i,
/// i < j, ordered (12), (13), (23). In 2D this is the single entry a of
/// a [[0,1],[-1,0]].
Eigen::VectorXd skew_coordinates(const Eigen::MatrixXd& A);
Eigen::MatrixXd skew_from_coordinates(const Eigen::VectorXd& a, int d);

/// Coordinate vector (skew coordinates of A, then b).
Eigen::VectorXd rigid_coordinates(const RigidMotion& m);
RigidMotion rigid_from_coordinates(const Eigen::VectorXd& x, int d);

/// Matrix of (A,b) -> ((A p_i + b) . (p_i - q_i))_i in the coordinates above.
/// Row i is |d_i| times the line row of the line through p_i along d_i = p_i - q_i.
/// Throws DegeneratePair if some p_i = q_i.
Eigen::MatrixXd truss_matrix(const std::vector<SegmentPair>& pairs);

/// det of truss_matrix. Throws WrongCount unless there are d(d+1)/2 pairs.
double truss_det(const std::vector<SegmentPair>& pairs);

/// Line through p along (p - q)/|p - q|.
OrientedLine line_of(const SegmentPair& pair);

/// Row of the truss matrix for a unit-length bar on the line. Independent of
/// the point chosen on the line.
Eigen::VectorXd line_row(const OrientedLine& line);

/// det of the matrix of line rows. Throws WrongCount unless N = d(d+1)/2.
double line_function_f(const std::vector<OrientedLine>& lines);

/// v = w and x - z parallel to v, up to 1e-12.
bool same_line(const OrientedLine& a, const OrientedLine& b);

/// |f| for three planar lines via |p - q| |sin alpha| |sin beta|, where L1 must
/// be transversal to L2 and L3 unless all three are parallel (then 0).
/// Throws NeedsReordering otherwise.
double f2d_closed_form(const OrientedLine& L1, const OrientedLine& L2, const OrientedLine& L3);

/// |f| for six space lines whose first three share a direction v1, factored
/// through the projection onto the plane orthogonal to v1.
/// Throws NotParallelTriple or DegenerateProjection.
double f3d_factorization(const std::vector<OrientedLine>& lines);

/// Solves truss_matrix(pairs) x = measurements for the rigid motion x.
/// Throws SingularTruss when |det| <= 1e-10 (max row norm)^N.
RigidMotion solve_rigid_from_truss(const std::vector<SegmentPair>& pairs,
                                   const Eigen::VectorXd& measurements);

}  // namespace thinbeam
