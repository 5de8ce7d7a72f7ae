#pragma once

#include <Eigen/Dense>
#include <vector>

namespace thinbeam {

/// Discrete 1D limit problem on n uniform nodes x_i = i L / (n - 1).
///
/// Interface k sits between nodes k and k + 1. The elastic term is
/// prefactor * a * sum_j w_j |D2_j v|^2 over interior nodes j whose second
/// difference does not straddle a break of v, with w_j = dx except for the two
/// end nodes 1 and n - 2, which carry 1.5 dx (2 dx when n = 3) so that the
/// weights add up to L.
struct BeamProblem {
  double a = 1.0;
  double beta = 1.0;
  double L = 1.0;
  Eigen::VectorXd g_u;
  Eigen::VectorXd g_v;
  double fidelity_weight = 1.0;
  /// Multiplies a in the bending term.
  double prefactor = 1.0 / 24.0;

  int n() const { return static_cast<int>(g_u.size()); }
  double dx() const { return L / (n() - 1); }
};

/// Jump sets hold sorted interface indices. A J_v interface separates the
/// values of v; a J_vprime interface keeps v continuous at the interface
/// midpoint (one-sided linear extrapolation) and separates only the slope.
struct BeamState {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  std::vector<int> J_u;
  std::vector<int> J_v;
  std::vector<int> J_vprime;

  /// Sorted union of the three jump sets.
  std::vector<int> jump_points() const;
};

struct BeamEnergy {
  double elastic = 0.0;
  double jump = 0.0;
  double fidelity = 0.0;
  double total = 0.0;
};

/// Throws GridMismatch if sizes differ or a jump index is out of range.
BeamEnergy beam_energy(const BeamState& state, const BeamProblem& prob);

/// Global minimizer over states with at most max_jumps jump points.
///
/// Every jump point may as well sever u, v and v' at once: that costs the same
/// beta and removes constraints, so the search runs over jump point sets only
/// and each segment splits into a weighted mean for u and a banded SPD solve
/// for v. Ties within 1e-10 (1 + energy) go to fewer jumps, then to the
/// lexicographically smallest set of positions. Jump types are then read off
/// the minimizer. Throws TrivialProblem when fidelity_weight = 0.
BeamState solve_beam(const BeamProblem& prob, int max_jumps);

/// Exhaustive search over all labelings of the interfaces (u jump or not,
/// times none / v' jump / v jump) with at most max_jumps jump points, each
/// solved as one constrained quadratic problem. Throws TooLarge if n > 16.
BeamState brute_force_beam(const BeamProblem& prob, int max_jumps);

/// Trapezoid weights of the node grid.
Eigen::VectorXd trapezoid_weights(int n, double dx);

/// Weight of the second difference at interior node j.
double bending_weight(int j, int n, double dx);

}  // namespace thinbeam
