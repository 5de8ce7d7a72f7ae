#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "thinbeam/field.hpp"
#include "thinbeam/tensor.hpp"

namespace thinbeam {

/// Nodal damage on the same grid as the displacement (1 intact, 0 cracked).
struct DamageField {
  int nx = 0, ny = 0;
  Eigen::VectorXd phi;
  double epsilon = 0.0;
  double k_eps = 1e-6;

  double at(int i, int j) const { return phi(static_cast<Eigen::Index>(j) * (nx + 1) + i); }
};

/// Default regularization length 4 max(dx, h dy).
double default_epsilon(const DisplacementField& grid);

/// Damage field with phi = 1 on the grid of `field`.
DamageField intact_damage(const DisplacementField& field, double epsilon, double k_eps = 1e-6);

struct AtEnergy {
  double bulk = 0.0;
  double surface = 0.0;
  double fidelity = 0.0;
  double total = 0.0;
};

/// Ambrosio-Tortorelli energy on bilinear elements with 2 x 2 Gauss points:
/// h^-2 int (phi^2 + k) 1/2 grad_h y : C grad_h y
///   + beta int (1 - phi)^2 / (4 eps) + eps |grad_h phi|^2
///   + fidelity sum_nodes w_n |y_n - g_n|^2   (trapezoid node weights).
/// Throws ShapeMismatch if the grids differ.
AtEnergy at_energy(const DisplacementField& y, const DamageField& d, const ElasticTensor& C, double beta,
                   double fidelity, const DisplacementField& g);

/// Exact minimizer in y for fixed damage (sparse SPD system, preconditioned CG
/// to relative residual 1e-10). Throws SingularSystem when fidelity <= 0 and
/// SolverDiverged if CG stalls.
DisplacementField elastic_step(const DamageField& d, const DisplacementField& g, const ElasticTensor& C,
                               double fidelity);

/// Minimizer in phi over [0, 1] for fixed y. The unconstrained minimizer is
/// taken when it lies in [0, 1]; otherwise its clamp is refined by projected
/// Gauss-Seidel, and `previous` is used as the starting point instead if that
/// gives lower energy.
DamageField damage_step(const DisplacementField& y, const DamageField& previous, const ElasticTensor& C, double beta);

struct PhaseFieldProblem {
  DisplacementField g;
  ElasticTensor C;
  double beta = 1.0;
  double fidelity = 1.0;
  /// 0 selects default_epsilon.
  double epsilon = 0.0;
  double k_eps = 1e-6;
  int max_iter = 500;
  double tol = 1e-8;
  /// Start from phi drawn uniformly in [0.9, 1] instead of phi = 1.
  bool random_init = false;
  std::uint64_t seed = 0;
};

struct SolveReport {
  std::vector<double> energy_trace;
  int iterations = 0;
  bool converged = false;
};

struct PhaseFieldResult {
  DisplacementField y;
  DamageField damage;
  SolveReport report;
  AtEnergy energy;
};

/// Alternates exact elastic and damage steps until the relative energy
/// decrease over one iteration drops below tol.
PhaseFieldResult minimize_alternating(const PhaseFieldProblem& problem);

/// Crack set along the valleys of phi below the threshold. Valley normals come
/// from the nodal Hessian of phi; valley points are linked row by row (steep
/// valleys) or column by column (flat valleys) into polylines.
CrackSet extract_crack(const DamageField& d, const Box& box, double threshold);

struct SharpScanEntry {
  double x1 = 0.0;
  double energy = 0.0;
};

/// E_h of y with a full-height vertical crack through each cell centre.
std::vector<SharpScanEntry> sharp_vertical_scan(const DisplacementField& y, const ElasticTensor& C, double beta);

/// Field that is g_left for x1 < split and g_right beyond.
DisplacementField split_strip_target(int nx, int ny, double L, double h, double split, const Eigen::Vector2d& g_left,
                                     const Eigen::Vector2d& g_right);

}  // namespace thinbeam
