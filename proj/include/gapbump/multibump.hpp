#pragma once

#include "gapbump/reduction.hpp"

#include <string>
#include <vector>

namespace gapbump {

/// Σ_i u₀(· - b_i) on `domain`. A base from a smaller torus is first cut off
/// and embedded. Throws CentersCollide on repeated centers.
GridField superpose(const GridField& base, const std::vector<LatticeVector>& centers,
                    const TorusDomain& domain);

/// Smallest distance between two centers (minimum image on the torus).
double center_separation(const std::vector<LatticeVector>& centers, int cells);

/// Translated copies of a base solution and its kernel on one torus.
struct MultibumpProblem {
  Problem problem;                      // J on the gluing torus
  SolutionRecord base;
  std::vector<LatticeVector> centers;
  double l_sep = 0.0;
  double base_energy = 0.0;             // J(u₀) on the base torus
  int kernel_dim = 0;                   // l per bump
  double eta = 0.0;
  double delta0 = 0.0;
  Eigen::VectorXd anchor;               // u_K in energy coordinates
  Eigen::MatrixXd joint_kernel;         // m·l translated kernel fields, energy coordinates

  Eigen::MatrixXd gram() const { return joint_kernel.transpose() * joint_kernel; }
};

/// Assembles the problem. `target` must live on a torus at least as large as
/// the base one; kernel fields are embedded like the base.
MultibumpProblem make_multibump(const KernelBasis& kb, const std::vector<LatticeVector>& centers,
                                const Problem& target);

struct MultibumpOptions {
  SolverOptions solver;
  /// Floor for the separation of distinct centers.
  double min_separation = 4.0;
  /// Gradient tolerance for Newton on the reduced function.
  double reduced_tol = 1e-9;
  /// Step for second differences of the reduced gradient.
  double reduced_fd_step = 1e-4;
  int reduced_max_iters = 50;
};

struct MultibumpResult {
  GridField field;
  double residual = 0.0;
  double energy = 0.0;
  double correction_norm = 0.0;         // ||w_K(x^K)||_k
  double reduced_coords_norm = 0.0;     // |x^K|
  Eigen::VectorXd reduced_coords;
  double phase1_residual = 0.0;
  double drift = 0.0;                   // ||polished - assembled||_k
  std::vector<double> bump_energies;
  int reduced_iters = 0;
  int polish_iters = 0;
};

/// (1) projected Newton for w_K ⊥ joint kernel, (2) Newton on the reduced
/// function H from x = 0 inside the δ-ball, (3) unprojected Newton polish.
///
/// Throws SeparationTooSmall, NoConvergence (naming the phase) or
/// GluingUnstable when the polish drifts further than deflation_radius.
MultibumpResult solve_multibump(const MultibumpProblem& mp, const MultibumpOptions& opts = {});

/// Energy density summed over the nearest-center partition of the torus.
std::vector<double> bump_energy_split(const GridField& u, const std::vector<LatticeVector>& centers,
                                      const Problem& problem);

struct SweepRow {
  int separation = 0;
  bool ok = false;
  std::string error;
  double correction_norm = 0.0;
  double reduced_coords_norm = 0.0;
  double residual = 0.0;
  double energy_gap = 0.0;              // J(u) - m·J(u₀)
};

/// Centers for m bumps spaced by `separation` along the first axis,
/// symmetric about 0.
std::vector<LatticeVector> line_centers(int m, int separation, int dim);

/// One solve_multibump per separation, run concurrently; failed rows are
/// marked rather than aborting the sweep.
std::vector<SweepRow> separation_sweep(const KernelBasis& kb, int m, const std::vector<int>& separations,
                                       const Problem& target, const MultibumpOptions& opts = {});

}  // namespace gapbump
