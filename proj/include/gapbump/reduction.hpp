#pragma once

#include "gapbump/solver.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gapbump {

/// Near-kernel Λ of the Hessian at a base critical point, with the
/// invertibility bound eta on the complement Π.
struct KernelBasis {
  Problem problem;
  SolutionRecord base;
  Eigen::VectorXd base_coords;     // energy coordinates of the base field
  double tau = 1e-4;
  double scale = 0.0;              // max |μ| over the Hessian spectrum
  Eigen::MatrixXd basis;           // columns e_j in energy coordinates, orthonormal
  Eigen::VectorXd kernel_values;   // Hessian eigenvalues belonging to e_j
  double eta = 0.0;
  double delta0 = 0.0;             // 0.3 / eta

  int dim() const { return static_cast<int>(basis.cols()); }
  GridField field(int j) const;
  std::vector<GridField> fields() const;
};

/// Kernel = eigenpairs with |μ| < tau·max|μ|. With forced_dim set, the
/// forced_dim eigenpairs of smallest |μ| are taken instead (any splitting
/// with invertible projected Hessian supports the reduction).
///
/// Throws AllKernel if nothing would be left for the complement.
KernelBasis detect_kernel(const SolutionRecord& rec, const Problem& problem, double tau = 1e-4,
                          std::optional<int> forced_dim = std::nullopt);

struct ReducedSample {
  Eigen::VectorXd x;               // h = Σ x_j e_j
  GridField w;
  Eigen::VectorXd w_coords;
  double I = 0.0;
  Eigen::VectorXd dI;              // (∇J(u + w + h), e_j)_k
  int newton_iters = 0;
  double projected_residual = 0.0;
  double eta_estimate = 0.0;       // largest ||(projected Hessian)^{-1}|| seen
};

/// Solves Π ∇J(anchor + E x + w) = 0 for w ⊥ span E by projected Newton.
///
/// `directions` (columns, energy coordinates) need not be orthonormal; dI is
/// taken against them. The iteration aborts with NoConvergence if the
/// inverse bound exceeds 2·eta_ref.
ReducedSample reduced_evaluate(const EnergyFunctional& J, const Eigen::VectorXd& anchor,
                               const Eigen::MatrixXd& directions, const Eigen::VectorXd& x,
                               double eta_ref, const SolverOptions& opts = {},
                               const Eigen::VectorXd* warm_start = nullptr);

/// Throws OutOfBall if |x| > delta0. A warm start (energy coordinates of a
/// nearby w) only changes the iteration count.
ReducedSample solve_w(const KernelBasis& kb, const Eigen::VectorXd& x, const SolverOptions& opts = {},
                      const Eigen::VectorXd* warm_start = nullptr);
/// h given as a field of Λ.
ReducedSample solve_w(const KernelBasis& kb, const GridField& h, const SolverOptions& opts = {});

/// Independent samples evaluated concurrently; order is preserved.
std::vector<ReducedSample> solve_w_batch(const KernelBasis& kb, const std::vector<Eigen::VectorXd>& xs,
                                         const SolverOptions& opts = {});

struct OriginClassification {
  int morse_index = 0;
  bool degenerate = false;
  Eigen::MatrixXd reduced_hessian;
  Eigen::VectorXd reduced_eigenvalues;
};

/// Second differences of I on a centred 3- or 5-point stencil of spacing
/// grid_radius. Degenerate if some reduced eigenvalue is below 1e-6·scale.
/// Rejects l = 0.
OriginClassification classify_origin(const KernelBasis& kb, double grid_radius, int stencil = 3,
                                     const SolverOptions& opts = {});

struct SuperpositionGap {
  double max_c0_gap = 0.0;
  double max_c1_gap = 0.0;
  std::vector<double> c0_gaps;
  std::vector<double> c1_gaps;
  Eigen::MatrixXd gram;            // joint kernel Gram matrix
};

/// Compares the joint reduced function of two translates with Σ I(x_i).
/// Each sample point has length 2l: x_1 followed by x_2.
SuperpositionGap superposition_compare(const KernelBasis& kb, const std::vector<LatticeVector>& centers,
                                       const std::vector<Eigen::VectorXd>& sample_points,
                                       const SolverOptions& opts = {});

}  // namespace gapbump
