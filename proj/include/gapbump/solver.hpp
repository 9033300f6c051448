#pragma once

#include "gapbump/functional.hpp"
#include "gapbump/periodic_operator.hpp"
#include "gapbump/torus.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gapbump {

struct SolverOptions {
  double newton_tol = 1e-10;
  int max_iters = 200;
  double backtrack = 0.5;
  double armijo = 1e-4;
  double tikhonov = 1e-8;
  double tikhonov_max = 1e-2;
  double deflation_radius = 0.5;
  /// Iterates with ||u||_k below this count as collapsed onto u = 0.
  double collapse_norm = 1e-3;
  /// Relative threshold for counting near-kernel Hessian directions.
  double kernel_tau = 1e-4;

  void validate() const;
};

/// Everything that defines J_k on one torus. The functional points into the
/// decomposition, so both live behind shared_ptr and the struct is cheap to copy.
struct Problem {
  PeriodicPotential potential;
  Nonlinearity nonlinearity;
  std::shared_ptr<const SpectralDecomposition> spectrum;
  std::shared_ptr<const EnergyFunctional> functional;

  const TorusDomain& domain() const { return spectrum->domain(); }
  const EnergyFunctional& J() const { return *functional; }
  const SpectralDecomposition& S() const { return *spectrum; }
};

Problem make_problem(const TorusDomain& domain, const PeriodicPotential& potential,
                     const Nonlinearity& nl);

struct SolutionRecord {
  GridField field;
  double energy = 0.0;
  double residual = 0.0;
  double norm_k = 0.0;
  int negative_hessian_count = 0;
  int kernel_dim_estimate = 0;
  int iterations = 0;
  std::vector<double> residual_history;
  std::string domain_fingerprint;
  std::string potential_fingerprint;
  std::string nonlinearity_fingerprint;
};

/// Gaussian amplitude·exp(-|x-center|²/(2 width²)) (minimum-image distance on
/// the torus) projected onto Z_k.
GridField initial_ansatz(const std::vector<double>& center, double width, double amplitude,
                         const SpectralDecomposition& s);

/// Damped Newton on ∇J_k = 0 in energy coordinates with a sign-preserving
/// Tikhonov ridge and Armijo backtracking on ½||∇J||_k².
///
/// Throws NoConvergence or TrivialCollapse.
SolutionRecord find_critical_point(const GridField& init, const Problem& problem,
                                   const SolverOptions& opts = {});

/// Fills energy, residual, Morse data and fingerprints for a field.
SolutionRecord describe(const GridField& u, const Problem& problem, const SolverOptions& opts = {});

struct Thresholds {
  double eps1 = 10.0;  // lower bound for ||u||_k
  double eps2 = 50.0;  // lower bound for J_k(u)
};

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct ValidationReport {
  std::vector<Check> checks;
  bool passed() const;
  const Check& at(const std::string& name) const;
};

/// ||u||_k >= eps1, J_k(u) >= eps2, residual <= tol and |J(u(·+b)) - J(u)|
/// <= 1e-12 max(1,|J|) for three random lattice shifts.
ValidationReport validate_solution(const SolutionRecord& rec, const Thresholds& thresholds,
                                   const Problem& problem, std::mt19937_64& rng,
                                   const SolverOptions& opts = {});

struct SphereLevel {
  double radius = 0.0;
  double level = 0.0;      // minimised J on the sphere
  double best_sample = 0.0;
  GridField minimizer;
};

/// Estimates inf { J_k(z) : z ∈ Z_k, ||z||_k = r } by random sampling
/// followed by projected gradient descent on the sphere.
SphereLevel sphere_level(const Problem& problem, double r, int samples, std::mt19937_64& rng);

struct LinkingBound {
  double rho = 0.0;
  double bound = 0.0;          // max of J_k over M_k
  double boundary_sup = 0.0;   // max of J_k over ∂M_k
  GridField maximizer;
};

/// Maximises J_k over M_k = {y + t z : y ∈ Y_k, t >= 0, ||y + t z||_k <= rho}
/// by projected gradient ascent, and J_k over ∂M_k.
LinkingBound linking_upper_bound(const Problem& problem, const GridField& z, double rho, int samples,
                                 std::mt19937_64& rng);

/// Doubles rho from rho0 until the sup of J_k over ∂M_k is at most tol.
/// Throws NoConvergence after max_doublings.
LinkingBound linking_radius_scan(const Problem& problem, const GridField& z, double rho0, int samples,
                                 std::mt19937_64& rng, double tol = 1e-6, int max_doublings = 12);

/// min_b ||u - v(·+b)||_k over all k^N lattice shifts; ties go to the
/// lexicographically smallest b.
struct OrbitDistance {
  double distance = 0.0;
  LatticeVector shift;
};
OrbitDistance orbit_distance(const GridField& u, const GridField& v, const SpectralDecomposition& s);
bool geometrically_equivalent(const GridField& u, const GridField& v, const SpectralDecomposition& s,
                              double radius);

/// Newton from randomised ansätze; keeps results farther than
/// deflation_radius from every known solution modulo lattice translations.
std::vector<SolutionRecord> deflated_search(const std::vector<SolutionRecord>& known, int tries,
                                            const Problem& problem, std::mt19937_64& rng,
                                            const SolverOptions& opts = {});

/// Same filter applied to Newton runs from the given starting fields.
std::vector<SolutionRecord> deflated_search_from(const std::vector<SolutionRecord>& known,
                                                 const std::vector<GridField>& starts,
                                                 const Problem& problem, const SolverOptions& opts = {});

}  // namespace gapbump
