#pragma once

#include "gapbump/periodic_operator.hpp"
#include "gapbump/torus.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gapbump {

/// f(x,t) = h(x)|t|^{p-2} t with primitive F = h|t|^p / p.
///
/// q and gamma are the exponents of the growth and Ambrosetti–Rabinowitz type
/// conditions; for a pure power gamma = p makes γF = t f an identity.
struct Nonlinearity {
  PeriodicPotential weight = PeriodicPotential::constant(1.0);
  double p = 4.0;
  double q = 3.0;
  double gamma = 4.0;
  /// Evaluate nonlinear terms on a 3/2-refined grid instead of by collocation.
  bool dealias = false;

  /// Rejects p < 3, q outside (2, p], gamma <= 2.
  void validate() const;

  double f(double h, double t) const;
  double primitive(double h, double t) const;
  double derivative(double h, double t) const;

  std::string fingerprint() const;
};

/// J_k together with its derivatives, bound to one decomposition.
///
/// All heavy lifting is done in energy coordinates a (see
/// SpectralDecomposition), where the Riesz gradient is
///   g_i = sign(λ_i) a_i - <f(·,u), φ_i> / sqrt|λ_i|
/// and the Hessian is the symmetric matrix S - B^T diag(w f'(u)) B.
///
/// The decomposition is held by reference and must outlive the functional.
class EnergyFunctional {
 public:
  EnergyFunctional(const SpectralDecomposition& spectrum, Nonlinearity nl);

  const SpectralDecomposition& spectrum() const { return *spectrum_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  std::size_t size() const { return spectrum_->size(); }

  double energy(const Eigen::VectorXd& a) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& a) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& a) const;
  Eigen::VectorXd hessvec(const Eigen::VectorXd& a, const Eigen::VectorXd& v) const;

  /// ∫ F(x, u) on the evaluation grid.
  double potential_energy(const Eigen::VectorXd& a) const;
  /// Hessian spectrum at a, ascending.
  Eigen::VectorXd hessian_eigenvalues(const Eigen::VectorXd& a) const;

  /// Pointwise ½ u·Lu - F(x,u) on the torus grid; sums (times the cell
  /// weight) to J_k under collocation.
  GridField energy_density(const Eigen::VectorXd& a) const;

 private:
  Eigen::VectorXd eval_values(const Eigen::VectorXd& a) const;

  const SpectralDecomposition* spectrum_;
  Nonlinearity nl_;
  Eigen::MatrixXd eval_synthesis_;  // values on the evaluation grid = eval_synthesis_ * a
  Eigen::VectorXd eval_weight_;     // quadrature weight times h(x) per evaluation point
  double quad_weight_ = 0.0;
};

double evaluate_J(const GridField& u, const SpectralDecomposition& s, const Nonlinearity& nl);
/// Riesz representative of J_k'(u) in (·,·)_k.
GridField gradient(const GridField& u, const SpectralDecomposition& s, const Nonlinearity& nl);
GridField hessvec(const GridField& u, const GridField& v, const SpectralDecomposition& s,
                  const Nonlinearity& nl);

/// ∫ |f'(x, Σu_i) - Σ f'(x, u_i)| |φ| |ψ| dx.
double interaction_defect(const std::vector<GridField>& bumps, const GridField& phi,
                          const GridField& psi, const Nonlinearity& nl);

/// γ ∫F(x,u) and ∫ u f(x,u), the two sides of the superquadraticity condition.
std::pair<double, double> superquadratic_sides(const GridField& u, const Nonlinearity& nl);

}  // namespace gapbump
