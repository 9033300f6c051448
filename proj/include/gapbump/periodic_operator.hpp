#pragma once

#include "gapbump/torus.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gapbump {

/// One term a*cos(2π n x_axis) of a trigonometric potential.
struct CosineTerm {
  int axis = 0;
  int harmonic = 1;
  double amplitude = 0.0;

  bool operator==(const CosineTerm&) const = default;
};

/// A bounded potential, 1-periodic in every coordinate.
///
/// Cosine potentials are -shift + Σ a cos(2π n x_axis); tabulated ones hold
/// M (1D) or M*M (2D) samples of one unit cell and are read back by nearest
/// sample, then shifted.
class PeriodicPotential {
 public:
  enum class Kind { Cosine, Tabulated };

  /// A Σ_axes cos(2π x_i) - shift.
  static PeriodicPotential cosine(double amplitude, double shift, int dim = 1);
  static PeriodicPotential from_terms(std::vector<CosineTerm> terms, double shift);
  static PeriodicPotential constant(double value);
  static PeriodicPotential tabulated(int dim, int samples_per_cell, std::vector<double> table,
                                     double shift = 0.0);

  double operator()(const std::array<double, 2>& x, int dim) const;
  GridField on_grid(const TorusDomain& domain) const;

  /// Returns V - extra.
  PeriodicPotential shifted(double extra) const;

  Kind kind() const { return kind_; }
  double shift() const { return shift_; }
  const std::vector<CosineTerm>& terms() const { return terms_; }
  int table_samples() const { return table_samples_; }
  int table_dim() const { return table_dim_; }
  const std::vector<double>& table() const { return table_; }
  /// Upper bound on |V| (exact for tables).
  double sup_norm() const;
  std::string fingerprint() const;

 private:
  Kind kind_ = Kind::Cosine;
  std::vector<CosineTerm> terms_;
  double shift_ = 0.0;
  int table_dim_ = 1;
  int table_samples_ = 0;
  std::vector<double> table_;
};

/// Open interval (-alpha, beta) around 0 that contains no eigenvalue.
/// alpha is +inf when the operator is positive definite.
struct SpectralGap {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Threshold below which 0 is treated as an eigenvalue.
inline constexpr double kInvertibilityFloor = 1e-10;
/// 0 is certified to lie in a gap when min |λ_i| exceeds this.
inline constexpr double kGapCertification = 1e-6;

/// Complete eigendecomposition of the discretised L = -Δ + V on a torus.
///
/// Besides eigenpairs it caches the maps to and from "energy coordinates"
/// a_i = sqrt|λ_i| <u, φ_i>, in which (·,·)_k is the Euclidean product and
/// the quadratic part of J_k is ½ Σ sign(λ_i) a_i².
class SpectralDecomposition {
 public:
  SpectralDecomposition(const TorusDomain& domain, Eigen::VectorXd eigenvalues,
                        Eigen::MatrixXd eigenfields);

  const TorusDomain& domain() const { return domain_; }
  std::size_t size() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// Column i holds φ_i on the grid, L²(Q_k)-normalised.
  const Eigen::MatrixXd& eigenfields() const { return fields_; }
  GridField eigenfield(std::size_t i) const;

  /// j(k): number of negative eigenvalues, i.e. dim Y_k.
  int negative_count() const { return negative_count_; }
  const std::optional<SpectralGap>& gap() const { return gap_; }
  /// Throws NotInvertible unless 0 is in a certified gap.
  void require_gap() const;

  const Eigen::VectorXd& signs() const { return signs_; }
  const Eigen::VectorXd& sqrt_abs() const { return sqrt_abs_; }

  /// c_i = <u, φ_i>_{L²}.
  Eigen::VectorXd coefficients(const GridField& u) const;
  GridField from_coefficients(const Eigen::VectorXd& c) const;

  Eigen::VectorXd to_energy_coords(const GridField& u) const;
  Eigen::VectorXd to_energy_coords(const Eigen::VectorXd& grid_values) const;
  Eigen::VectorXd grid_values(const Eigen::VectorXd& energy_coords) const;
  GridField field(const Eigen::VectorXd& energy_coords) const;
  /// Grid-space synthesis matrix B with u = B a (B = Φ |Λ|^{-1/2}).
  const Eigen::MatrixXd& synthesis() const { return synthesis_; }

 private:
  TorusDomain domain_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd fields_;
  Eigen::VectorXd signs_;
  Eigen::VectorXd sqrt_abs_;
  Eigen::MatrixXd analysis_;   // a = analysis_ * u
  Eigen::MatrixXd synthesis_;  // u = synthesis_ * a
  int negative_count_ = 0;
  std::optional<SpectralGap> gap_;
};

/// Assembles the pseudospectral -Δ+V and diagonalises it densely.
/// Throws NotInvertible if some |λ_i| < kInvertibilityFloor.
SpectralDecomposition diagonalize(const PeriodicPotential& potential, const TorusDomain& domain);

struct BandInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Floquet–Bloch bands of the 1D discretised operator on the unit cell.
struct BandStructure {
  std::vector<double> thetas;
  Eigen::MatrixXd values;  // quasimomenta x bands
  std::vector<BandInterval> bands;

  /// Open gaps between consecutive bands (empty intervals dropped).
  std::vector<BandInterval> gaps() const;
  /// True if lambda lies in some band within tol.
  bool contains(double lambda, double tol) const;
};

/// θ is sampled at 2π q / quasimomenta, q = 0 .. quasimomenta-1. The plane
/// waves per θ are those with wavenumber in [-πM, πM), matching the torus
/// discretisation exactly.
BandStructure band_structure(const PeriodicPotential& potential, int bands, int quasimomenta,
                             int samples_per_cell = 16);

/// Midpoint of the first open Bloch gap of `potential`.
double first_gap_midpoint(const PeriodicPotential& potential, int samples_per_cell = 16,
                          int quasimomenta = 64);

struct EnergyCoefficients {
  Eigen::VectorXd coefficients;  // c_i = <u, φ_i>
  const SpectralDecomposition* decomposition = nullptr;

  double norm_squared() const;
  double norm() const;
};

EnergyCoefficients to_energy(const GridField& u, const SpectralDecomposition& s);
GridField from_energy(const EnergyCoefficients& e);

/// (u, v)_k and ||u||_k.
double energy_inner(const GridField& u, const GridField& v, const SpectralDecomposition& s);
double energy_norm(const GridField& u, const SpectralDecomposition& s);

/// P_k: projection onto Y_k = span{φ_i : λ_i < 0}.
GridField project_negative(const GridField& u, const SpectralDecomposition& s);
/// T_k: projection onto Z_k = span{φ_i : λ_i > 0}.
GridField project_positive(const GridField& u, const SpectralDecomposition& s);

/// ∫ |∇u|² + V u², evaluated directly on the grid.
double quadratic_form(const GridField& u, const PeriodicPotential& potential);

struct NormEquivalence {
  double c_low = 0.0;
  double c_high = 0.0;
};

/// min / max of ||u||_k / ||u||_{H¹} over every eigenfield and `trials`
/// white-noise fields.
NormEquivalence norm_equivalence_report(const SpectralDecomposition& s, int trials,
                                        std::mt19937_64& rng);

}  // namespace gapbump
