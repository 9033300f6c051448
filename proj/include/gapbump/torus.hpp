#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace gapbump {

/// Uniform periodic grid on the cube Q_k = (-k/2, k/2)^N.
///
/// Grid point i on an axis sits at x = -k/2 + i/M, i = 0 .. k*M-1. Fields are
/// stored row-major, so in 2D the flat index is ix * (k*M) + iy.
struct TorusDomain {
  int dim = 1;
  int cells = 1;
  int samples_per_cell = 16;

  TorusDomain() = default;
  TorusDomain(int dim, int cells, int samples_per_cell);

  int points_per_axis() const { return cells * samples_per_cell; }
  std::size_t size() const;
  double spacing() const { return 1.0 / samples_per_cell; }
  /// Quadrature weight of one grid point, spacing^N.
  double cell_weight() const;
  double volume() const;

  double coordinate(int index) const;
  /// Coordinates of a flat grid index, length dim.
  std::array<double, 2> point(std::size_t flat) const;

  std::string fingerprint() const;

  friend bool operator==(const TorusDomain&, const TorusDomain&) = default;
};

using LatticeVector = std::vector<int>;

class GridField {
 public:
  GridField() = default;
  explicit GridField(const TorusDomain& domain);
  GridField(const TorusDomain& domain, Eigen::VectorXd values);

  /// Samples fn at every grid point.
  static GridField sample(const TorusDomain& domain,
                          const std::function<double(const std::array<double, 2>&)>& fn);

  const TorusDomain& domain() const { return domain_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  bool all_finite() const;

  GridField operator+(const GridField& other) const;
  GridField operator-(const GridField& other) const;
  GridField operator*(double s) const;
  friend GridField operator*(double s, const GridField& f) { return f * s; }

 private:
  TorusDomain domain_;
  Eigen::VectorXd values_;
};

void require_same_domain(const TorusDomain& a, const TorusDomain& b, const char* what);

/// spacing^N * sum of samples (periodic trapezoidal rule).
double integrate(const GridField& f);
double l2_inner(const GridField& f, const GridField& g);
double l2_norm(const GridField& f);

/// f(. + b): circular shift by b_i * M samples on axis i, b reduced mod k.
GridField translate(const GridField& f, const LatticeVector& b);

/// Pseudospectral -d^2/dx^2 on one periodic axis of n points and length L.
/// Symmetric circulant; the Nyquist mode carries wavenumber^2 = (pi n / L)^2.
Eigen::MatrixXd second_derivative_matrix(int n, double length);
/// Pseudospectral d/dx on one axis (Nyquist mode dropped).
Eigen::MatrixXd first_derivative_matrix(int n, double length);
/// Trigonometric interpolation from n to n_fine equispaced points on [x0, x0+L).
Eigen::MatrixXd interpolation_matrix(int n, int n_fine);

/// Full -Δ on the domain (Kronecker sum in 2D).
Eigen::MatrixXd laplacian_matrix(const TorusDomain& domain);

/// Spectral partial derivative along one axis.
GridField partial_derivative(const GridField& f, int axis);
/// ||f||_{H^1(Q_k)}, gradient evaluated spectrally.
double h1_norm(const GridField& f);

/// Cutoff χ_k: ≡ 1 on Q_{k-1}, 0 on ∂Q_k, per-axis quintic smoothstep in between
/// (C², |χ'| ≤ 15/4).
double cutoff_profile(double x, int cells);
double cutoff_profile_derivative(double x, int cells);
GridField cutoff_field(const TorusDomain& domain);

/// Multiplies f by χ_k and zero-extends onto the larger centred torus.
GridField embed_with_cutoff(const GridField& f, const TorusDomain& target);

}  // namespace gapbump
