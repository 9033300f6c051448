#pragma once

#include "gapbump/solver.hpp"

#include <Eigen/Dense>

#include <random>

namespace fixtures {

using namespace gapbump;

/// Midpoint of the first Bloch gap of 30 cos(2πx) at M = 16.
inline constexpr double kMidgap = 6.995076895021275;
inline constexpr double kAmplitude = 30.0;

inline PeriodicPotential default_potential(int dim = 1) {
  return PeriodicPotential::cosine(kAmplitude, kMidgap, dim);
}

inline Problem default_problem(int cells, int samples = 16) {
  return make_problem(TorusDomain(1, cells, samples), default_potential(), Nonlinearity{});
}

/// The on-site solution reached from a Gaussian of amplitude 6 at the origin.
inline SolutionRecord ground(const Problem& p) {
  return find_critical_point(initial_ansatz({0.0}, 0.7, 6.0, p.S()), p);
}

inline GridField random_field(const TorusDomain& d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  return GridField(d, v);
}

/// Smooth random field: a few low Fourier modes with random amplitudes.
inline GridField smooth_random_field(const TorusDomain& d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  const double two_pi = 6.283185307179586;
  const int modes = 3 * d.cells;
  std::vector<double> ca, sa;
  for (int j = 0; j <= modes; ++j) {
    ca.push_back(g(rng) / (1 + j));
    sa.push_back(g(rng) / (1 + j));
  }
  return GridField::sample(d, [&](const std::array<double, 2>& x) {
    double v = 0.0;
    for (int j = 0; j <= modes; ++j) {
      const double kx = two_pi * j / d.cells * x[0];
      v += ca[static_cast<std::size_t>(j)] * std::cos(kx) + sa[static_cast<std::size_t>(j)] * std::sin(kx);
    }
    return v;
  });
}

}  // namespace fixtures
