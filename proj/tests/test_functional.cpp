#include <doctest.h>

#include "fixtures.hpp"
#include "gapbump/functional.hpp"

#include <cmath>
#include <random>

using namespace gapbump;
using fixtures::default_potential;

namespace {

const SpectralDecomposition& spectrum4() {
  static const SpectralDecomposition s = diagonalize(default_potential(), TorusDomain(1, 4, 16));
  return s;
}

GridField unit_direction(const GridField& v, const SpectralDecomposition& s) {
  return v * (1.0 / energy_norm(v, s));
}

}  // namespace

TEST_CASE("nonlinearity validation") {
  Nonlinearity nl;
  CHECK_NOTHROW(nl.validate());
  nl.p = 2.5;
  nl.q = 2.2;
  CHECK_THROWS_AS(nl.validate(), std::invalid_argument);
  nl = {};
  nl.q = 5.0;
  CHECK_THROWS_AS(nl.validate(), std::invalid_argument);
  nl = {};
  nl.q = 2.0;
  CHECK_THROWS_AS(nl.validate(), std::invalid_argument);
  nl = {};
  nl.gamma = 2.0;
  CHECK_THROWS_AS(nl.validate(), std::invalid_argument);
  nl = {};
  nl.weight = PeriodicPotential::cosine(1.0, -0.5);  // 0.5 + cos dips below 0
  CHECK_THROWS_AS(nl.validate(), std::invalid_argument);
  nl.weight = PeriodicPotential::cosine(1.0, -1.0);  // 1 + cos >= 0
  CHECK_NOTHROW(nl.validate());
}

TEST_CASE("pointwise identities of the power nonlinearity") {
  for (double p : {3.0, 4.0, 5.5}) {
    Nonlinearity nl;
    nl.p = p;
    nl.gamma = p;
    nl.q = std::min(3.0, p);
    nl.weight = PeriodicPotential::cosine(0.5, -1.0);
    for (double h : {0.5, 1.0, 1.5}) {
      for (double t = -3.0; t <= 3.0; t += 0.125) {
        CAPTURE(t);
        CHECK(nl.gamma * nl.primitive(h, t) == doctest::Approx(t * nl.f(h, t)).epsilon(1e-12));
        const double c = (p - 1.0) * 1.5;
        CHECK(std::abs(nl.derivative(h, t)) <= c * (std::pow(std::abs(t), nl.q - 2) + std::pow(std::abs(t), p - 2)) + 1e-12);
        // f is the derivative of F, f' the derivative of f
        const double e = 1e-6;
        CHECK(nl.f(h, t) == doctest::Approx((nl.primitive(h, t + e) - nl.primitive(h, t - e)) / (2 * e)).epsilon(1e-6));
        const double dfd = (nl.f(h, t + e) - nl.f(h, t - e)) / (2 * e);
        CHECK(std::abs(nl.derivative(h, t) - dfd) <= 1e-5 * std::max(1.0, std::abs(dfd)));
      }
    }
  }
}

TEST_CASE("J on simple fields") {
  const SpectralDecomposition& s = spectrum4();
  const Nonlinearity nl;
  CHECK(evaluate_J(GridField(s.domain()), s, nl) == 0.0);

  // u = tφ with λ(φ) > 0: J = ½λt² - ¼t⁴∫φ⁴.
  const std::size_t i = static_cast<std::size_t>(s.negative_count()) + 2;
  const GridField phi = s.eigenfield(i);
  const double lambda = s.eigenvalues()[static_cast<Eigen::Index>(i)];
  double phi4 = 0.0;
  for (std::size_t p = 0; p < phi.size(); ++p) phi4 += std::pow(phi[p], 4);
  phi4 *= s.domain().cell_weight();
  for (double t : {0.1, 1.0}) {
    const double closed = 0.5 * lambda * t * t - 0.25 * std::pow(t, 4) * phi4;
    CHECK(evaluate_J(phi * t, s, nl) == doctest::Approx(closed).epsilon(1e-12));
  }
  // u = tφ with λ(φ) < 0 picks up the negative quadratic part.
  const GridField psi = s.eigenfield(0);
  const double l0 = s.eigenvalues()[0];
  double psi4 = 0.0;
  for (std::size_t p = 0; p < psi.size(); ++p) psi4 += std::pow(psi[p], 4);
  psi4 *= s.domain().cell_weight();
  CHECK(evaluate_J(psi * 0.7, s, nl) == doctest::Approx(-0.5 * std::abs(l0) * 0.49 - 0.25 * std::pow(0.7, 4) * psi4).epsilon(1e-12));
}

TEST_CASE("J, gradient and hessvec commute with translations") {
  const SpectralDecomposition& s = spectrum4();
  const Nonlinearity nl;
  std::mt19937_64 rng(17);
  for (int t = 0; t < 5; ++t) {
    const GridField u = fixtures::smooth_random_field(s.domain(), rng);
    const GridField v = fixtures::smooth_random_field(s.domain(), rng);
    const LatticeVector b{static_cast<int>(rng() % 4)};
    const double j = evaluate_J(u, s, nl);
    CHECK(evaluate_J(translate(u, b), s, nl) == doctest::Approx(j).epsilon(1e-12));
    const GridField g1 = translate(gradient(u, s, nl), b);
    const GridField g2 = gradient(translate(u, b), s, nl);
    CHECK(l2_norm(g1 - g2) <= 1e-12 * std::max(1.0, l2_norm(g1)));
    const GridField h1 = translate(hessvec(u, v, s, nl), b);
    const GridField h2 = hessvec(translate(u, b), translate(v, b), s, nl);
    CHECK(l2_norm(h1 - h2) <= 1e-12 * std::max(1.0, l2_norm(h1)));
  }
}

TEST_CASE("gradient is the Riesz representative of the weak form") {
  const SpectralDecomposition& s = spectrum4();
  const Nonlinearity nl;
  const TorusDomain& d = s.domain();
  Eigen::MatrixXd l = laplacian_matrix(d);
  l.diagonal() += default_potential().on_grid(d).values();
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const GridField u = fixtures::smooth_random_field(d, rng);
    const GridField v = fixtures::smooth_random_field(d, rng);
    const double lhs = energy_inner(gradient(u, s, nl), v, s);
    Eigen::VectorXd fu(static_cast<Eigen::Index>(d.size()));
    for (Eigen::Index i = 0; i < fu.size(); ++i) fu[i] = nl.f(1.0, u.values()[i]);
    const double rhs = d.cell_weight() * (v.values().dot(l * u.values()) - fu.dot(v.values()));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("finite-difference checks over 100 random probes") {
  const SpectralDecomposition& s = spectrum4();
  const Nonlinearity nl;
  std::mt19937_64 rng(99);
  const double eps = 1e-5;
  double worst_grad = 0.0;
  double worst_hess = 0.0;
  double worst_sym = 0.0;
  for (int t = 0; t < 100; ++t) {
    const GridField u = fixtures::smooth_random_field(s.domain(), rng);
    const GridField v = unit_direction(fixtures::smooth_random_field(s.domain(), rng), s);
    const GridField w = unit_direction(fixtures::smooth_random_field(s.domain(), rng), s);
    const double fd = (evaluate_J(u + v * eps, s, nl) - evaluate_J(u - v * eps, s, nl)) / (2 * eps);
    const double an = energy_inner(gradient(u, s, nl), v, s);
    worst_grad = std::max(worst_grad, std::abs(fd - an) / std::max(1.0, std::abs(an)));

    const GridField gfd = (gradient(u + v * eps, s, nl) - gradient(u - v * eps, s, nl)) * (1.0 / (2 * eps));
    worst_hess = std::max(worst_hess, energy_norm(gfd - hessvec(u, v, s, nl), s));

    const double a = energy_inner(hessvec(u, v, s, nl), w, s);
    const double b = energy_inner(v, hessvec(u, w, s, nl), s);
    worst_sym = std::max(worst_sym, std::abs(a - b));
  }
  CHECK(worst_grad <= 1e-6);
  CHECK(worst_hess <= 1e-5);
  CHECK(worst_sym <= 1e-9);
}

TEST_CASE("derivatives at the trivial critical point") {
  const SpectralDecomposition& s = spectrum4();
  const Nonlinearity nl;
  const GridField zero(s.domain());
  CHECK(l2_norm(gradient(zero, s, nl)) == 0.0);
  std::mt19937_64 rng(2);
  const GridField v = fixtures::random_field(s.domain(), rng);
  const Eigen::VectorXd hv = s.to_energy_coords(hessvec(zero, v, s, nl));
  const Eigen::VectorXd expect = s.signs().cwiseProduct(s.to_energy_coords(v));
  CHECK((hv - expect).norm() <= 1e-10 * expect.norm());
}

TEST_CASE("dense Hessian agrees with Hessian-vector products") {
  const SpectralDecomposition& s = spectrum4();
  const EnergyFunctional j(s, Nonlinearity{});
  std::mt19937_64 rng(6);
  const Eigen::VectorXd a = s.to_energy_coords(fixtures::smooth_random_field(s.domain(), rng));
  const Eigen::MatrixXd h = j.hessian(a);
  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd v = Eigen::VectorXd::Random(a.size());
    CHECK((h * v - j.hessvec(a, v)).norm() <= 1e-10 * (h * v).norm());
  }
  const Eigen::VectorXd mu = j.hessian_eigenvalues(a);
  CHECK(mu.maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("energy density integrates to J") {
  const SpectralDecomposition& s = spectrum4();
  const EnergyFunctional j(s, Nonlinearity{});
  std::mt19937_64 rng(12);
  const Eigen::VectorXd a = s.to_energy_coords(fixtures::smooth_random_field(s.domain(), rng));
  CHECK(integrate(j.energy_density(a)) == doctest::Approx(j.energy(a)).epsilon(1e-10));
}

TEST_CASE("dealiased evaluation") {
  const SpectralDecomposition& s = spectrum4();
  Nonlinearity nl;
  nl.dealias = true;
  const EnergyFunctional jd(s, nl);
  const EnergyFunctional jc(s, Nonlinearity{});
  std::mt19937_64 rng(31);
  const GridField u = fixtures::smooth_random_field(s.domain(), rng, 0.3);
  const Eigen::VectorXd a = s.to_energy_coords(u);
  // Smooth fields: both quadratures agree closely.
  CHECK(jd.energy(a) == doctest::Approx(jc.energy(a)).epsilon(1e-6));
  // Derivatives stay consistent on the refined grid.
  const Eigen::VectorXd v = s.to_energy_coords(fixtures::smooth_random_field(s.domain(), rng)).normalized();
  const double eps = 1e-5;
  const double fd = (jd.energy(a + eps * v) - jd.energy(a - eps * v)) / (2 * eps);
  CHECK(fd == doctest::Approx(jd.gradient(a).dot(v)).epsilon(1e-6));
  const Eigen::VectorXd hfd = (jd.gradient(a + eps * v) - jd.gradient(a - eps * v)) / (2 * eps);
  CHECK((hfd - jd.hessvec(a, v)).norm() <= 1e-5);
  CHECK((jd.hessian(a) * v - jd.hessvec(a, v)).norm() <= 1e-10);
}

TEST_CASE("superquadratic condition") {
  const SpectralDecomposition& s = spectrum4();
  std::mt19937_64 rng(8);
  Nonlinearity pure;
  Nonlinearity loose;
  loose.gamma = 3.0;
  for (int t = 0; t < 5; ++t) {
    const GridField u = fixtures::random_field(s.domain(), rng);
    const auto [lhs, rhs] = superquadratic_sides(u, pure);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    const auto [l2, r2] = superquadratic_sides(u, loose);
    CHECK(l2 < r2);
    CHECK(l2 > 0.0);
  }
}

TEST_CASE("interaction defect") {
  const Nonlinearity nl;
  const TorusDomain d(1, 32, 16);
  const GridField bump = GridField::sample(d, [](const auto& x) { return 5.0 * std::exp(-x[0] * x[0]); });
  const GridField phi = GridField::sample(d, [](const auto&) { return 1.0; });

  CHECK(interaction_defect({bump}, phi, phi, nl) == 0.0);
  CHECK(interaction_defect({}, phi, phi, nl) == 0.0);

  SUBCASE("disjoint supports") {
    const GridField a = GridField::sample(d, [](const auto& x) { return x[0] < -1 && x[0] > -5 ? 2.0 : 0.0; });
    const GridField b = GridField::sample(d, [](const auto& x) { return x[0] > 1 && x[0] < 5 ? -3.0 : 0.0; });
    CHECK(interaction_defect({a, b}, phi, phi, nl) <= 1e-12);
  }
  SUBCASE("decreasing with separation") {
    double prev = 1e300;
    for (int sep : {4, 8, 16}) {
      const GridField u1 = translate(bump, {-sep / 2});
      const GridField u2 = translate(bump, {sep - sep / 2});
      const GridField w = u1 + u2;
      const double defect = interaction_defect({u1, u2}, w, w, nl);
      CHECK(defect > 0.0);
      CHECK(defect < prev);
      prev = defect;
    }
  }
}
