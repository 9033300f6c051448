#include <doctest.h>

#include "fixtures.hpp"

#include "gapbump/errors.hpp"
#include "gapbump/reduction.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace gapbump;
using fixtures::default_problem;
using fixtures::ground;

namespace {

struct Based {
  Problem problem;
  SolutionRecord base;
};

const Based& k8() {
  static const Based b = [] {
    Problem p = default_problem(8);
    SolutionRecord r = ground(p);
    return Based{p, r};
  }();
  return b;
}

/// 2D strip potential constant in y: y-translation of a y-dependent solution
/// is an exact null direction. `well` breaks it slightly.
Based strip(double well) {
  std::vector<CosineTerm> terms{{0, 1, 30.0}};
  if (well != 0.0) terms.push_back({1, 2, well});
  const TorusDomain d(2, 1, 32);
  Problem p = make_problem(d, PeriodicPotential::from_terms(terms, 20.0), Nonlinearity{});
  const GridField init = project_positive(GridField::sample(d, [](const auto& x) {
                                            return 4.0 * std::exp(-x[0] * x[0] / 0.3) *
                                                   std::cos(2 * std::numbers::pi * x[1]);
                                          }),
                                          p.S());
  SolutionRecord r = find_critical_point(init, p);
  return Based{p, r};
}

const Based& degenerate_strip() {
  static const Based b = strip(0.0);
  return b;
}

const Based& even_well_strip() {
  static const Based b = strip(-1e-3);
  return b;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

}  // namespace

TEST_CASE("quadratic toy") {
  Nonlinearity none;
  none.weight = PeriodicPotential::constant(0.0);
  const Problem p = make_problem(TorusDomain(1, 2, 8), fixtures::default_potential(), none);
  const SolutionRecord zero = describe(GridField(p.domain()), p);

  const KernelBasis kb = detect_kernel(zero, p);
  CHECK(kb.dim() == 0);
  CHECK(kb.scale == doctest::Approx(1.0));
  CHECK(kb.eta == doctest::Approx(1.0));
  CHECK(kb.delta0 == doctest::Approx(0.3));

  CHECK_THROWS_AS(detect_kernel(zero, p, 2.0), AllKernel);

  const KernelBasis forced = detect_kernel(zero, p, 1e-4, 3);
  REQUIRE(forced.dim() == 3);
  CHECK((forced.basis.transpose() * forced.basis - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
  const Eigen::MatrixXd h = p.J().hessian(zero.field.values() * 0.0);
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd e = forced.basis.col(j);
    CHECK(std::abs(std::abs(forced.kernel_values[j]) - 1.0) < 1e-12);
    CHECK((h * e - forced.kernel_values[j] * e).norm() < 1e-12);
  }
  CHECK_THROWS_AS(detect_kernel(zero, p, 1e-4, static_cast<int>(p.S().size())), AllKernel);
  CHECK_THROWS_AS(detect_kernel(zero, p, 1e-4, -1), std::invalid_argument);
}

TEST_CASE("detect_kernel requires a critical point") {
  const Problem& p = k8().problem;
  const SolutionRecord off = describe(initial_ansatz({0.0}, 0.7, 6.0, p.S()), p);
  CHECK_THROWS_AS(detect_kernel(off, p), std::invalid_argument);
}

TEST_CASE("default base solution is nondegenerate") {
  const KernelBasis kb = detect_kernel(k8().base, k8().problem);
  CHECK(kb.dim() == 0);
  CHECK(kb.eta > 1.0);
  CHECK(kb.delta0 == doctest::Approx(0.3 / kb.eta));
  const Eigen::VectorXd mu = k8().problem.J().hessian_eigenvalues(kb.base_coords);
  CHECK(1.0 / kb.eta == doctest::Approx(mu.cwiseAbs().minCoeff()).epsilon(1e-10));
}

TEST_CASE("strip fixture has a translation kernel") {
  const Based& b = degenerate_strip();
  const KernelBasis kb = detect_kernel(b.base, b.problem);
  REQUIRE(kb.dim() == 1);
  const GridField dy = partial_derivative(b.base.field, 1);
  const double c = energy_inner(kb.field(0), dy, b.problem.S()) / energy_norm(dy, b.problem.S());
  CHECK(1.0 - std::abs(c) < 1e-6);
  CHECK(std::abs(kb.kernel_values[0]) < 1e-6);

  const OriginClassification oc = classify_origin(kb, 0.5 * kb.delta0);
  CHECK(oc.degenerate);
}

TEST_CASE("classify_origin") {
  const Based& b = even_well_strip();
  const KernelBasis kb = detect_kernel(b.base, b.problem);
  REQUIRE(kb.dim() == 1);
  CHECK(kb.kernel_values[0] > 0.0);

  const OriginClassification three = classify_origin(kb, 0.5 * kb.delta0, 3);
  const OriginClassification five = classify_origin(kb, 0.5 * kb.delta0, 5);
  CHECK(three.morse_index == 0);
  CHECK_FALSE(three.degenerate);
  CHECK(five.morse_index == 0);
  CHECK(three.reduced_eigenvalues[0] == doctest::Approx(kb.kernel_values[0]).epsilon(0.05));
  CHECK(five.reduced_eigenvalues[0] == doctest::Approx(kb.kernel_values[0]).epsilon(0.05));

  CHECK_THROWS_AS(classify_origin(kb, 0.5 * kb.delta0, 4), std::invalid_argument);
  CHECK_THROWS_AS(classify_origin(detect_kernel(k8().base, k8().problem), 0.01), std::invalid_argument);
}

TEST_CASE("reduced Hessian is symmetric") {
  const KernelBasis kb = detect_kernel(k8().base, k8().problem, 1e-4, 2);
  const OriginClassification oc = classify_origin(kb, 0.3 * kb.delta0);
  CHECK((oc.reduced_hessian - oc.reduced_hessian.transpose()).norm() == 0.0);
  // Both softest directions are nondegenerate, so the signs carry over.
  int negatives = 0;
  for (int j = 0; j < 2; ++j) negatives += kb.kernel_values[j] < 0.0;
  CHECK(oc.morse_index == negatives);
}

TEST_CASE("reduction map") {
  const KernelBasis kb = detect_kernel(k8().base, k8().problem, 1e-4, 1);
  REQUIRE(kb.dim() == 1);
  const double d0 = kb.delta0;

  SUBCASE("origin") {
    const ReducedSample s0 = solve_w(kb, vec({0.0}));
    CHECK(s0.w_coords.norm() < 1e-10);
    CHECK(std::abs(s0.dI[0]) < 1e-9);
    CHECK(s0.I == doctest::Approx(k8().base.energy).epsilon(1e-12));
    CHECK(s0.eta_estimate <= 2.0 * kb.eta);
  }

  SUBCASE("tangency: ||w(x)|| = O(|x|²)") {
    const double a = solve_w(kb, vec({0.01 * d0})).w_coords.norm();
    const double b = solve_w(kb, vec({0.1 * d0})).w_coords.norm();
    const double slope = std::log10(b / a);
    CHECK(slope >= 1.9);
    CHECK(slope <= 2.1);
  }

  SUBCASE("w stays orthogonal to the kernel") {
    for (double t : {-0.8, 0.3, 0.9}) {
      const ReducedSample s = solve_w(kb, vec({t * d0}));
      CHECK(std::abs(kb.basis.col(0).dot(s.w_coords)) < 1e-10);
      CHECK(s.projected_residual <= 1e-10);
    }
  }

  SUBCASE("dI is the derivative of I") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    const double h = 1e-4 * d0;
    for (int i = 0; i < 20; ++i) {
      const double x = u(rng) * d0;
      const double fd = (solve_w(kb, vec({x + h})).I - solve_w(kb, vec({x - h})).I) / (2 * h);
      const double dI = solve_w(kb, vec({x})).dI[0];
      CHECK(std::abs(fd - dI) <= 1e-6 * std::max(1.0, std::abs(dI)));
    }
  }

  SUBCASE("w is Lipschitz in x") {
    std::vector<Eigen::VectorXd> xs;
    for (int i = -4; i <= 4; ++i) xs.push_back(vec({0.2 * i * d0}));
    const auto ws = solve_w_batch(kb, xs);
    REQUIRE(ws.size() == xs.size());
    for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
      const double dw = (ws[i + 1].w_coords - ws[i].w_coords).norm();
      CHECK(dw <= 2.0 * 0.2 * d0);
    }
    // the batch preserves order and matches single solves
    CHECK((ws[2].w_coords - solve_w(kb, xs[2]).w_coords).norm() < 1e-12);
  }

  SUBCASE("ball and span checks") {
    CHECK_THROWS_AS(solve_w(kb, vec({1.01 * d0})), OutOfBall);
    CHECK_THROWS_AS(solve_w(kb, vec({0.0, 0.0})), std::invalid_argument);
    const GridField h = kb.field(0) * (0.5 * d0);
    CHECK((solve_w(kb, h).w_coords - solve_w(kb, vec({0.5 * d0})).w_coords).norm() < 1e-12);
    const GridField outside = h + initial_ansatz({1.0}, 0.5, 1.0, kb.problem.S());
    CHECK_THROWS_AS(solve_w(kb, outside), std::invalid_argument);
  }
}

TEST_CASE("reduction does not depend on the kernel basis") {
  const KernelBasis kb = detect_kernel(k8().base, k8().problem, 1e-4, 2);
  REQUIRE(kb.dim() == 2);
  const double th = 0.7;
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Eigen::MatrixXd rotated = kb.basis * rot;
  const Eigen::VectorXd x = vec({0.3 * kb.delta0, -0.4 * kb.delta0});
  const ReducedSample a = solve_w(kb, x);
  const ReducedSample b =
      reduced_evaluate(kb.problem.J(), kb.base_coords, rotated, rot.transpose() * x, kb.eta);
  CHECK((a.w_coords - b.w_coords).norm() < 1e-9);
  CHECK(a.I == doctest::Approx(b.I).epsilon(1e-12));
  CHECK((rot.transpose() * a.dI - b.dI).norm() < 1e-9);
}

TEST_CASE("superposition of two translates") {
  const Problem p = default_problem(32);
  const SolutionRecord base = ground(p);
  const KernelBasis kb = detect_kernel(base, p, 1e-4, 1);
  const double d0 = kb.delta0;
  const std::vector<Eigen::VectorXd> xs{vec({0.0, 0.0}), vec({0.3 * d0, -0.3 * d0}), vec({0.5 * d0, 0.2 * d0})};

  double prev0 = 1e300, prev1 = 1e300;
  for (int sep : {4, 8, 16}) {
    const SuperpositionGap g = superposition_compare(kb, {{-sep / 2}, {sep - sep / 2}}, xs);
    CHECK(g.c0_gaps.size() == xs.size());
    CHECK(g.max_c0_gap < prev0);
    CHECK(g.max_c1_gap < prev1);
    CHECK((g.gram - Eigen::MatrixXd::Identity(2, 2)).norm() < 0.1);
    prev0 = g.max_c0_gap;
    prev1 = g.max_c1_gap;
  }
  CHECK(prev0 < 1e-8);

  CHECK_THROWS_AS(superposition_compare(kb, {{3}, {3}}, xs), CentersCollide);
  CHECK_THROWS_AS(superposition_compare(kb, {{0}, {1}}, xs), std::invalid_argument);
  CHECK_THROWS_AS(superposition_compare(kb, {{-4}, {4}}, {vec({0.0})}), std::invalid_argument);

  SUBCASE("without a kernel only the values are compared") {
    const KernelBasis none = detect_kernel(base, p);
    REQUIRE(none.dim() == 0);
    const SuperpositionGap a = superposition_compare(none, {{-4}, {4}}, {Eigen::VectorXd(0)});
    const SuperpositionGap b = superposition_compare(none, {{-8}, {8}}, {Eigen::VectorXd(0)});
    CHECK(b.max_c0_gap < a.max_c0_gap);
    CHECK(a.max_c1_gap == 0.0);
  }
}
