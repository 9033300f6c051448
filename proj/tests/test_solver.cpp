#include <doctest.h>

#include "fixtures.hpp"

#include "gapbump/errors.hpp"

#include <cmath>
#include <random>

using namespace gapbump;
using fixtures::default_problem;
using fixtures::ground;

namespace {

const Problem& problem8() {
  static const Problem p = default_problem(8);
  return p;
}

const SolutionRecord& ground8() {
  static const SolutionRecord r = ground(problem8());
  return r;
}

}  // namespace

TEST_CASE("options validation") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());
  o.newton_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = {};
  o.backtrack = 1.5;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = {};
  o.max_iters = 0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}

TEST_CASE("initial_ansatz") {
  const SpectralDecomposition& s = problem8().S();
  const GridField zero = initial_ansatz({0.0}, 0.7, 0.0, s);
  CHECK(zero.values().norm() == 0.0);

  const GridField a = initial_ansatz({0.3}, 0.7, 2.0, s);
  CHECK(energy_norm(project_negative(a, s), s) < 1e-10 * energy_norm(a, s));

  const GridField b = initial_ansatz({0.3}, 0.7, 5.0, s);
  CHECK((b.values() - a.values() * 2.5).norm() < 1e-12 * b.values().norm());

  CHECK_THROWS_AS(initial_ansatz({0.0}, 0.0, 1.0, s), std::invalid_argument);
  CHECK_THROWS_AS(initial_ansatz({0.0, 0.0}, 0.7, 1.0, s), std::invalid_argument);
}

TEST_CASE("ground state on k = 8") {
  const SolutionRecord& r = ground8();
  CHECK(r.energy == doctest::Approx(107.2353171).epsilon(1e-8));
  CHECK(r.norm_k == doctest::Approx(20.88097).epsilon(1e-6));
  CHECK(r.residual <= 1e-10);
  CHECK(r.negative_hessian_count == 10);
  CHECK(r.kernel_dim_estimate == 0);
  CHECK(r.residual_history.size() == static_cast<std::size_t>(r.iterations) + 1);
  CHECK(r.domain_fingerprint == problem8().domain().fingerprint());
}

TEST_CASE("Newton tail is superlinear") {
  const auto& h = ground8().residual_history;
  REQUIRE(h.size() >= 4);
  // Last few steps before hitting round-off: r_{n+1} <= C r_n^{1.5}.
  int checked = 0;
  for (std::size_t i = h.size() - 3; i + 1 < h.size(); ++i) {
    if (h[i] > 1e-2 || h[i + 1] < 1e-12) continue;
    CHECK(h[i + 1] <= 10.0 * std::pow(h[i], 1.5));
    ++checked;
  }
  CHECK(checked >= 1);
}

TEST_CASE("ground state energy is stable in k") {
  const Problem p16 = default_problem(16);
  const SolutionRecord r = ground(p16);
  CHECK(r.energy == doctest::Approx(107.2353711).epsilon(1e-8));
}

TEST_CASE("Newton from an exact solution stays put") {
  const SolutionRecord again = find_critical_point(ground8().field, problem8());
  CHECK(again.iterations <= 2);
  CHECK((again.field.values() - ground8().field.values()).norm() <= 1e-10 * ground8().field.values().norm());
}

TEST_CASE("Newton from a translate converges to the translate") {
  const GridField moved = translate(ground8().field, {3});
  const SolutionRecord r = find_critical_point(initial_ansatz({-3.0}, 0.7, 6.0, problem8().S()), problem8());
  CHECK(r.energy == doctest::Approx(ground8().energy).epsilon(1e-10));
  CHECK(energy_norm(r.field - moved, problem8().S()) < 1e-6);
}

TEST_CASE("Newton failure modes") {
  const SpectralDecomposition& s = problem8().S();
  CHECK_THROWS_AS(find_critical_point(initial_ansatz({0.0}, 0.7, 1.0, s), problem8()), TrivialCollapse);

  SolverOptions one;
  one.max_iters = 1;
  CHECK_THROWS_AS(find_critical_point(initial_ansatz({0.0}, 0.7, 6.0, s), problem8(), one), NoConvergence);

  CHECK_THROWS_AS(find_critical_point(GridField(TorusDomain(1, 4, 16)), problem8()), DomainMismatch);
}

TEST_CASE("validate_solution") {
  std::mt19937_64 rng(3);
  const ValidationReport ok = validate_solution(ground8(), {}, problem8(), rng);
  CHECK(ok.passed());
  CHECK(ok.at("translation_invariance").passed);
  CHECK(ok.checks.size() == 4);

  const SolutionRecord zero = describe(GridField(problem8().domain()), problem8());
  const ValidationReport bad = validate_solution(zero, {}, problem8(), rng);
  CHECK_FALSE(bad.passed());
  CHECK_FALSE(bad.at("norm_lower_bound").passed);
  CHECK_FALSE(bad.at("energy_lower_bound").passed);

  // A perturbation that leaves a residual around 1e-3.
  const SpectralDecomposition& s = problem8().S();
  const GridField bump = initial_ansatz({1.0}, 0.5, 1.0, s);
  const GridField off = ground8().field + bump * (1e-3 / energy_norm(bump, s));
  const SolutionRecord perturbed = describe(off, problem8());
  CHECK(perturbed.residual > 1e-5);
  const ValidationReport r = validate_solution(perturbed, {}, problem8(), rng);
  CHECK_FALSE(r.at("residual").passed);
  CHECK(r.at("norm_lower_bound").passed);

  CHECK_THROWS_AS(ok.at("nope"), std::out_of_range);
}

TEST_CASE("sphere levels") {
  std::mt19937_64 rng(1);
  SUBCASE("small spheres see the quadratic part") {
    const SphereLevel l = sphere_level(problem8(), 0.05, 16, rng);
    CHECK(l.level / (0.05 * 0.05) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(energy_norm(l.minimizer, problem8().S()) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(energy_norm(project_negative(l.minimizer, problem8().S()), problem8().S()) < 1e-12);
  }
  SUBCASE("levels stay positive on a range of radii") {
    for (double r : {0.1, 0.5, 1.0, 2.0}) {
      const SphereLevel l = sphere_level(problem8(), r, 16, rng);
      CHECK(l.level > 0.0);
      CHECK(l.level <= l.best_sample + 1e-12);
    }
  }
  SUBCASE("level is uniform in k") {
    const Problem p16 = default_problem(16);
    const double a = sphere_level(problem8(), 1.0, 16, rng).level;
    const double b = sphere_level(p16, 1.0, 16, rng).level;
    CHECK(std::abs(a - b) <= 0.1 * a);
  }
}

TEST_CASE("linking bounds") {
  const SpectralDecomposition& s = problem8().S();
  GridField z = initial_ansatz({0.0}, 0.7, 1.0, s);
  z = z * (1.0 / energy_norm(z, s));
  std::mt19937_64 rng(2);

  SUBCASE("vanishes as rho shrinks") {
    const double b1 = linking_upper_bound(problem8(), z, 1.0, 4, rng).bound;
    const double b2 = linking_upper_bound(problem8(), z, 0.1, 4, rng).bound;
    CHECK(b2 < b1);
    CHECK(b2 <= 0.5 * 0.1 * 0.1 + 1e-9);
  }
  SUBCASE("sandwich around the critical value") {
    const LinkingBound big = linking_radius_scan(problem8(), z, 20.0, 4, rng);
    CHECK(big.boundary_sup <= 1e-6);
    const double level = sphere_level(problem8(), 1.0, 16, rng).level;
    CHECK(big.boundary_sup < level);
    CHECK(level <= ground8().energy);
    CHECK(ground8().energy <= big.bound + 1e-9);
  }
  SUBCASE("rejects a direction outside Z_k or off the unit sphere") {
    CHECK_THROWS_AS(linking_upper_bound(problem8(), z * 2.0, 10.0, 4, rng), std::invalid_argument);
    const GridField y = project_negative(GridField::sample(problem8().domain(), [](const auto& x) {
                                           return std::cos(6.283185307179586 * x[0]);
                                         }),
                                         s);
    CHECK_THROWS_AS(linking_upper_bound(problem8(), y * (1.0 / energy_norm(y, s)), 10.0, 4, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("geometric equivalence is an equivalence relation") {
  const SpectralDecomposition& s = problem8().S();
  std::mt19937_64 rng(4);
  const GridField u = ground8().field;
  const GridField v = translate(u, {2}) + initial_ansatz({0.5}, 0.5, 0.05, s);
  const GridField w = translate(v, {-5});

  CHECK(orbit_distance(u, u, s).distance == 0.0);
  CHECK(orbit_distance(u, translate(u, {3}), s).distance < 1e-12);
  CHECK(orbit_distance(u, translate(u, {3}), s).shift == LatticeVector{5});
  CHECK(orbit_distance(u, v, s).distance == doctest::Approx(orbit_distance(v, u, s).distance).epsilon(1e-12));

  for (double radius : {1e-6, 0.5}) {
    const bool uv = geometrically_equivalent(u, v, s, radius);
    const bool vw = geometrically_equivalent(v, w, s, radius);
    const bool uw = geometrically_equivalent(u, w, s, radius);
    CHECK(vw);
    CHECK(uv == geometrically_equivalent(v, u, s, radius));
    if (uv && vw) CHECK(uw);
    CHECK(uv == uw);
  }
  CHECK(geometrically_equivalent(u, v, s, 0.5));
  CHECK_FALSE(geometrically_equivalent(u, u * -1.0, s, 0.5));
}

TEST_CASE("deflated search") {
  std::mt19937_64 rng(7);
  const std::vector<SolutionRecord> known{ground8()};

  CHECK(deflated_search(known, 0, problem8(), rng).empty());

  SUBCASE("a translate of a known solution is discarded") {
    const auto found = deflated_search_from(known, {translate(ground8().field, {2})}, problem8());
    CHECK(found.empty());
  }
  SUBCASE("random starts find new solutions") {
    const auto found = deflated_search(known, 50, problem8(), rng);
    CHECK(found.size() >= 1);
    std::mt19937_64 vr(8);
    for (const auto& f : found) {
      CHECK(f.residual <= 1e-10);
      CHECK_FALSE(geometrically_equivalent(f.field, ground8().field, problem8().S(), 0.5));
      CHECK(validate_solution(f, {}, problem8(), vr).at("residual").passed);
    }
    for (std::size_t i = 0; i < found.size(); ++i)
      for (std::size_t j = i + 1; j < found.size(); ++j)
        CHECK_FALSE(geometrically_equivalent(found[i].field, found[j].field, problem8().S(), 0.5));
  }
}
