#include "gapbump/verify.hpp"

#include "gapbump/errors.hpp"
#include "gapbump/functional.hpp"
#include "gapbump/multibump.hpp"
#include "gapbump/reduction.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gapbump {

namespace {

using Values = std::vector<std::pair<std::string, double>>;

LemmaEntry entry(std::string name, std::string anchor, std::string op, Values values, double tol, bool ok) {
  return LemmaEntry{std::move(name), std::move(anchor), std::move(op), std::move(values), tol, ok};
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (!(v[i + 1] < v[i])) return false;
  return true;
}

Values series(const std::string& prefix, const std::vector<int>& keys, const std::vector<double>& v) {
  Values out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(prefix + std::to_string(keys[i]), v[i]);
  return out;
}

GridField smooth_probe(const TorusDomain& d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const int modes = 3 * d.cells;
  std::vector<double> ca, sa;
  for (int j = 0; j <= modes; ++j) {
    ca.push_back(g(rng) / (1 + j));
    sa.push_back(g(rng) / (1 + j));
  }
  return GridField::sample(d, [&](const std::array<double, 2>& x) {
    double v = 0.0;
    for (int j = 0; j <= modes; ++j) {
      const double kx = 2 * std::numbers::pi * j / d.cells * x[0];
      v += ca[static_cast<std::size_t>(j)] * std::cos(kx) + sa[static_cast<std::size_t>(j)] * std::sin(kx);
    }
    return v;
  });
}

Eigen::VectorXd scalar(double x) { return Eigen::VectorXd::Constant(1, x); }

const std::vector<int> kSeparations{4, 8, 16};

// 1
std::vector<LemmaEntry> spectral_gap(VerifyContext& ctx) {
  std::vector<LemmaEntry> out;
  for (int k : {4, 8, 16}) {
    const SpectralDecomposition& s = ctx.problem(k).S();
    const auto& gap = s.gap();
    const double alpha = gap ? gap->alpha : 0.0;
    const double beta = gap ? gap->beta : 0.0;
    int inside = 0;
    for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i)
      inside += s.eigenvalues()[i] > -alpha && s.eigenvalues()[i] < beta;
    const double offset = gap ? std::abs(0.5 * (beta - alpha)) / (0.5 * (alpha + beta)) : 1.0;
    out.push_back(entry("spectral_gap.k" + std::to_string(k), "0 lies in a gap (-alpha, beta) of L_k; j(k) = k",
                        "operator.diagonalize",
                        {{"alpha", alpha}, {"beta", beta}, {"j", s.negative_count()},
                         {"eigenvalues_in_gap", inside}, {"center_offset", offset}},
                        0.1, gap && inside == 0 && offset <= 0.1 && s.negative_count() == k));
  }
  return out;
}

// 2
std::vector<LemmaEntry> band_consistency(VerifyContext& ctx) {
  const int m = ctx.config().domain.samples_per_cell;
  const BandStructure bs = band_structure(ctx.problem(4).potential, m, 64, m);
  std::vector<LemmaEntry> out;
  for (int k : {4, 8, 16}) {
    const SpectralDecomposition& s = ctx.problem(k).S();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i) {
      const double l = s.eigenvalues()[i];
      double d = std::numeric_limits<double>::infinity();
      for (const auto& b : bs.bands) d = std::min(d, std::max({0.0, b.lower - l, l - b.upper}));
      worst = std::max(worst, d);
    }
    out.push_back(entry("band_consistency.k" + std::to_string(k),
                        "every torus eigenvalue lies in a Floquet band", "operator.band_structure",
                        {{"max_band_distance", worst}}, 1e-6, worst <= 1e-6));
  }
  return out;
}

// 3
std::vector<LemmaEntry> norm_equivalence(VerifyContext& ctx) {
  std::mt19937_64 rng = ctx.rng(3);
  const NormEquivalence a = norm_equivalence_report(ctx.problem(8).S(), 20, rng);
  const NormEquivalence b = norm_equivalence_report(ctx.problem(16).S(), 20, rng);
  const double dl = std::abs(a.c_low - b.c_low) / a.c_low;
  const double dh = std::abs(a.c_high - b.c_high) / a.c_high;
  return {entry("norm_equivalence", "C1 ||u||_H1 <= ||u||_k <= C2 ||u||_H1 with k-independent constants",
                "operator.norm_equivalence_report",
                {{"c_low.k8", a.c_low}, {"c_high.k8", a.c_high}, {"c_low.k16", b.c_low},
                 {"c_high.k16", b.c_high}, {"c_low_variation", dl}, {"c_high_variation", dh}},
                0.05, a.c_low > 0 && b.c_low > 0 && dl < 0.05 && dh < 0.05)};
}

// 4
std::vector<LemmaEntry> calculus(VerifyContext& ctx) {
  std::mt19937_64 rng = ctx.rng(4);
  const Problem& p = ctx.problem(4);
  const SpectralDecomposition& s = p.S();
  const Nonlinearity& nl = p.nonlinearity;
  const double eps = 1e-5;
  double worst_grad = 0.0, worst_hess = 0.0;
  for (int t = 0; t < 100; ++t) {
    const GridField u = smooth_probe(s.domain(), rng);
    GridField v = smooth_probe(s.domain(), rng);
    v = v * (1.0 / energy_norm(v, s));
    const double fd = (evaluate_J(u + v * eps, s, nl) - evaluate_J(u - v * eps, s, nl)) / (2 * eps);
    const double an = energy_inner(gradient(u, s, nl), v, s);
    worst_grad = std::max(worst_grad, std::abs(fd - an) / std::max(1.0, std::abs(an)));
    const GridField gfd = (gradient(u + v * eps, s, nl) - gradient(u - v * eps, s, nl)) * (1.0 / (2 * eps));
    worst_hess = std::max(worst_hess, energy_norm(gfd - hessvec(u, v, s, nl), s));
  }
  return {entry("gradient_fd", "J_k' agrees with central differences of J_k (100 probes)",
                "functional.gradient", {{"max_relative_error", worst_grad}}, 1e-6, worst_grad <= 1e-6),
          entry("hessvec_fd", "J_k'' v agrees with central differences of J_k' (100 probes)",
                "functional.hessvec", {{"max_error", worst_hess}}, 1e-5, worst_hess <= 1e-5)};
}

// 5
std::vector<LemmaEntry> nontrivial_solution(VerifyContext& ctx) {
  std::mt19937_64 rng = ctx.rng(5);
  const SolutionRecord& u = ctx.ground(8);
  const ValidationReport r = validate_solution(u, Thresholds{}, ctx.problem(8), rng, ctx.config().solver);
  std::vector<LemmaEntry> out;
  for (const auto& c : r.checks)
    out.push_back(entry("nontrivial_solution." + c.name,
                        "a nontrivial critical point has ||u||_k >= eps1, J_k(u) >= eps2 and "
                        "translation-invariant energy",
                        "solver.validate_solution", {{"value", c.value}, {"energy", u.energy}},
                        c.threshold, c.passed));
  return out;
}

// 6
std::vector<LemmaEntry> linking_sandwich(VerifyContext& ctx) {
  std::mt19937_64 rng = ctx.rng(6);
  const Problem& p = ctx.problem(8);
  const double r = 1.0;
  const SphereLevel level = sphere_level(p, r, 16, rng);
  GridField z = initial_ansatz({0.0}, 0.7, 1.0, p.S());
  z = z * (1.0 / energy_norm(z, p.S()));
  const LinkingBound lb = linking_radius_scan(p, z, 20.0, 4, rng);
  const double c = ctx.ground(8).energy;
  return {entry("linking_sandwich", "0 < delta <= c_k <= sup of J_k over M_k, sup over the boundary <= 0",
                "solver.sphere_level/linking_upper_bound",
                {{"r", r}, {"delta", level.level}, {"critical_value", c}, {"rho", lb.rho},
                 {"linking_bound", lb.bound}, {"boundary_sup", lb.boundary_sup}},
                1e-6,
                level.level > 0 && level.level <= c && c <= lb.bound && lb.boundary_sup <= 1e-6)};
}

/// Strip potential 30 cos(2πx) - 20 on a 2D unit torus: the y-translation of
/// a y-dependent solution is an exact kernel direction.
KernelBasis strip_kernel(const SolverOptions& opts) {
  const TorusDomain d(2, 1, 32);
  const Problem p = make_problem(d, PeriodicPotential::from_terms({{0, 1, 30.0}}, 20.0), Nonlinearity{});
  const GridField init = project_positive(GridField::sample(d, [](const std::array<double, 2>& x) {
                                            return 4.0 * std::exp(-x[0] * x[0] / 0.3) *
                                                   std::cos(2 * std::numbers::pi * x[1]);
                                          }),
                                          p.S());
  return detect_kernel(find_critical_point(init, p, opts), p, opts.kernel_tau);
}

// 7
std::vector<LemmaEntry> reduction_identities(VerifyContext& ctx) {
  std::mt19937_64 rng = ctx.rng(7);
  const SolverOptions& opts = ctx.config().solver;
  const KernelBasis kb = strip_kernel(opts);
  const double d0 = kb.delta0;
  const ReducedSample s0 = solve_w(kb, scalar(0.0), opts);
  double ortho = std::abs(kb.basis.col(0).dot(s0.w_coords));

  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const double h = 1e-4 * d0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng) * d0;
    const ReducedSample c = solve_w(kb, scalar(x), opts);
    const double fd =
        (solve_w(kb, scalar(x + h), opts, &c.w_coords).I - solve_w(kb, scalar(x - h), opts, &c.w_coords).I) / (2 * h);
    worst = std::max(worst, std::abs(fd - c.dI[0]) / std::max(1.0, std::abs(c.dI[0])));
    ortho = std::max(ortho, std::abs(kb.basis.col(0).dot(c.w_coords)));
  }
  return {entry("reduction_origin", "w(0) = 0 and dI(0) = 0 at a critical point", "reduction.solve_w",
                {{"kernel_dim", kb.dim()}, {"w_norm", s0.w_coords.norm()}, {"dI_norm", s0.dI.norm()}}, 1e-9,
                kb.dim() == 1 && s0.w_coords.norm() <= 1e-9 && s0.dI.norm() <= 1e-9),
          entry("reduction_gradient", "dI equals the derivative of the reduced function (20 points)",
                "reduction.solve_w", {{"max_relative_error", worst}}, 1e-6, worst <= 1e-6),
          entry("reduction_orthogonality", "w(x) is orthogonal to the kernel", "reduction.solve_w",
                {{"max_inner_product", ortho}}, 1e-10, ortho <= 1e-10)};
}

// 8
std::vector<LemmaEntry> superposition_limit(VerifyContext& ctx) {
  const SolverOptions& opts = ctx.config().solver;
  const Problem& p = ctx.problem(48);
  const KernelBasis kb = detect_kernel(ctx.ground(48), p, opts.kernel_tau, 1);
  const double d0 = kb.delta0;
  Eigen::VectorXd a(2), b(2);
  a << 0.3 * d0, -0.3 * d0;
  b << 0.5 * d0, 0.2 * d0;
  const std::vector<Eigen::VectorXd> xs{Eigen::VectorXd::Zero(2), a, b};
  std::vector<double> c0, c1;
  for (int sep : kSeparations) {
    const SuperpositionGap g = superposition_compare(kb, {{-sep / 2}, {sep - sep / 2}}, xs, opts);
    c0.push_back(g.max_c0_gap);
    c1.push_back(g.max_c1_gap);
  }
  return {entry("superposition_value_gap", "max |I_joint - sum I| decays with separation",
                "reduction.superposition_compare", series("sep", kSeparations, c0), 0.0, strictly_decreasing(c0)),
          entry("superposition_gradient_gap", "max |dI_joint - sum dI| decays with separation",
                "reduction.superposition_compare", series("sep", kSeparations, c1), 0.0, strictly_decreasing(c1))};
}

// 9
std::vector<LemmaEntry> interaction_decay(VerifyContext& ctx) {
  const Problem& p = ctx.problem(48);
  const GridField& u = ctx.ground(48).field;
  std::vector<double> d;
  for (int sep : kSeparations) {
    const GridField a = translate(u, {-sep / 2});
    const GridField b = translate(u, {sep - sep / 2});
    const GridField w = a + b;
    d.push_back(interaction_defect({a, b}, w, w, p.nonlinearity));
  }
  return {entry("interaction_decay", "the superposition defect of f' decays with separation",
                "functional.interaction_defect", series("sep", kSeparations, d), 0.0,
                strictly_decreasing(d) && d.back() >= 0.0)};
}

bool energies_close(const std::vector<double>& e, double base) {
  return std::all_of(e.begin(), e.end(), [&](double v) { return std::abs(v - base) <= 0.05 * std::abs(base); });
}

// 10
std::vector<LemmaEntry> multibump(VerifyContext& ctx) {
  MultibumpOptions mo;
  mo.solver = ctx.config().solver;
  std::vector<LemmaEntry> out;

  const KernelBasis kb32 = detect_kernel(ctx.ground(32), ctx.problem(32), mo.solver.kernel_tau);
  const MultibumpProblem two = make_multibump(kb32, {{-8}, {8}}, ctx.problem(32));
  const MultibumpResult r2 = solve_multibump(two, mo);
  Values v2{{"residual", r2.residual}, {"energy", r2.energy}, {"base_energy", two.base_energy}};
  for (std::size_t i = 0; i < r2.bump_energies.size(); ++i)
    v2.emplace_back("bump_energy" + std::to_string(i), r2.bump_energies[i]);
  out.push_back(entry("two_bump.k32", "two separated bumps glue to a critical point with additive energy",
                      "multibump.solve_multibump", v2, 1e-8,
                      r2.residual <= 1e-8 && energies_close(r2.bump_energies, two.base_energy)));

  const KernelBasis kb48 = detect_kernel(ctx.ground(48), ctx.problem(48), mo.solver.kernel_tau);
  const MultibumpProblem three = make_multibump(kb48, line_centers(3, 16, 1), ctx.problem(48));
  const MultibumpResult r3 = solve_multibump(three, mo);
  Values v3{{"residual", r3.residual}, {"energy", r3.energy}, {"base_energy", three.base_energy}};
  for (std::size_t i = 0; i < r3.bump_energies.size(); ++i)
    v3.emplace_back("bump_energy" + std::to_string(i), r3.bump_energies[i]);
  out.push_back(entry("three_bump.k48", "three separated bumps glue to a critical point with additive energy",
                      "multibump.solve_multibump", v3, 1e-8,
                      r3.residual <= 1e-8 && energies_close(r3.bump_energies, three.base_energy)));

  const KernelBasis forced = detect_kernel(ctx.ground(48), ctx.problem(48), mo.solver.kernel_tau, 1);
  const auto rows = separation_sweep(forced, 2, kSeparations, ctx.problem(48), mo);
  std::vector<double> w, x;
  bool ok = true;
  for (const auto& row : rows) {
    ok = ok && row.ok;
    w.push_back(row.correction_norm);
    x.push_back(row.reduced_coords_norm);
  }
  out.push_back(entry("sweep_correction", "||w_K|| -> 0 as the separation grows", "multibump.separation_sweep",
                      series("sep", kSeparations, w), 0.0, ok && strictly_decreasing(w)));
  out.push_back(entry("sweep_reduced_coords", "|x^K| -> 0 as the separation grows", "multibump.separation_sweep",
                      series("sep", kSeparations, x), 0.0, ok && strictly_decreasing(x)));
  return out;
}

// 11
std::vector<LemmaEntry> multiplicity(VerifyContext& ctx) {
  std::mt19937_64 rng = ctx.rng(11);
  const Problem& p = ctx.problem(8);
  const auto found = deflated_search({}, 50, p, rng, ctx.config().solver);
  int valid = 0;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& f : found) {
    if (validate_solution(f, Thresholds{}, p, rng, ctx.config().solver).passed()) ++valid;
    lowest = std::min(lowest, f.energy);
  }
  return {entry("multiplicity", "at least two geometrically distinct nontrivial solutions",
                "solver.deflated_search",
                {{"tries", 50}, {"distinct", static_cast<double>(found.size())}, {"validated", valid},
                 {"lowest_energy", found.empty() ? 0.0 : lowest}},
                2.0, valid >= 2)};
}

}  // namespace

bool LemmaReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const LemmaEntry& e) { return e.passed; });
}

std::string LemmaReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["passed"] = passed();
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json v = nlohmann::ordered_json::object();
    for (const auto& [k, x] : e.values) v[k] = x;
    j["entries"].push_back({{"name", e.name},
                            {"anchor", e.anchor},
                            {"operation", e.operation},
                            {"values", v},
                            {"tolerance", e.tolerance},
                            {"passed", e.passed}});
  }
  return j.dump(2) + "\n";
}

VerifyContext::VerifyContext(RunConfig config) : config_(std::move(config)) {
  if (config_.domain.dim != 1) throw ConfigError("domain.dim", 0, "verify runs on 1D tori");
}

const Problem& VerifyContext::problem(int cells) {
  auto it = problems_.find(cells);
  if (it == problems_.end()) it = problems_.emplace(cells, config_.problem(cells)).first;
  return it->second;
}

const SolutionRecord& VerifyContext::ground(int cells) {
  auto it = grounds_.find(cells);
  if (it == grounds_.end()) {
    const Problem& p = problem(cells);
    it = grounds_.emplace(cells, find_critical_point(initial_ansatz({0.0}, 0.7, 6.0, p.S()), p, config_.solver))
             .first;
  }
  return it->second;
}

std::mt19937_64 VerifyContext::rng(int id) const {
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "spectral gap", 10, spectral_gap},
      {2, "band consistency", 10, band_consistency},
      {3, "norm equivalence", 20, norm_equivalence},
      {4, "calculus checks", 30, calculus},
      {5, "nontrivial solution", 60, nontrivial_solution},
      {6, "linking sandwich", 60, linking_sandwich},
      {7, "reduction identities", 60, reduction_identities},
      {8, "superposition limit", 180, superposition_limit},
      {9, "interaction decay", 30, interaction_decay},
      {10, "multi-bump", 300, multibump},
      {11, "multiplicity", 300, multiplicity},
  };
  return all;
}

LemmaReport run_verify(const RunConfig& config) {
  VerifyContext ctx(config);
  LemmaReport report;
  report.seed = config.seed;
  for (const auto& c : criteria()) {
    auto entries = c.run(ctx);
    report.entries.insert(report.entries.end(), entries.begin(), entries.end());
  }
  return report;
}

}  // namespace gapbump
