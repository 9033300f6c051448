#include "gapbump/solver.hpp"

#include "gapbump/errors.hpp"
#include "parallel.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace gapbump {

namespace {

// Minimum-image displacement on a periodic axis of length L.
double periodic_delta(double x, double c, double length) {
  double d = std::fmod(x - c, length);
  if (d > 0.5 * length) d -= length;
  if (d < -0.5 * length) d += length;
  return d;
}

std::vector<LatticeVector> all_shifts(const TorusDomain& d) {
  std::vector<LatticeVector> out;
  if (d.dim == 1) {
    for (int b = 0; b < d.cells; ++b) out.push_back({b});
  } else {
    for (int b0 = 0; b0 < d.cells; ++b0)
      for (int b1 = 0; b1 < d.cells; ++b1) out.push_back({b0, b1});
  }
  return out;
}

LatticeVector random_shift(const TorusDomain& d, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, d.cells - 1);
  LatticeVector b(static_cast<std::size_t>(d.dim));
  for (auto& x : b) x = pick(rng);
  return b;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(newton_tol > 0 && tikhonov > 0 && tikhonov_max >= tikhonov && deflation_radius > 0 &&
        collapse_norm > 0 && kernel_tau > 0 && armijo > 0 && backtrack > 0 && backtrack < 1))
    throw std::invalid_argument("solver options: tolerances must be positive");
  if (max_iters < 1) throw std::invalid_argument("solver options: max_iters must be >= 1");
}

Problem make_problem(const TorusDomain& domain, const PeriodicPotential& potential,
                     const Nonlinearity& nl) {
  Problem p;
  p.potential = potential;
  p.nonlinearity = nl;
  p.spectrum = std::make_shared<const SpectralDecomposition>(diagonalize(potential, domain));
  p.functional = std::make_shared<const EnergyFunctional>(*p.spectrum, nl);
  return p;
}

GridField initial_ansatz(const std::vector<double>& center, double width, double amplitude,
                         const SpectralDecomposition& s) {
  if (!(width > 0)) throw std::invalid_argument("initial_ansatz: width must be positive");
  const TorusDomain& d = s.domain();
  if (static_cast<int>(center.size()) != d.dim)
    throw std::invalid_argument("initial_ansatz: center must have one entry per axis");
  const double length = d.cells;
  GridField g = GridField::sample(d, [&](const std::array<double, 2>& x) {
    double r2 = 0.0;
    for (int axis = 0; axis < d.dim; ++axis) {
      const double dx = periodic_delta(x[static_cast<std::size_t>(axis)],
                                       center[static_cast<std::size_t>(axis)], length);
      r2 += dx * dx;
    }
    return amplitude * std::exp(-r2 / (2.0 * width * width));
  });
  return project_positive(g, s);
}

SolutionRecord describe(const GridField& u, const Problem& problem, const SolverOptions& opts) {
  const EnergyFunctional& j = problem.J();
  const Eigen::VectorXd a = problem.S().to_energy_coords(u);
  SolutionRecord rec;
  rec.field = u;
  rec.energy = j.energy(a);
  rec.residual = j.gradient(a).norm();
  rec.norm_k = a.norm();
  const Eigen::VectorXd mu = j.hessian_eigenvalues(a);
  const double scale = mu.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu[i] < 0) ++rec.negative_hessian_count;
    if (std::abs(mu[i]) < opts.kernel_tau * scale) ++rec.kernel_dim_estimate;
  }
  rec.domain_fingerprint = problem.domain().fingerprint();
  rec.potential_fingerprint = problem.potential.fingerprint();
  rec.nonlinearity_fingerprint = problem.nonlinearity.fingerprint();
  return rec;
}

SolutionRecord find_critical_point(const GridField& init, const Problem& problem,
                                   const SolverOptions& opts) {
  opts.validate();
  const EnergyFunctional& j = problem.J();
  const Eigen::VectorXd& signs = problem.S().signs();
  Eigen::VectorXd a = problem.S().to_energy_coords(init);
  std::vector<double> history;

  int iter = 0;
  for (;; ++iter) {
    const Eigen::VectorXd g = j.gradient(a);
    const double r = g.norm();
    history.push_back(r);
    if (a.norm() < opts.collapse_norm) {
      std::ostringstream os;
      os << "Newton iterate collapsed onto u = 0 (||u||_k = " << a.norm() << ") after " << iter
         << " iterations";
      throw TrivialCollapse(os.str());
    }
    if (r <= opts.newton_tol) break;
    if (iter >= opts.max_iters) {
      std::ostringstream os;
      os << "Newton did not converge in " << opts.max_iters << " iterations (residual " << r << ")";
      throw NoConvergence(os.str());
    }

    const Eigen::MatrixXd h = j.hessian(a);
    Eigen::VectorXd step;
    for (double mu = opts.tikhonov;; mu *= 10.0) {
      if (mu > opts.tikhonov_max * (1.0 + 1e-12))
        throw NoConvergence("Newton: Hessian stays singular under the maximal Tikhonov ridge");
      Eigen::MatrixXd shifted = h;
      shifted.diagonal() += mu * signs;
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
      if (!(lu.rcond() > 1e-14)) continue;
      step = lu.solve(-g);
      if (step.allFinite()) break;
    }

    const double merit = 0.5 * r * r;
    double t = 1.0;
    Eigen::VectorXd next;
    for (;;) {
      next = a + t * step;
      const double trial = 0.5 * j.gradient(next).squaredNorm();
      if (trial <= (1.0 - 2.0 * opts.armijo * t) * merit) break;
      t *= opts.backtrack;
      if (t < 1e-10) throw NoConvergence("Newton: line search failed to reduce the residual");
    }
    a = std::move(next);
  }

  SolutionRecord rec = describe(problem.S().field(a), problem, opts);
  rec.iterations = iter;
  rec.residual_history = std::move(history);
  return rec;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check& ValidationReport::at(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no validation check named " + name);
}

ValidationReport validate_solution(const SolutionRecord& rec, const Thresholds& thresholds,
                                   const Problem& problem, std::mt19937_64& rng,
                                   const SolverOptions& opts) {
  const EnergyFunctional& j = problem.J();
  const SpectralDecomposition& s = problem.S();
  const Eigen::VectorXd a = s.to_energy_coords(rec.field);
  const double energy = j.energy(a);
  const double norm = a.norm();
  const double residual = j.gradient(a).norm();

  ValidationReport rep;
  rep.checks.push_back({"norm_lower_bound", norm, thresholds.eps1, norm >= thresholds.eps1});
  rep.checks.push_back({"energy_lower_bound", energy, thresholds.eps2, energy >= thresholds.eps2});
  rep.checks.push_back({"residual", residual, opts.newton_tol, residual <= opts.newton_tol});
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    const GridField shifted = translate(rec.field, random_shift(s.domain(), rng));
    const double e = j.energy(s.to_energy_coords(shifted));
    worst = std::max(worst, std::abs(e - energy) / std::max(1.0, std::abs(energy)));
  }
  rep.checks.push_back({"translation_invariance", worst, 1e-12, worst <= 1e-12});
  return rep;
}

SphereLevel sphere_level(const Problem& problem, double r, int samples, std::mt19937_64& rng) {
  if (!(r > 0)) throw std::invalid_argument("sphere_level: radius must be positive");
  const EnergyFunctional& j = problem.J();
  const SpectralDecomposition& s = problem.S();
  const auto n = static_cast<Eigen::Index>(s.size());
  const Eigen::Index ny = s.negative_count();

  auto to_sphere = [&](Eigen::VectorXd z) {
    z.head(ny).setZero();
    const double nz = z.norm();
    if (nz == 0.0) return z;
    return Eigen::VectorXd(z * (r / nz));
  };

  // Candidates: white noise on Z_k plus localised bumps at the two
  // inequivalent high-symmetry points of the cell.
  std::vector<Eigen::VectorXd> candidates;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd z(n);
    for (Eigen::Index k = 0; k < n; ++k) z[k] = gauss(rng);
    candidates.push_back(to_sphere(z));
  }
  for (double c : {0.0, 0.5}) {
    const std::vector<double> center(static_cast<std::size_t>(s.domain().dim), c);
    candidates.push_back(to_sphere(s.to_energy_coords(initial_ansatz(center, 0.5, 1.0, s))));
  }

  Eigen::VectorXd z;
  double f = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    const double e = j.energy(c);
    if (e < f) {
      f = e;
      z = c;
    }
  }
  SphereLevel out;
  out.radius = r;
  out.best_sample = f;

  double step = 1.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd g = j.gradient(z);
    g.head(ny).setZero();
    const Eigen::VectorXd tangent = g - (g.dot(z) / (r * r)) * z;
    const double gn2 = tangent.squaredNorm();
    if (std::sqrt(gn2) <= 1e-10 * std::max(1.0, r)) break;
    bool moved = false;
    while (step > 1e-14) {
      const Eigen::VectorXd trial = to_sphere(z - step * tangent);
      const double ft = j.energy(trial);
      if (ft <= f - 1e-4 * step * gn2) {
        z = trial;
        f = ft;
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  out.level = f;
  out.minimizer = s.field(z);
  return out;
}

namespace {

// Projected gradient ascent of J over v = (y, t) ↦ y ⊕ t z, with `project`
// mapping into the feasible set.
template <class Project>
std::pair<double, Eigen::VectorXd> ascend(const EnergyFunctional& j, const Eigen::VectorXd& zc,
                                          Eigen::Index ny, Eigen::VectorXd v, Project project) {
  auto assemble = [&](const Eigen::VectorXd& vv) {
    Eigen::VectorXd a = vv[ny] * zc;
    a.head(ny) += vv.head(ny);
    return a;
  };
  v = project(v);
  double f = j.energy(assemble(v));
  double step = 1.0;
  for (int it = 0; it < 5000; ++it) {
    const Eigen::VectorXd g = j.gradient(assemble(v));
    Eigen::VectorXd gv(ny + 1);
    gv.head(ny) = g.head(ny);
    gv[ny] = g.dot(zc);
    bool moved = false;
    double change = 0.0;
    while (step > 1e-14) {
      const Eigen::VectorXd trial = project(v + step * gv);
      const Eigen::VectorXd dv = trial - v;
      const double ft = j.energy(assemble(trial));
      if (ft >= f + 1e-4 * gv.dot(dv) && dv.norm() > 0.0) {
        change = dv.norm();
        v = trial;
        f = ft;
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || change <= 1e-12 * (1.0 + v.norm())) break;
  }
  return {f, assemble(v)};
}

}  // namespace

LinkingBound linking_upper_bound(const Problem& problem, const GridField& z, double rho, int samples,
                                 std::mt19937_64& rng) {
  if (!(rho > 0)) throw std::invalid_argument("linking_upper_bound: rho must be positive");
  const EnergyFunctional& j = problem.J();
  const SpectralDecomposition& s = problem.S();
  const Eigen::Index ny = s.negative_count();
  const Eigen::VectorXd zc = s.to_energy_coords(z);
  if (zc.head(ny).norm() > 1e-8 || std::abs(zc.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("linking_upper_bound: z must be a unit vector of Z_k");

  auto into_set = [&](Eigen::VectorXd v) {
    v[ny] = std::max(v[ny], 0.0);
    const double nv = v.norm();
    if (nv > rho) v *= rho / nv;
    return v;
  };
  auto onto_cap = [&](Eigen::VectorXd v) {
    v[ny] = std::max(v[ny], 0.0);
    const double nv = v.norm();
    if (nv == 0.0) {
      v[ny] = rho;
      return v;
    }
    return Eigen::VectorXd(v * (rho / nv));
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_y = [&](double radius) {
    Eigen::VectorXd y(ny);
    for (Eigen::Index i = 0; i < ny; ++i) y[i] = gauss(rng);
    if (ny > 0 && y.norm() > 0) y *= radius / y.norm();
    return y;
  };

  LinkingBound out;
  out.rho = rho;
  out.bound = -std::numeric_limits<double>::infinity();
  // Sup over the flat face t = 0 is J(0) = 0; the curved face is searched.
  out.boundary_sup = 0.0;
  const int starts = std::max(samples, 1);
  for (int i = 0; i < starts; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ny + 1);
    v[ny] = rho * (i + 0.5) / starts;
    if (i % 2 == 1) v.head(ny) = random_y(0.3 * rho * unit(rng));
    auto [f, a] = ascend(j, zc, ny, v, into_set);
    if (f > out.bound) {
      out.bound = f;
      out.maximizer = s.field(a);
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(ny + 1);
    const double angle = 0.5 * std::numbers::pi * i / starts;
    w[ny] = rho * std::cos(angle);
    if (ny > 0) w.head(ny) = random_y(rho * std::sin(angle));
    auto [fb, ab] = ascend(j, zc, ny, w, onto_cap);
    out.boundary_sup = std::max(out.boundary_sup, fb);
  }
  return out;
}

LinkingBound linking_radius_scan(const Problem& problem, const GridField& z, double rho0, int samples,
                                 std::mt19937_64& rng, double tol, int max_doublings) {
  double rho = rho0;
  for (int i = 0; i <= max_doublings; ++i, rho *= 2.0) {
    LinkingBound lb = linking_upper_bound(problem, z, rho, samples, rng);
    if (lb.boundary_sup <= tol) return lb;
  }
  throw NoConvergence("linking_radius_scan: boundary sup stays positive");
}

OrbitDistance orbit_distance(const GridField& u, const GridField& v, const SpectralDecomposition& s) {
  require_same_domain(u.domain(), v.domain(), "orbit_distance");
  const Eigen::VectorXd au = s.to_energy_coords(u);
  OrbitDistance best{std::numeric_limits<double>::infinity(), {}};
  for (const auto& b : all_shifts(u.domain())) {
    const double d = (au - s.to_energy_coords(translate(v, b))).norm();
    if (d < best.distance) best = {d, b};
  }
  return best;
}

bool geometrically_equivalent(const GridField& u, const GridField& v, const SpectralDecomposition& s,
                              double radius) {
  return orbit_distance(u, v, s).distance <= radius;
}

std::vector<SolutionRecord> deflated_search_from(const std::vector<SolutionRecord>& known,
                                                 const std::vector<GridField>& starts,
                                                 const Problem& problem, const SolverOptions& opts) {
  const SpectralDecomposition& s = problem.S();
  auto results = detail::parallel_map(starts.size(), [&](std::size_t i) -> std::optional<SolutionRecord> {
    try {
      return find_critical_point(starts[i], problem, opts);
    } catch (const NumericError&) {
      return std::nullopt;
    }
  });

  std::vector<SolutionRecord> found;
  auto is_new = [&](const SolutionRecord& rec) {
    for (const auto& k : known)
      if (geometrically_equivalent(rec.field, k.field, s, opts.deflation_radius)) return false;
    for (const auto& k : found)
      if (geometrically_equivalent(rec.field, k.field, s, opts.deflation_radius)) return false;
    return true;
  };
  for (auto& rec : results)
    if (rec && is_new(*rec)) found.push_back(std::move(*rec));
  return found;
}

std::vector<SolutionRecord> deflated_search(const std::vector<SolutionRecord>& known, int tries,
                                            const Problem& problem, std::mt19937_64& rng,
                                            const SolverOptions& opts) {
  if (tries <= 0) return {};
  const SpectralDecomposition& s = problem.S();
  const TorusDomain& d = s.domain();

  // Random one- or two-hump ansätze of either sign.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GridField> starts;
  for (int t = 0; t < tries; ++t) {
    std::vector<double> c1(static_cast<std::size_t>(d.dim));
    for (auto& c : c1) c = -0.5 * d.cells + d.cells * unit(rng);
    const double width = 0.4 + 0.8 * unit(rng);
    const double amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (4.0 + 6.0 * unit(rng));
    GridField init = initial_ansatz(c1, width, amp, s);
    if (unit(rng) < 1.0 / 3.0) {
      std::vector<double> c2 = c1;
      c2[0] += 1.0 + 2.0 * unit(rng);
      const double amp2 = (unit(rng) < 0.5 ? -1.0 : 1.0) * (4.0 + 6.0 * unit(rng));
      init = init + initial_ansatz(c2, width, amp2, s);
    }
    starts.push_back(std::move(init));
  }
  return deflated_search_from(known, starts, problem, opts);
}

}  // namespace gapbump
