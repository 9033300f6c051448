#include "gapbump/multibump.hpp"

#include "gapbump/errors.hpp"
#include "parallel.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gapbump {

namespace {

LatticeVector negated(LatticeVector b) {
  for (auto& v : b) v = -v;
  return b;
}

double min_image(double d, int cells) {
  d = std::fmod(std::abs(d), static_cast<double>(cells));
  return std::min(d, cells - d);
}

void check_centers(const std::vector<LatticeVector>& centers, const TorusDomain& d) {
  if (centers.empty()) throw std::invalid_argument("multibump: at least one center is required");
  for (const auto& c : centers)
    if (static_cast<int>(c.size()) != d.dim)
      throw std::invalid_argument("multibump: center dimension does not match the torus");
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      bool same = true;
      for (int a = 0; a < d.dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (min_image(centers[i][ua] - centers[j][ua], d.cells) != 0.0) same = false;
      }
      if (same) throw CentersCollide("multibump: two centers coincide on the torus");
    }
}

GridField onto(const GridField& f, const TorusDomain& target) {
  return f.domain() == target ? f : embed_with_cutoff(f, target);
}

}  // namespace

double center_separation(const std::vector<LatticeVector>& centers, int cells) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < centers[i].size(); ++a) {
        const double d = min_image(centers[i][a] - centers[j][a], cells);
        d2 += d * d;
      }
      best = std::min(best, std::sqrt(d2));
    }
  return best;
}

GridField superpose(const GridField& base, const std::vector<LatticeVector>& centers,
                    const TorusDomain& domain) {
  check_centers(centers, domain);
  const GridField b = onto(base, domain);
  GridField sum(domain);
  for (const auto& c : centers) sum = sum + translate(b, negated(c));
  return sum;
}

MultibumpProblem make_multibump(const KernelBasis& kb, const std::vector<LatticeVector>& centers,
                                const Problem& target) {
  const TorusDomain& d = target.domain();
  check_centers(centers, d);
  const SpectralDecomposition& s = target.S();
  MultibumpProblem mp;
  mp.problem = target;
  mp.base = kb.base;
  mp.centers = centers;
  mp.l_sep = center_separation(centers, d.cells);
  mp.base_energy = kb.base.energy;
  mp.kernel_dim = kb.dim();
  mp.eta = kb.eta;
  mp.delta0 = kb.delta0;

  const GridField base = onto(kb.base.field, d);
  std::vector<GridField> kernel;
  for (const auto& e : kb.fields()) kernel.push_back(onto(e, d));

  const auto n = static_cast<Eigen::Index>(s.size());
  const auto m = static_cast<Eigen::Index>(centers.size());
  const Eigen::Index l = kb.dim();
  mp.anchor = Eigen::VectorXd::Zero(n);
  mp.joint_kernel.resize(n, m * l);
  for (Eigen::Index i = 0; i < m; ++i) {
    const LatticeVector back = negated(centers[static_cast<std::size_t>(i)]);
    mp.anchor += s.to_energy_coords(translate(base, back));
    for (Eigen::Index j = 0; j < l; ++j)
      mp.joint_kernel.col(i * l + j) = s.to_energy_coords(translate(kernel[static_cast<std::size_t>(j)], back));
  }
  return mp;
}

std::vector<double> bump_energy_split(const GridField& u, const std::vector<LatticeVector>& centers,
                                      const Problem& problem) {
  const TorusDomain& d = problem.domain();
  require_same_domain(u.domain(), d, "bump_energy_split");
  const GridField density = problem.J().energy_density(problem.S().to_energy_coords(u));
  std::vector<double> out(centers.size(), 0.0);
  for (std::size_t p = 0; p < d.size(); ++p) {
    const auto x = d.point(p);
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      double r2 = 0.0;
      for (int a = 0; a < d.dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double dx = min_image(x[ua] - centers[c][ua], d.cells);
        r2 += dx * dx;
      }
      if (r2 < best) {
        best = r2;
        nearest = c;
      }
    }
    out[nearest] += density[p];
  }
  for (auto& e : out) e *= d.cell_weight();
  return out;
}

MultibumpResult solve_multibump(const MultibumpProblem& mp, const MultibumpOptions& opts) {
  if (mp.centers.size() >= 2 && mp.l_sep < opts.min_separation) {
    std::ostringstream os;
    os << "multibump: separation " << mp.l_sep << " is below the floor " << opts.min_separation;
    throw SeparationTooSmall(os.str());
  }
  const EnergyFunctional& j = mp.problem.J();
  const SpectralDecomposition& s = mp.problem.S();
  const Eigen::MatrixXd& e = mp.joint_kernel;
  const Eigen::Index dim = e.cols();

  auto evaluate = [&](const Eigen::VectorXd& x, const Eigen::VectorXd* warm, const char* phase) {
    try {
      return reduced_evaluate(j, mp.anchor, e, x, mp.eta, opts.solver, warm);
    } catch (const NumericError& err) {
      throw NoConvergence(std::string(phase) + ": " + err.what());
    }
  };

  MultibumpResult out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  ReducedSample cur = evaluate(x, nullptr, "phase 1 (projected correction)");
  out.phase1_residual = cur.projected_residual;

  if (dim > 0) {
    const double h = opts.reduced_fd_step;
    int it = 0;
    for (; cur.dI.norm() > opts.reduced_tol; ++it) {
      if (it >= opts.reduced_max_iters)
        throw NoConvergence("phase 2 (reduced Newton): iteration limit reached");
      Eigen::MatrixXd hess(dim, dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const Eigen::VectorXd step = h * Eigen::VectorXd::Unit(dim, i);
        const ReducedSample plus = evaluate(x + step, &cur.w_coords, "phase 2 (reduced Newton)");
        const ReducedSample minus = evaluate(x - step, &cur.w_coords, "phase 2 (reduced Newton)");
        hess.col(i) = (plus.dI - minus.dI) / (2 * h);
      }
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(hess);
      if (!lu.isInvertible()) throw NoConvergence("phase 2 (reduced Newton): singular reduced Hessian");
      Eigen::VectorXd d = lu.solve(-cur.dI);
      const double g0 = cur.dI.norm();
      bool accepted = false;
      for (double t = 1.0; t > 1e-6; t *= 0.5) {
        Eigen::VectorXd trial = x + t * d;
        if (trial.norm() > mp.delta0) continue;
        ReducedSample next = evaluate(trial, &cur.w_coords, "phase 2 (reduced Newton)");
        if (next.dI.norm() < g0) {
          x = std::move(trial);
          cur = std::move(next);
          accepted = true;
          break;
        }
      }
      if (!accepted) throw NoConvergence("phase 2 (reduced Newton): no decrease inside the delta ball");
    }
    out.reduced_iters = it;
  }
  out.reduced_coords = x;
  out.reduced_coords_norm = x.norm();
  out.correction_norm = cur.w_coords.norm();

  const Eigen::VectorXd assembled = mp.anchor + e * x + cur.w_coords;
  SolutionRecord polished;
  try {
    polished = find_critical_point(s.field(assembled), mp.problem, opts.solver);
  } catch (const NumericError& err) {
    throw NoConvergence(std::string("phase 3 (polish): ") + err.what());
  }
  out.drift = (s.to_energy_coords(polished.field) - assembled).norm();
  if (out.drift > opts.solver.deflation_radius) {
    std::ostringstream os;
    os << "multibump: polish drifted " << out.drift << " from the glued field";
    throw GluingUnstable(os.str());
  }
  out.field = polished.field;
  out.residual = polished.residual;
  out.energy = polished.energy;
  out.polish_iters = polished.iterations;
  out.bump_energies = bump_energy_split(out.field, mp.centers, mp.problem);
  return out;
}

std::vector<LatticeVector> line_centers(int m, int separation, int dim) {
  if (m < 1) throw std::invalid_argument("line_centers: m must be >= 1");
  std::vector<LatticeVector> out;
  const int first = -((m - 1) * separation) / 2;
  for (int i = 0; i < m; ++i) {
    LatticeVector c(static_cast<std::size_t>(dim), 0);
    c[0] = first + i * separation;
    out.push_back(c);
  }
  return out;
}

std::vector<SweepRow> separation_sweep(const KernelBasis& kb, int m, const std::vector<int>& separations,
                                       const Problem& target, const MultibumpOptions& opts) {
  if (!std::is_sorted(separations.begin(), separations.end()))
    throw std::invalid_argument("separation_sweep: separations must be ascending");
  const int dim = target.domain().dim;
  return detail::parallel_map(separations.size(), [&](std::size_t i) {
    SweepRow row;
    row.separation = separations[i];
    try {
      const auto centers = line_centers(m, row.separation, dim);
      const MultibumpProblem mp = make_multibump(kb, centers, target);
      const MultibumpResult res = solve_multibump(mp, opts);
      row.ok = true;
      row.correction_norm = res.correction_norm;
      row.reduced_coords_norm = res.reduced_coords_norm;
      row.residual = res.residual;
      row.energy_gap = res.energy - m * mp.base_energy;
    } catch (const std::exception& err) {
      row.error = err.what();
    }
    return row;
  });
}

}  // namespace gapbump
