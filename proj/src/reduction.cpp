#include "gapbump/reduction.hpp"

#include "gapbump/errors.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gapbump {

GridField KernelBasis::field(int j) const { return problem.S().field(basis.col(j)); }

std::vector<GridField> KernelBasis::fields() const {
  std::vector<GridField> out;
  for (int j = 0; j < dim(); ++j) out.push_back(field(j));
  return out;
}

KernelBasis detect_kernel(const SolutionRecord& rec, const Problem& problem, double tau,
                          std::optional<int> forced_dim) {
  if (!(tau > 0)) throw std::invalid_argument("detect_kernel: tau must be positive");
  require_same_domain(rec.field.domain(), problem.domain(), "detect_kernel");
  const EnergyFunctional& j = problem.J();
  KernelBasis kb;
  kb.problem = problem;
  kb.base = rec;
  kb.tau = tau;
  kb.base_coords = problem.S().to_energy_coords(rec.field);
  const double residual = j.gradient(kb.base_coords).norm();
  if (residual > 1e-8) {
    std::ostringstream os;
    os << "detect_kernel: base is not a critical point (residual " << residual << ")";
    throw std::invalid_argument(os.str());
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j.hessian(kb.base_coords));
  if (eig.info() != Eigen::Success) throw NumericError("detect_kernel: Hessian eigensolve failed");
  const Eigen::VectorXd& mu = eig.eigenvalues();
  const auto n = mu.size();
  kb.scale = mu.cwiseAbs().maxCoeff();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(mu[a]) < std::abs(mu[b]);
  });

  Eigen::Index l = 0;
  if (forced_dim) {
    if (*forced_dim < 0) throw std::invalid_argument("detect_kernel: forced_dim must be >= 0");
    l = *forced_dim;
  } else {
    while (l < n && std::abs(mu[order[static_cast<std::size_t>(l)]]) < tau * kb.scale) ++l;
  }
  if (l >= n || kb.scale == 0.0)
    throw AllKernel("detect_kernel: every Hessian eigenvalue falls in the kernel");

  kb.basis.resize(n, l);
  kb.kernel_values.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const Eigen::Index c = order[static_cast<std::size_t>(i)];
    kb.basis.col(i) = eig.eigenvectors().col(c);
    kb.kernel_values[i] = mu[c];
  }
  const double gap = std::abs(mu[order[static_cast<std::size_t>(l)]]);
  if (gap == 0.0) throw AllKernel("detect_kernel: complement contains an exact zero mode");
  kb.eta = 1.0 / gap;
  kb.delta0 = 0.3 / kb.eta;
  return kb;
}

namespace {

Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& e) {
  if (e.cols() == 0) return Eigen::MatrixXd(e.rows(), 0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(e);
  return qr.householderQ() * Eigen::MatrixXd::Identity(e.rows(), e.cols());
}

// Largest |eigenvalue| of the inverse restricted to the complement, by power
// iteration from a fixed start so results are reproducible.
double inverse_bound(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return q.cols() == 0 ? v : Eigen::VectorXd(v - q * (q.transpose() * v));
  };
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i));
  v = project(v);
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd next = project(lu.solve(v));
    est = next.norm();
    if (!(est > 0)) break;
    v = next / est;
  }
  return est;
}

}  // namespace

ReducedSample reduced_evaluate(const EnergyFunctional& J, const Eigen::VectorXd& anchor,
                               const Eigen::MatrixXd& directions, const Eigen::VectorXd& x,
                               double eta_ref, const SolverOptions& opts,
                               const Eigen::VectorXd* warm_start) {
  opts.validate();
  const Eigen::Index n = anchor.size();
  if (directions.rows() != n || directions.cols() != x.size())
    throw std::invalid_argument("reduced_evaluate: dimension mismatch");
  const Eigen::MatrixXd q = orthonormal_span(directions);
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return q.cols() == 0 ? v : Eigen::VectorXd(v - q * (q.transpose() * v));
  };

  const Eigen::VectorXd shifted = anchor + directions * x;
  Eigen::VectorXd w = warm_start ? project(*warm_start) : Eigen::VectorXd::Zero(n);

  ReducedSample out;
  out.x = x;
  int iter = 0;
  Eigen::VectorXd g;
  for (;; ++iter) {
    g = J.gradient(shifted + w);
    const Eigen::VectorXd pg = project(g);
    const double r = pg.norm();
    out.projected_residual = r;
    if (r <= opts.newton_tol) break;
    if (iter >= opts.max_iters) {
      std::ostringstream os;
      os << "projected Newton did not converge (residual " << r << ")";
      throw NoConvergence(os.str());
    }

    // (Π H Π + Q Qᵀ) d = -Π g, assembled without forming Π.
    Eigen::MatrixXd a = J.hessian(shifted + w);
    if (q.cols() > 0) {
      const Eigen::MatrixXd hq = a * q;
      const Eigen::MatrixXd qhq = q.transpose() * hq;
      a -= hq * q.transpose() + q * hq.transpose();
      a += q * (qhq + Eigen::MatrixXd::Identity(q.cols(), q.cols())) * q.transpose();
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-14)) throw NoConvergence("projected Hessian is singular");
    const double est = inverse_bound(lu, q);
    out.eta_estimate = std::max(out.eta_estimate, est);
    if (eta_ref > 0 && est > 2.0 * eta_ref) {
      std::ostringstream os;
      os << "projected Hessian inverse bound doubled (" << est << " > 2 x " << eta_ref << ")";
      throw NoConvergence(os.str());
    }
    const Eigen::VectorXd d = project(lu.solve(-pg));

    const double merit = 0.5 * r * r;
    double t = 1.0;
    for (;;) {
      const Eigen::VectorXd trial = w + t * d;
      const double m = 0.5 * project(J.gradient(shifted + trial)).squaredNorm();
      if (m <= (1.0 - 2.0 * opts.armijo * t) * merit) {
        w = trial;
        break;
      }
      t *= opts.backtrack;
      if (t < 1e-10) throw NoConvergence("projected Newton: line search failed");
    }
  }

  out.newton_iters = iter;
  out.w_coords = w;
  out.w = J.spectrum().field(w);
  out.I = J.energy(shifted + w);
  out.dI = directions.transpose() * g;
  return out;
}

ReducedSample solve_w(const KernelBasis& kb, const Eigen::VectorXd& x, const SolverOptions& opts,
                      const Eigen::VectorXd* warm_start) {
  if (x.size() != kb.dim()) throw std::invalid_argument("solve_w: coordinate length must equal dim");
  if (x.norm() > kb.delta0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "solve_w: |||h||| = " << x.norm() << " exceeds delta0 = " << kb.delta0;
    throw OutOfBall(os.str());
  }
  return reduced_evaluate(kb.problem.J(), kb.base_coords, kb.basis, x, kb.eta, opts, warm_start);
}

ReducedSample solve_w(const KernelBasis& kb, const GridField& h, const SolverOptions& opts) {
  const Eigen::VectorXd c = kb.problem.S().to_energy_coords(h);
  const Eigen::VectorXd x = kb.basis.transpose() * c;
  if ((c - kb.basis * x).norm() > 1e-8 * std::max(1.0, c.norm()))
    throw std::invalid_argument("solve_w: h does not lie in the kernel span");
  return solve_w(kb, x, opts);
}

std::vector<ReducedSample> solve_w_batch(const KernelBasis& kb, const std::vector<Eigen::VectorXd>& xs,
                                         const SolverOptions& opts) {
  return detail::parallel_map(xs.size(), [&](std::size_t i) { return solve_w(kb, xs[i], opts); });
}

OriginClassification classify_origin(const KernelBasis& kb, double grid_radius, int stencil,
                                     const SolverOptions& opts) {
  const int l = kb.dim();
  if (l == 0) throw std::invalid_argument("classify_origin: kernel is empty, nothing to classify");
  if (stencil != 3 && stencil != 5) throw std::invalid_argument("classify_origin: stencil must be 3 or 5");
  if (!(grid_radius > 0)) throw std::invalid_argument("classify_origin: grid_radius must be positive");
  const double h = grid_radius;

  // Collect every stencil point once, evaluate, then assemble.
  std::vector<Eigen::VectorXd> pts;
  auto add = [&](const Eigen::VectorXd& p) {
    pts.push_back(p);
    return pts.size() - 1;
  };
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(l);
  const std::size_t i0 = add(zero);
  std::vector<std::array<std::size_t, 4>> axial(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(l, i);
    auto& a = axial[static_cast<std::size_t>(i)];
    a[0] = add(h * e);
    a[1] = add(-h * e);
    if (stencil == 5) {
      a[2] = add(2 * h * e);
      a[3] = add(-2 * h * e);
    }
  }
  std::vector<std::array<std::size_t, 4>> cross;
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) {
      const Eigen::VectorXd ei = Eigen::VectorXd::Unit(l, i);
      const Eigen::VectorXd ej = Eigen::VectorXd::Unit(l, j);
      cross.push_back({add(h * (ei + ej)), add(h * (ei - ej)), add(h * (-ei + ej)), add(-h * (ei + ej))});
    }
  const std::vector<ReducedSample> s = solve_w_batch(kb, pts, opts);
  auto I = [&](std::size_t k) { return s[k].I; };

  OriginClassification out;
  out.reduced_hessian = Eigen::MatrixXd::Zero(l, l);
  for (int i = 0; i < l; ++i) {
    const auto& a = axial[static_cast<std::size_t>(i)];
    out.reduced_hessian(i, i) =
        stencil == 3 ? (I(a[0]) - 2 * I(i0) + I(a[1])) / (h * h)
                     : (-I(a[2]) + 16 * I(a[0]) - 30 * I(i0) + 16 * I(a[1]) - I(a[3])) / (12 * h * h);
  }
  std::size_t c = 0;
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j, ++c) {
      const auto& q = cross[c];
      const double v = (I(q[0]) - I(q[1]) - I(q[2]) + I(q[3])) / (4 * h * h);
      out.reduced_hessian(i, j) = v;
      out.reduced_hessian(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.reduced_hessian, Eigen::EigenvaluesOnly);
  out.reduced_eigenvalues = eig.eigenvalues();
  for (Eigen::Index i = 0; i < l; ++i) {
    const double v = out.reduced_eigenvalues[i];
    if (std::abs(v) < 1e-6 * kb.scale) out.degenerate = true;
    else if (v < 0) ++out.morse_index;
  }
  return out;
}

SuperpositionGap superposition_compare(const KernelBasis& kb, const std::vector<LatticeVector>& centers,
                                       const std::vector<Eigen::VectorXd>& sample_points,
                                       const SolverOptions& opts) {
  if (centers.size() != 2) throw std::invalid_argument("superposition_compare: needs two centers");
  const SpectralDecomposition& s = kb.problem.S();
  const TorusDomain& d = s.domain();
  for (const auto& c : centers)
    if (static_cast<int>(c.size()) != d.dim)
      throw std::invalid_argument("superposition_compare: center dimension mismatch");
  double sep2 = 0.0;
  for (int a = 0; a < d.dim; ++a) {
    double diff = std::abs(centers[0][static_cast<std::size_t>(a)] - centers[1][static_cast<std::size_t>(a)]);
    diff = std::fmod(diff, d.cells);
    diff = std::min(diff, d.cells - diff);
    sep2 += diff * diff;
  }
  if (sep2 == 0.0) throw CentersCollide("superposition_compare: centers coincide");
  if (std::sqrt(sep2) < 2.0) throw std::invalid_argument("superposition_compare: separation below 2");

  const int l = kb.dim();
  const GridField base = s.field(kb.base_coords);
  const std::vector<GridField> kernel = kb.fields();
  Eigen::VectorXd anchor = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size()));
  Eigen::MatrixXd e(static_cast<Eigen::Index>(s.size()), 2 * l);
  for (int i = 0; i < 2; ++i) {
    LatticeVector back = centers[static_cast<std::size_t>(i)];
    for (auto& v : back) v = -v;
    anchor += s.to_energy_coords(translate(base, back));
    for (int j = 0; j < l; ++j)
      e.col(i * l + j) = s.to_energy_coords(translate(kernel[static_cast<std::size_t>(j)], back));
  }

  SuperpositionGap out;
  out.gram = e.transpose() * e;
  for (const auto& x : sample_points)
    if (x.size() != 2 * l) throw std::invalid_argument("superposition_compare: sample length must be 2l");
  const auto gaps = detail::parallel_map(sample_points.size(), [&](std::size_t k) {
    const Eigen::VectorXd& x = sample_points[k];
    const ReducedSample joint = reduced_evaluate(kb.problem.J(), anchor, e, x, kb.eta, opts);
    const ReducedSample s1 = solve_w(kb, Eigen::VectorXd(x.head(l)), opts);
    const ReducedSample s2 = solve_w(kb, Eigen::VectorXd(x.tail(l)), opts);
    Eigen::VectorXd sum_grad(2 * l);
    sum_grad << s1.dI, s2.dI;
    return std::make_pair(std::abs(joint.I - (s1.I + s2.I)), (joint.dI - sum_grad).norm());
  });
  for (const auto& [c0, c1] : gaps) {
    out.c0_gaps.push_back(c0);
    out.c1_gaps.push_back(c1);
    out.max_c0_gap = std::max(out.max_c0_gap, c0);
    out.max_c1_gap = std::max(out.max_c1_gap, c1);
  }
  return out;
}

}  // namespace gapbump
