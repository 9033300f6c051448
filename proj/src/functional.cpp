#include "gapbump/functional.hpp"

#include "gapbump/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gapbump {

namespace {

// |t|^e with an exact fast path for the common integer exponents.
double abs_pow(double t, double e) {
  const double a = std::abs(t);
  if (e == 2.0) return a * a;
  if (e == 1.0) return a;
  if (e == 3.0) return a * a * a;
  if (e == 4.0) return (a * a) * (a * a);
  return std::pow(a, e);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

void Nonlinearity::validate() const {
  if (!(p >= 3.0)) throw std::invalid_argument("nonlinearity: exponent p must be >= 3");
  if (!(q > 2.0 && q <= p)) throw std::invalid_argument("nonlinearity: need 2 < q <= p");
  if (!(gamma > 2.0)) throw std::invalid_argument("nonlinearity: need gamma > 2");
  // Lower bound of h: exact for tables, -shift - Σ|a| for cosine sums.
  double lowest = 0.0;
  if (weight.kind() == PeriodicPotential::Kind::Tabulated) {
    lowest = *std::min_element(weight.table().begin(), weight.table().end()) - weight.shift();
  } else {
    lowest = -weight.shift();
    for (const auto& t : weight.terms()) lowest -= std::abs(t.amplitude);
  }
  if (lowest < 0.0) throw std::invalid_argument("nonlinearity: weight h must be >= 0");
}

double Nonlinearity::f(double h, double t) const { return h * abs_pow(t, p - 2.0) * t; }

double Nonlinearity::primitive(double h, double t) const { return h * abs_pow(t, p) / p; }

double Nonlinearity::derivative(double h, double t) const {
  return (p - 1.0) * h * abs_pow(t, p - 2.0);
}

std::string Nonlinearity::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "power(p=" << p << ",q=" << q << ",gamma=" << gamma << ",h=" << weight.fingerprint()
     << (dealias ? ",dealias" : "") << ")";
  return os.str();
}

EnergyFunctional::EnergyFunctional(const SpectralDecomposition& spectrum, Nonlinearity nl)
    : spectrum_(&spectrum), nl_(std::move(nl)) {
  nl_.validate();
  spectrum.require_gap();
  const TorusDomain& d = spectrum.domain();
  if (!nl_.dealias) {
    eval_synthesis_ = spectrum.synthesis();
    quad_weight_ = d.cell_weight();
    eval_weight_ = nl_.weight.on_grid(d).values() * quad_weight_;
    return;
  }
  // 3/2-refined grid: trigonometric interpolation of u, quadrature there.
  const int n = d.points_per_axis();
  const int nf = 3 * n / 2;
  const Eigen::MatrixXd p1 = interpolation_matrix(n, nf);
  const Eigen::MatrixXd interp = d.dim == 1 ? p1 : kron(p1, p1);
  eval_synthesis_ = interp * spectrum.synthesis();
  const double hf = static_cast<double>(d.cells) / nf;
  quad_weight_ = std::pow(hf, d.dim);
  const Eigen::Index total = interp.rows();
  eval_weight_.resize(total);
  for (Eigen::Index r = 0; r < total; ++r) {
    std::array<double, 2> x{};
    if (d.dim == 1) {
      x[0] = -0.5 * d.cells + static_cast<double>(r) * hf;
    } else {
      x[0] = -0.5 * d.cells + static_cast<double>(r / nf) * hf;
      x[1] = -0.5 * d.cells + static_cast<double>(r % nf) * hf;
    }
    eval_weight_[r] = nl_.weight(x, d.dim) * quad_weight_;
  }
}

Eigen::VectorXd EnergyFunctional::eval_values(const Eigen::VectorXd& a) const {
  return eval_synthesis_ * a;
}

double EnergyFunctional::potential_energy(const Eigen::VectorXd& a) const {
  const Eigen::VectorXd u = eval_values(a);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) acc += eval_weight_[i] * abs_pow(u[i], nl_.p);
  return acc / nl_.p;
}

double EnergyFunctional::energy(const Eigen::VectorXd& a) const {
  const double quad = 0.5 * a.cwiseAbs2().dot(spectrum_->signs());
  return quad - potential_energy(a);
}

Eigen::VectorXd EnergyFunctional::gradient(const Eigen::VectorXd& a) const {
  const Eigen::VectorXd u = eval_values(a);
  Eigen::VectorXd fu(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) fu[i] = eval_weight_[i] * nl_.f(1.0, u[i]);
  return spectrum_->signs().cwiseProduct(a) - eval_synthesis_.transpose() * fu;
}

Eigen::MatrixXd EnergyFunctional::hessian(const Eigen::VectorXd& a) const {
  const Eigen::VectorXd u = eval_values(a);
  // f' >= 0 for h >= 0, so the nonlinear block is C^T C with C = diag(sqrt(w f')) B.
  Eigen::VectorXd root(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    root[i] = std::sqrt(eval_weight_[i] * nl_.derivative(1.0, u[i]));
  const Eigen::MatrixXd c = root.asDiagonal() * eval_synthesis_;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(a.size(), a.size());
  h.selfadjointView<Eigen::Lower>().rankUpdate(c.transpose(), -1.0);
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  h.diagonal() += spectrum_->signs();
  return h;
}

Eigen::VectorXd EnergyFunctional::hessvec(const Eigen::VectorXd& a, const Eigen::VectorXd& v) const {
  const Eigen::VectorXd u = eval_values(a);
  Eigen::VectorXd dv = eval_synthesis_ * v;
  for (Eigen::Index i = 0; i < u.size(); ++i) dv[i] *= eval_weight_[i] * nl_.derivative(1.0, u[i]);
  return spectrum_->signs().cwiseProduct(v) - eval_synthesis_.transpose() * dv;
}

Eigen::VectorXd EnergyFunctional::hessian_eigenvalues(const Eigen::VectorXd& a) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian(a), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("Hessian eigensolve failed");
  return eig.eigenvalues();
}

GridField EnergyFunctional::energy_density(const Eigen::VectorXd& a) const {
  const SpectralDecomposition& s = *spectrum_;
  const Eigen::VectorXd u = s.grid_values(a);
  // L u = Φ diag(sign(λ) sqrt|λ|) a.
  const Eigen::VectorXd lu = s.eigenfields() * s.signs().cwiseProduct(s.sqrt_abs()).cwiseProduct(a);
  const GridField h = nl_.weight.on_grid(s.domain());
  Eigen::VectorXd dens(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    dens[i] = 0.5 * u[i] * lu[i] - nl_.primitive(h.values()[i], u[i]);
  return GridField(s.domain(), std::move(dens));
}

double evaluate_J(const GridField& u, const SpectralDecomposition& s, const Nonlinearity& nl) {
  const EnergyFunctional j(s, nl);
  return j.energy(s.to_energy_coords(u));
}

GridField gradient(const GridField& u, const SpectralDecomposition& s, const Nonlinearity& nl) {
  const EnergyFunctional j(s, nl);
  return s.field(j.gradient(s.to_energy_coords(u)));
}

GridField hessvec(const GridField& u, const GridField& v, const SpectralDecomposition& s,
                  const Nonlinearity& nl) {
  const EnergyFunctional j(s, nl);
  return s.field(j.hessvec(s.to_energy_coords(u), s.to_energy_coords(v)));
}

double interaction_defect(const std::vector<GridField>& bumps, const GridField& phi,
                          const GridField& psi, const Nonlinearity& nl) {
  if (bumps.empty()) return 0.0;
  const TorusDomain& d = phi.domain();
  require_same_domain(d, psi.domain(), "interaction_defect");
  for (const auto& b : bumps) require_same_domain(d, b.domain(), "interaction_defect");
  const GridField h = nl.weight.on_grid(d);
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double total = 0.0;
    double separate = 0.0;
    for (const auto& b : bumps) {
      total += b.values()[ii];
      separate += nl.derivative(h.values()[ii], b.values()[ii]);
    }
    const double joint = nl.derivative(h.values()[ii], total);
    acc += std::abs(joint - separate) * std::abs(phi.values()[ii]) * std::abs(psi.values()[ii]);
  }
  return acc * d.cell_weight();
}

std::pair<double, double> superquadratic_sides(const GridField& u, const Nonlinearity& nl) {
  const GridField h = nl.weight.on_grid(u.domain());
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lhs += nl.gamma * nl.primitive(h.values()[ii], u.values()[ii]);
    rhs += u.values()[ii] * nl.f(h.values()[ii], u.values()[ii]);
  }
  const double w = u.domain().cell_weight();
  return {lhs * w, rhs * w};
}

}  // namespace gapbump
