#include "gapbump/periodic_operator.hpp"

#include "gapbump/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gapbump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int table_index(double x, int m) {
  const double frac = x - std::floor(x);
  int i = static_cast<int>(std::lround(frac * m));
  return i % m;
}

}  // namespace

PeriodicPotential PeriodicPotential::cosine(double amplitude, double shift, int dim) {
  std::vector<CosineTerm> terms;
  for (int axis = 0; axis < dim; ++axis) terms.push_back({axis, 1, amplitude});
  return from_terms(std::move(terms), shift);
}

PeriodicPotential PeriodicPotential::from_terms(std::vector<CosineTerm> terms, double shift) {
  for (const auto& t : terms) {
    if (t.axis < 0 || t.axis > 1) throw std::invalid_argument("cosine term axis must be 0 or 1");
    if (t.harmonic < 0) throw std::invalid_argument("cosine term harmonic must be >= 0");
    if (!std::isfinite(t.amplitude)) throw std::invalid_argument("cosine amplitude must be finite");
  }
  if (!std::isfinite(shift)) throw std::invalid_argument("potential shift must be finite");
  PeriodicPotential v;
  v.kind_ = Kind::Cosine;
  v.terms_ = std::move(terms);
  v.shift_ = shift;
  return v;
}

PeriodicPotential PeriodicPotential::constant(double value) { return from_terms({}, -value); }

PeriodicPotential PeriodicPotential::tabulated(int dim, int samples_per_cell,
                                               std::vector<double> table, double shift) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("tabulated potential: dim must be 1 or 2");
  if (samples_per_cell < 1) throw std::invalid_argument("tabulated potential: empty table");
  const std::size_t expected = dim == 1 ? static_cast<std::size_t>(samples_per_cell)
                                        : static_cast<std::size_t>(samples_per_cell) * samples_per_cell;
  if (table.size() != expected)
    throw std::invalid_argument("tabulated potential: table size must be M^dim");
  for (double t : table)
    if (!std::isfinite(t)) throw std::invalid_argument("tabulated potential: non-finite sample");
  PeriodicPotential v;
  v.kind_ = Kind::Tabulated;
  v.table_dim_ = dim;
  v.table_samples_ = samples_per_cell;
  v.table_ = std::move(table);
  v.shift_ = shift;
  return v;
}

double PeriodicPotential::operator()(const std::array<double, 2>& x, int dim) const {
  if (kind_ == Kind::Tabulated) {
    const int m = table_samples_;
    if (table_dim_ == 1) return table_[static_cast<std::size_t>(table_index(x[0], m))] - shift_;
    if (dim != 2) throw std::invalid_argument("2D tabulated potential evaluated in 1D");
    const int ix = table_index(x[0], m);
    const int iy = table_index(x[1], m);
    return table_[static_cast<std::size_t>(ix * m + iy)] - shift_;
  }
  double v = -shift_;
  for (const auto& t : terms_) {
    if (t.axis >= dim) continue;
    v += t.amplitude * std::cos(kTwoPi * t.harmonic * x[static_cast<std::size_t>(t.axis)]);
  }
  return v;
}

GridField PeriodicPotential::on_grid(const TorusDomain& domain) const {
  return GridField::sample(domain, [&](const std::array<double, 2>& x) { return (*this)(x, domain.dim); });
}

PeriodicPotential PeriodicPotential::shifted(double extra) const {
  PeriodicPotential v = *this;
  v.shift_ += extra;
  return v;
}

double PeriodicPotential::sup_norm() const {
  if (kind_ == Kind::Tabulated) {
    double m = 0.0;
    for (double t : table_) m = std::max(m, std::abs(t - shift_));
    return m;
  }
  double m = std::abs(shift_);
  for (const auto& t : terms_) m += std::abs(t.amplitude);
  return m;
}

std::string PeriodicPotential::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::Tabulated) {
    double sum = 0.0;
    for (double t : table_) sum += t;
    os << "tabulated(N=" << table_dim_ << ",M=" << table_samples_ << ",sum=" << sum << ",shift=" << shift_
       << ")";
  } else {
    os << "cosine(";
    for (const auto& t : terms_) os << t.amplitude << "*cos(2pi*" << t.harmonic << "*x" << t.axis << ")+";
    os << "shift=" << -shift_ << ")";
  }
  return os.str();
}

SpectralDecomposition::SpectralDecomposition(const TorusDomain& domain, Eigen::VectorXd eigenvalues,
                                             Eigen::MatrixXd eigenfields)
    : domain_(domain), eigenvalues_(std::move(eigenvalues)), fields_(std::move(eigenfields)) {
  const Eigen::Index n = eigenvalues_.size();
  if (fields_.rows() != n || fields_.cols() != n ||
      static_cast<std::size_t>(n) != domain_.size())
    throw DomainMismatch("spectral decomposition size does not match the torus");
  double min_abs = std::numeric_limits<double>::infinity();
  signs_.resize(n);
  sqrt_abs_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = eigenvalues_[i];
    min_abs = std::min(min_abs, std::abs(lam));
    signs_[i] = lam < 0 ? -1.0 : 1.0;
    sqrt_abs_[i] = std::sqrt(std::abs(lam));
    if (lam < 0) ++negative_count_;
  }
  if (min_abs < kInvertibilityFloor) {
    std::ostringstream os;
    os << "0 lies in the spectrum of -Δ+V on " << domain_.fingerprint() << " (min |λ| = " << min_abs
       << "); hypothesis (V2) requires 0 to lie in a spectral gap";
    throw NotInvertible(os.str());
  }
  if (min_abs > kGapCertification) {
    SpectralGap g;
    g.alpha = negative_count_ > 0 ? -eigenvalues_[negative_count_ - 1]
                                  : std::numeric_limits<double>::infinity();
    g.beta = negative_count_ < n ? eigenvalues_[negative_count_] : std::numeric_limits<double>::infinity();
    gap_ = g;
  }
  const double w = domain_.cell_weight();
  analysis_ = sqrt_abs_.asDiagonal() * fields_.transpose() * w;
  synthesis_ = fields_ * sqrt_abs_.cwiseInverse().asDiagonal();
}

GridField SpectralDecomposition::eigenfield(std::size_t i) const {
  return GridField(domain_, fields_.col(static_cast<Eigen::Index>(i)));
}

void SpectralDecomposition::require_gap() const {
  if (!gap_) {
    throw NotInvertible("0 is not certified to lie in a spectral gap on " + domain_.fingerprint() +
                        " (hypothesis (V2))");
  }
}

Eigen::VectorXd SpectralDecomposition::coefficients(const GridField& u) const {
  require_same_domain(domain_, u.domain(), "coefficients");
  return fields_.transpose() * u.values() * domain_.cell_weight();
}

GridField SpectralDecomposition::from_coefficients(const Eigen::VectorXd& c) const {
  return GridField(domain_, fields_ * c);
}

Eigen::VectorXd SpectralDecomposition::to_energy_coords(const GridField& u) const {
  require_same_domain(domain_, u.domain(), "to_energy_coords");
  return analysis_ * u.values();
}

Eigen::VectorXd SpectralDecomposition::to_energy_coords(const Eigen::VectorXd& grid_values) const {
  return analysis_ * grid_values;
}

Eigen::VectorXd SpectralDecomposition::grid_values(const Eigen::VectorXd& energy_coords) const {
  return synthesis_ * energy_coords;
}

GridField SpectralDecomposition::field(const Eigen::VectorXd& energy_coords) const {
  return GridField(domain_, synthesis_ * energy_coords);
}

SpectralDecomposition diagonalize(const PeriodicPotential& potential, const TorusDomain& domain) {
  Eigen::MatrixXd op = laplacian_matrix(domain);
  const GridField v = potential.on_grid(domain);
  op.diagonal() += v.values();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op);
  if (eig.info() != Eigen::Success) throw NumericError("dense symmetric eigensolver failed");
  Eigen::MatrixXd fields = eig.eigenvectors() / std::sqrt(domain.cell_weight());
  return SpectralDecomposition(domain, eig.eigenvalues(), std::move(fields));
}

std::vector<BandInterval> BandStructure::gaps() const {
  std::vector<BandInterval> out;
  for (std::size_t b = 0; b + 1 < bands.size(); ++b)
    if (bands[b + 1].lower > bands[b].upper) out.push_back({bands[b].upper, bands[b + 1].lower});
  return out;
}

bool BandStructure::contains(double lambda, double tol) const {
  return std::any_of(bands.begin(), bands.end(), [&](const BandInterval& b) {
    return lambda >= b.lower - tol && lambda <= b.upper + tol;
  });
}

BandStructure band_structure(const PeriodicPotential& potential, int bands, int quasimomenta,
                             int samples_per_cell) {
  const int m = samples_per_cell;
  if (bands < 1 || bands > m) throw std::invalid_argument("band_structure: need 1 <= bands <= M");
  if (quasimomenta < 1) throw std::invalid_argument("band_structure: need quasimomenta >= 1");
  BandStructure out;
  out.values.resize(quasimomenta, bands);
  Eigen::VectorXd v(m);
  for (int r = 0; r < m; ++r) v[r] = potential({static_cast<double>(r) / m, 0.0}, 1);

  for (int q = 0; q < quasimomenta; ++q) {
    const double theta = kTwoPi * q / quasimomenta;
    out.thetas.push_back(theta);
    // Plane waves e^{iκx}, κ = θ + 2πn, restricted to the grid's window [-πM, πM).
    std::vector<double> kappa;
    for (int n = -m; n <= m; ++n) {
      const double kap = theta + kTwoPi * n;
      if (kap >= -std::numbers::pi * m && kap < std::numbers::pi * m) kappa.push_back(kap);
    }
    if (static_cast<int>(kappa.size()) != m) throw NumericError("Bloch plane-wave window miscounted");
    Eigen::MatrixXcd waves(m, m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        waves(r, c) = std::polar(1.0 / std::sqrt(static_cast<double>(m)),
                                 kappa[static_cast<std::size_t>(c)] * r / m);
    Eigen::VectorXd kin(m);
    for (int c = 0; c < m; ++c) kin[c] = kappa[static_cast<std::size_t>(c)] * kappa[static_cast<std::size_t>(c)];
    Eigen::MatrixXcd h = waves * kin.asDiagonal() * waves.adjoint();
    h.diagonal() += v.cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
    out.values.row(q) = eig.eigenvalues().head(bands).transpose();
  }
  for (int b = 0; b < bands; ++b)
    out.bands.push_back({out.values.col(b).minCoeff(), out.values.col(b).maxCoeff()});
  return out;
}

double first_gap_midpoint(const PeriodicPotential& potential, int samples_per_cell, int quasimomenta) {
  const BandStructure bs = band_structure(potential, std::min(samples_per_cell, 8), quasimomenta,
                                          samples_per_cell);
  const auto gaps = bs.gaps();
  if (gaps.empty()) throw NotInvertible("potential has no open Bloch gap among the lowest bands");
  return 0.5 * (gaps.front().lower + gaps.front().upper);
}

double EnergyCoefficients::norm_squared() const {
  return coefficients.cwiseAbs2().dot(decomposition->eigenvalues().cwiseAbs());
}

double EnergyCoefficients::norm() const { return std::sqrt(norm_squared()); }

EnergyCoefficients to_energy(const GridField& u, const SpectralDecomposition& s) {
  return {s.coefficients(u), &s};
}

GridField from_energy(const EnergyCoefficients& e) {
  return e.decomposition->from_coefficients(e.coefficients);
}

double energy_inner(const GridField& u, const GridField& v, const SpectralDecomposition& s) {
  return s.to_energy_coords(u).dot(s.to_energy_coords(v));
}

double energy_norm(const GridField& u, const SpectralDecomposition& s) {
  return s.to_energy_coords(u).norm();
}

namespace {

GridField keep_sign(const GridField& u, const SpectralDecomposition& s, bool negative) {
  Eigen::VectorXd c = s.coefficients(u);
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if ((s.eigenvalues()[i] < 0) != negative) c[i] = 0.0;
  return s.from_coefficients(c);
}

}  // namespace

GridField project_negative(const GridField& u, const SpectralDecomposition& s) {
  s.require_gap();
  return keep_sign(u, s, true);
}

GridField project_positive(const GridField& u, const SpectralDecomposition& s) {
  s.require_gap();
  return keep_sign(u, s, false);
}

double quadratic_form(const GridField& u, const PeriodicPotential& potential) {
  const TorusDomain& d = u.domain();
  const Eigen::MatrixXd lap = laplacian_matrix(d);
  const GridField v = potential.on_grid(d);
  return d.cell_weight() *
         (u.values().dot(lap * u.values()) + u.values().cwiseAbs2().dot(v.values()));
}

NormEquivalence norm_equivalence_report(const SpectralDecomposition& s, int trials,
                                        std::mt19937_64& rng) {
  s.require_gap();
  const TorusDomain& d = s.domain();
  const double w = d.cell_weight();
  Eigen::MatrixXd h1 = laplacian_matrix(d);
  h1.diagonal().array() += 1.0;

  NormEquivalence out{std::numeric_limits<double>::infinity(), 0.0};
  auto record = [&](double ratio) {
    out.c_low = std::min(out.c_low, ratio);
    out.c_high = std::max(out.c_high, ratio);
  };
  // Eigenfields have ||φ_i||_k² = |λ_i|.
  const Eigen::MatrixXd& phi = s.eigenfields();
  const Eigen::VectorXd h1_sq = (phi.transpose() * (h1 * phi)).diagonal() * w;
  for (Eigen::Index i = 0; i < h1_sq.size(); ++i)
    record(std::sqrt(std::abs(s.eigenvalues()[i]) / h1_sq[i]));

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(static_cast<Eigen::Index>(d.size()));
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = gauss(rng);
    const double energy = s.to_energy_coords(u).norm();
    const double sobolev = std::sqrt(w * u.dot(h1 * u));
    record(energy / sobolev);
  }
  return out;
}

}  // namespace gapbump
