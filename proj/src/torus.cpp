#include "gapbump/torus.hpp"

#include "gapbump/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gapbump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int wrap(long i, long n) {
  long r = i % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Applies the 1D operator op along one axis of a field.
Eigen::VectorXd apply_along_axis(const TorusDomain& d, const Eigen::VectorXd& v,
                                 const Eigen::MatrixXd& op, int axis) {
  if (d.dim == 1) return op * v;
  const int n = d.points_per_axis();
  Eigen::Map<const RowMajorMatrix> a(v.data(), n, n);
  RowMajorMatrix out = axis == 0 ? RowMajorMatrix(op * a) : RowMajorMatrix(a * op.transpose());
  return Eigen::Map<Eigen::VectorXd>(out.data(), out.size());
}

}  // namespace

TorusDomain::TorusDomain(int dim_, int cells_, int samples_per_cell_)
    : dim(dim_), cells(cells_), samples_per_cell(samples_per_cell_) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("torus dimension must be 1 or 2");
  if (cells < 1) throw std::invalid_argument("torus needs at least one cell");
  const int m = samples_per_cell;
  if (m < 8 || (m & (m - 1)) != 0)
    throw std::invalid_argument("samples_per_cell must be a power of two >= 8");
}

std::size_t TorusDomain::size() const {
  std::size_t n = static_cast<std::size_t>(points_per_axis());
  return dim == 1 ? n : n * n;
}

double TorusDomain::cell_weight() const { return std::pow(spacing(), dim); }

double TorusDomain::volume() const { return std::pow(static_cast<double>(cells), dim); }

double TorusDomain::coordinate(int index) const { return -0.5 * cells + index * spacing(); }

std::array<double, 2> TorusDomain::point(std::size_t flat) const {
  const auto n = static_cast<std::size_t>(points_per_axis());
  if (dim == 1) return {coordinate(static_cast<int>(flat)), 0.0};
  return {coordinate(static_cast<int>(flat / n)), coordinate(static_cast<int>(flat % n))};
}

std::string TorusDomain::fingerprint() const {
  std::ostringstream os;
  os << "torus(N=" << dim << ",k=" << cells << ",M=" << samples_per_cell << ")";
  return os.str();
}

GridField::GridField(const TorusDomain& domain)
    : domain_(domain), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain.size()))) {}

GridField::GridField(const TorusDomain& domain, Eigen::VectorXd values)
    : domain_(domain), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != domain_.size())
    throw DomainMismatch("field length does not match the torus grid");
  if (!all_finite()) throw std::invalid_argument("grid field contains non-finite values");
}

GridField GridField::sample(const TorusDomain& domain,
                            const std::function<double(const std::array<double, 2>&)>& fn) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(domain.size()));
  for (std::size_t i = 0; i < domain.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(domain.point(i));
  return GridField(domain, std::move(v));
}

bool GridField::all_finite() const { return values_.allFinite(); }

GridField GridField::operator+(const GridField& other) const {
  require_same_domain(domain_, other.domain_, "field addition");
  return GridField(domain_, values_ + other.values_);
}

GridField GridField::operator-(const GridField& other) const {
  require_same_domain(domain_, other.domain_, "field subtraction");
  return GridField(domain_, values_ - other.values_);
}

GridField GridField::operator*(double s) const { return GridField(domain_, values_ * s); }

void require_same_domain(const TorusDomain& a, const TorusDomain& b, const char* what) {
  if (!(a == b))
    throw DomainMismatch(std::string(what) + ": incompatible domains " + a.fingerprint() +
                         " and " + b.fingerprint());
}

double integrate(const GridField& f) { return f.domain().cell_weight() * f.values().sum(); }

double l2_inner(const GridField& f, const GridField& g) {
  require_same_domain(f.domain(), g.domain(), "l2_inner");
  return f.domain().cell_weight() * f.values().dot(g.values());
}

double l2_norm(const GridField& f) { return std::sqrt(l2_inner(f, f)); }

GridField translate(const GridField& f, const LatticeVector& b) {
  const TorusDomain& d = f.domain();
  if (static_cast<int>(b.size()) != d.dim)
    throw std::invalid_argument("translation vector length must equal the torus dimension");
  const int n = d.points_per_axis();
  const int m = d.samples_per_cell;
  Eigen::VectorXd out(f.values().size());
  if (d.dim == 1) {
    const int shift = wrap(static_cast<long>(b[0]) * m, n);
    for (int i = 0; i < n; ++i) out[i] = f.values()[wrap(i + shift, n)];
  } else {
    const int sx = wrap(static_cast<long>(b[0]) * m, n);
    const int sy = wrap(static_cast<long>(b[1]) * m, n);
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        out[ix * n + iy] = f.values()[wrap(ix + sx, n) * n + wrap(iy + sy, n)];
  }
  return GridField(d, std::move(out));
}

Eigen::MatrixXd second_derivative_matrix(int n, double length) {
  Eigen::VectorXd column(n);
  const int half = n / 2;
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int m = 1; m < (n + 1) / 2; ++m) {
      const double kappa = kTwoPi * m / length;
      acc += 2.0 * kappa * kappa * std::cos(kTwoPi * m * j / n);
    }
    if (n % 2 == 0) {
      const double kappa = kTwoPi * half / length;
      acc += kappa * kappa * ((j % 2 == 0) ? 1.0 : -1.0);
    }
    column[j] = acc / n;
  }
  Eigen::MatrixXd d(n, n);
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s) d(r, s) = column[wrap(r - s, n)];
  return d;
}

Eigen::MatrixXd first_derivative_matrix(int n, double length) {
  Eigen::VectorXd column(n);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int m = 1; m < (n + 1) / 2; ++m) {
      const double kappa = kTwoPi * m / length;
      acc -= 2.0 * kappa * std::sin(kTwoPi * m * j / n);
    }
    column[j] = acc / n;
  }
  Eigen::MatrixXd d(n, n);
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s) d(r, s) = column[wrap(r - s, n)];
  return d;
}

Eigen::MatrixXd interpolation_matrix(int n, int n_fine) {
  Eigen::MatrixXd p(n_fine, n);
  for (int r = 0; r < n_fine; ++r) {
    for (int s = 0; s < n; ++s) {
      const double delta = static_cast<double>(r) / n_fine - static_cast<double>(s) / n;
      double acc = 1.0;
      for (int m = 1; m < (n + 1) / 2; ++m) acc += 2.0 * std::cos(kTwoPi * m * delta);
      if (n % 2 == 0) acc += std::cos(kTwoPi * (n / 2) * delta);
      p(r, s) = acc / n;
    }
  }
  return p;
}

Eigen::MatrixXd laplacian_matrix(const TorusDomain& domain) {
  const int n = domain.points_per_axis();
  Eigen::MatrixXd d1 = second_derivative_matrix(n, domain.cells);
  if (domain.dim == 1) return d1;
  const Eigen::Index total = static_cast<Eigen::Index>(n) * n;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(total, total);
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy) {
      const Eigen::Index row = static_cast<Eigen::Index>(ix) * n + iy;
      for (int j = 0; j < n; ++j) {
        lap(row, static_cast<Eigen::Index>(j) * n + iy) += d1(ix, j);
        lap(row, static_cast<Eigen::Index>(ix) * n + j) += d1(iy, j);
      }
    }
  return lap;
}

GridField partial_derivative(const GridField& f, int axis) {
  const TorusDomain& d = f.domain();
  if (axis < 0 || axis >= d.dim) throw std::invalid_argument("derivative axis out of range");
  const Eigen::MatrixXd d1 = first_derivative_matrix(d.points_per_axis(), d.cells);
  return GridField(d, apply_along_axis(d, f.values(), d1, axis));
}

double h1_norm(const GridField& f) {
  const TorusDomain& d = f.domain();
  const Eigen::MatrixXd d2 = second_derivative_matrix(d.points_per_axis(), d.cells);
  double grad_sq = 0.0;
  for (int axis = 0; axis < d.dim; ++axis)
    grad_sq += f.values().dot(apply_along_axis(d, f.values(), d2, axis));
  return std::sqrt(d.cell_weight() * (grad_sq + f.values().squaredNorm()));
}

namespace {

// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 on [0,1].
double smootherstep(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }
double smootherstep_slope(double t) { return 30.0 * t * t * (t - 1.0) * (t - 1.0); }

}  // namespace

// The ramp fills the half-cell band between ∂Q_{k-1} and ∂Q_k.
double cutoff_profile(double x, int cells) {
  const double t = 2.0 * (std::abs(x) - 0.5 * (cells - 1));
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return 1.0 - smootherstep(t);
}

double cutoff_profile_derivative(double x, int cells) {
  const double t = 2.0 * (std::abs(x) - 0.5 * (cells - 1));
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return -2.0 * smootherstep_slope(t) * (x < 0 ? -1.0 : 1.0);
}

GridField cutoff_field(const TorusDomain& domain) {
  return GridField::sample(domain, [&](const std::array<double, 2>& x) {
    double c = cutoff_profile(x[0], domain.cells);
    if (domain.dim == 2) c *= cutoff_profile(x[1], domain.cells);
    return c;
  });
}

GridField embed_with_cutoff(const GridField& f, const TorusDomain& target) {
  const TorusDomain& src = f.domain();
  if (src.dim != target.dim || src.samples_per_cell != target.samples_per_cell)
    throw DomainMismatch("embed_with_cutoff: dimension and samples_per_cell must match");
  if (target.cells < src.cells)
    throw std::invalid_argument("embed_with_cutoff: target torus is smaller than the source");
  const Eigen::VectorXd cut = f.values().cwiseProduct(cutoff_field(src).values());
  const int ns = src.points_per_axis();
  const int nt = target.points_per_axis();
  // Both grids contain x = 0 offsets that differ by a whole number of samples.
  const int offset = (target.cells - src.cells) * target.samples_per_cell / 2;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target.size()));
  if (src.dim == 1) {
    for (int i = 0; i < ns; ++i) out[i + offset] = cut[i];
  } else {
    for (int ix = 0; ix < ns; ++ix)
      for (int iy = 0; iy < ns; ++iy)
        out[(ix + offset) * nt + iy + offset] = cut[ix * ns + iy];
  }
  return GridField(target, std::move(out));
}

}  // namespace gapbump
