#include "enkf/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "enkf/errors.hpp"

namespace enkf {

std::size_t step_count(double t0, double t1, double dt) {
  if (t1 < t0) throw InvalidArgument("time window must satisfy t1 >= t0");
  if (t1 == t0) return 0;
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const double ratio = (t1 - t0) / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument("time window " + std::to_string(t1 - t0) +
                          " is not a whole number of steps of " +
                          std::to_string(dt));
  }
  return static_cast<std::size_t>(steps);
}

// ---------------------------------------------------------------------------
// Lorenz-96

void validate(const Lorenz96Config& cfg) {
  if (cfg.n_state < 4) {
    throw InvalidArgument("Lorenz-96 needs at least 4 state variables");
  }
  if (!(cfg.dt >= 0.0) || !std::isfinite(cfg.dt)) {
    throw InvalidArgument("Lorenz-96 time step must be >= 0");
  }
}

Vector lorenz96_tendency(std::span<const double> x, double forcing) {
  const std::size_t n = x.size();
  if (n < 4) throw InvalidArgument("Lorenz-96 needs at least 4 state variables");
  Vector dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xp1 = x[(i + 1) % n];
    const double xm1 = x[(i + n - 1) % n];
    const double xm2 = x[(i + n - 2) % n];
    dx[i] = (xp1 - xm2) * xm1 - x[i] + forcing;
  }
  return dx;
}

Vector lorenz96_step(std::span<const double> x, const Lorenz96Config& cfg) {
  const std::size_t n = x.size();
  if (n < 4) throw InvalidArgument("Lorenz-96 needs at least 4 state variables");
  Vector out(x.begin(), x.end());
  if (cfg.dt == 0.0) return out;
  const double dt = cfg.dt;
  Vector stage(n);
  const Vector k1 = lorenz96_tendency(x, cfg.forcing);
  for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * dt * k1[i];
  const Vector k2 = lorenz96_tendency(stage, cfg.forcing);
  for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * dt * k2[i];
  const Vector k3 = lorenz96_tendency(stage, cfg.forcing);
  for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + dt * k3[i];
  const Vector k4 = lorenz96_tendency(stage, cfg.forcing);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(out[i])) {
      throw ModelDivergence("Lorenz-96 state became non-finite");
    }
  }
  return out;
}

Lorenz96Model::Lorenz96Model(Lorenz96Config cfg) : cfg_(cfg) { validate(cfg_); }

void Lorenz96Model::advance(std::span<double> state, double t0,
                            double t1) const {
  if (state.size() != cfg_.n_state) {
    throw DimensionMismatch("Lorenz-96 state has wrong size");
  }
  const std::size_t steps = step_count(t0, t1, cfg_.dt);
  Vector x(state.begin(), state.end());
  for (std::size_t s = 0; s < steps; ++s) x = lorenz96_step(x, cfg_);
  std::copy(x.begin(), x.end(), state.begin());
}

// ---------------------------------------------------------------------------
// QG configuration

void validate(const QGConfig& cfg) {
  if (cfg.n < 5 || cfg.m < 5) {
    throw InvalidArgument("QG grid needs at least 5 points per axis");
  }
  if (!(cfg.lx > 0.0 && cfg.ly > 0.0)) {
    throw InvalidArgument("QG domain lengths must be positive");
  }
  if (cfg.rkb < 0.0 || cfg.rkh < 0.0 || cfg.rkh2 < 0.0) {
    throw InvalidArgument("QG friction coefficients must be >= 0");
  }
  if (cfg.froude < 0.0) throw InvalidArgument("QG Froude number must be >= 0");
  if (!(cfg.dt >= 0.0)) throw InvalidArgument("QG time step must be >= 0");
}

QGConfig qg33_config() { return QGConfig{}; }

QGConfig qg65_config() {
  QGConfig cfg;
  cfg.n = cfg.m = 65;
  cfg.lx = cfg.ly = 1.0;
  return cfg;
}

QGConfig qg129_config() {
  QGConfig cfg;
  cfg.n = cfg.m = 129;
  cfg.lx = cfg.ly = 1.0;
  return cfg;
}

QGConfig qg_preset(const std::string& name) {
  if (name == "qg33") return qg33_config();
  if (name == "qg65") return qg65_config();
  if (name == "qg129") return qg129_config();
  throw InvalidArgument("unknown QG instance '" + name + "'");
}

QGState qg_state_from_vector(std::span<const double> x, const QGConfig& cfg) {
  if (x.size() != cfg.state_size()) {
    throw DimensionMismatch("QG state vector has " + std::to_string(x.size()) +
                            " entries, expected " +
                            std::to_string(cfg.state_size()));
  }
  QGState s{DenseMatrix(cfg.nx(), cfg.ny())};
  std::copy(x.begin(), x.end(), s.q.data());
  return s;
}

// ---------------------------------------------------------------------------
// Helmholtz

namespace {

DenseMatrix sine_basis(std::size_t n_interior) {
  const double denom = static_cast<double>(n_interior + 1);
  const double norm = std::sqrt(2.0 / denom);
  DenseMatrix s(n_interior, n_interior);
  for (std::size_t p = 0; p < n_interior; ++p)
    for (std::size_t i = 0; i < n_interior; ++i)
      s(i, p) = norm * std::sin(std::numbers::pi * static_cast<double>(i + 1) *
                                static_cast<double>(p + 1) / denom);
  return s;
}

Vector laplacian_eigenvalues(std::size_t n_interior, double h) {
  const double denom = static_cast<double>(n_interior + 1);
  Vector lambda(n_interior);
  for (std::size_t p = 0; p < n_interior; ++p)
    lambda[p] = (2.0 * std::cos(std::numbers::pi * static_cast<double>(p + 1) /
                                denom) -
                 2.0) /
                (h * h);
  return lambda;
}

// 5-point Laplacian of an interior field with zero values beyond it.
DenseMatrix laplacian(const DenseMatrix& f, double hx, double hy) {
  const std::size_t nx = f.rows();
  const std::size_t ny = f.cols();
  const double cx = 1.0 / (hx * hx);
  const double cy = 1.0 / (hy * hy);
  DenseMatrix out(nx, ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double c = f(i, j);
      const double w = i > 0 ? f(i - 1, j) : 0.0;
      const double e = i + 1 < nx ? f(i + 1, j) : 0.0;
      const double s = j > 0 ? f(i, j - 1) : 0.0;
      const double n = j + 1 < ny ? f(i, j + 1) : 0.0;
      out(i, j) = cx * (w - 2.0 * c + e) + cy * (s - 2.0 * c + n);
    }
  }
  return out;
}

}  // namespace

HelmholtzSolver::HelmholtzSolver(const QGConfig& cfg)
    : nx_(cfg.nx()),
      ny_(cfg.ny()),
      hx_(cfg.hx()),
      hy_(cfg.hy()),
      froude_(cfg.froude),
      sx_(sine_basis(cfg.nx())),
      sy_(sine_basis(cfg.ny())),
      lambda_x_(laplacian_eigenvalues(cfg.nx(), cfg.hx())),
      lambda_y_(laplacian_eigenvalues(cfg.ny(), cfg.hy())) {
  validate(cfg);
}

DenseMatrix HelmholtzSolver::solve(const DenseMatrix& rhs) const {
  if (rhs.rows() != nx_ || rhs.cols() != ny_) {
    throw DimensionMismatch("Helmholtz right-hand side has wrong shape");
  }
  // Sine bases are symmetric and orthonormal: hat = Sx' Q Sy.
  DenseMatrix hat = multiply(multiply_tn(sx_, rhs), sy_);
  for (std::size_t q = 0; q < ny_; ++q)
    for (std::size_t p = 0; p < nx_; ++p)
      hat(p, q) /= lambda_x_[p] + lambda_y_[q] - froude_;
  return multiply_nt(multiply(sx_, hat), sy_);
}

DenseMatrix HelmholtzSolver::apply(const DenseMatrix& psi) const {
  if (psi.rows() != nx_ || psi.cols() != ny_) {
    throw DimensionMismatch("Helmholtz operand has wrong shape");
  }
  DenseMatrix out = laplacian(psi, hx_, hy_);
  for (std::size_t k = 0; k < out.size(); ++k)
    out.data()[k] -= froude_ * psi.data()[k];
  return out;
}

DenseMatrix helmholtz_solve(const QGState& q, const QGConfig& cfg) {
  return HelmholtzSolver(cfg).solve(q.q);
}

// ---------------------------------------------------------------------------
// Arakawa Jacobian

DenseMatrix pad_interior(const DenseMatrix& interior) {
  DenseMatrix full(interior.rows() + 2, interior.cols() + 2);
  for (std::size_t j = 0; j < interior.cols(); ++j)
    for (std::size_t i = 0; i < interior.rows(); ++i)
      full(i + 1, j + 1) = interior(i, j);
  return full;
}

DenseMatrix strip_boundary(const DenseMatrix& full) {
  if (full.rows() < 3 || full.cols() < 3) {
    throw DimensionMismatch("grid too small to strip its boundary");
  }
  DenseMatrix interior(full.rows() - 2, full.cols() - 2);
  for (std::size_t j = 0; j < interior.cols(); ++j)
    for (std::size_t i = 0; i < interior.rows(); ++i)
      interior(i, j) = full(i + 1, j + 1);
  return interior;
}

DenseMatrix arakawa_jacobian(const DenseMatrix& a, const DenseMatrix& b,
                             double hx, double hy) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("arakawa_jacobian: fields differ in shape");
  }
  const auto nx = static_cast<std::ptrdiff_t>(a.rows());
  const auto ny = static_cast<std::ptrdiff_t>(a.cols());
  auto at = [&](const DenseMatrix& f, std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return 0.0;
    return f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  const double scale = 1.0 / (12.0 * hx * hy);
  DenseMatrix out(a.rows(), a.cols());
  for (std::ptrdiff_t j = 0; j < ny; ++j) {
    for (std::ptrdiff_t i = 0; i < nx; ++i) {
      const double a_e = at(a, i + 1, j), a_w = at(a, i - 1, j);
      const double a_n = at(a, i, j + 1), a_s = at(a, i, j - 1);
      const double a_ne = at(a, i + 1, j + 1), a_nw = at(a, i - 1, j + 1);
      const double a_se = at(a, i + 1, j - 1), a_sw = at(a, i - 1, j - 1);
      const double b_e = at(b, i + 1, j), b_w = at(b, i - 1, j);
      const double b_n = at(b, i, j + 1), b_s = at(b, i, j - 1);
      const double b_ne = at(b, i + 1, j + 1), b_nw = at(b, i - 1, j + 1);
      const double b_se = at(b, i + 1, j - 1), b_sw = at(b, i - 1, j - 1);

      const double j_pp = (a_e - a_w) * (b_n - b_s) - (a_n - a_s) * (b_e - b_w);
      const double j_px = a_e * (b_ne - b_se) - a_w * (b_nw - b_sw) -
                          a_n * (b_ne - b_nw) + a_s * (b_se - b_sw);
      const double j_xp = b_n * (a_ne - a_nw) - b_s * (a_se - a_sw) -
                          b_e * (a_ne - a_se) + b_w * (a_nw - a_sw);
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          (j_pp + j_px + j_xp) * scale;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// QG dynamics

QGModel::QGModel(QGConfig cfg)
    : cfg_(cfg), helmholtz_(cfg_), forcing_(cfg_.ny()) {
  for (std::size_t j = 0; j < cfg_.ny(); ++j) {
    const double y = static_cast<double>(j + 1) * cfg_.hy();
    forcing_[j] = std::sin(2.0 * std::numbers::pi * y);
  }
}

QGState QGModel::tendency(const QGState& state) const {
  const DenseMatrix& q = state.q;
  if (q.rows() != cfg_.nx() || q.cols() != cfg_.ny()) {
    throw DimensionMismatch("QG state has wrong shape");
  }
  const std::size_t nx = cfg_.nx();
  const std::size_t ny = cfg_.ny();
  const double hx = cfg_.hx();
  const double hy = cfg_.hy();

  const DenseMatrix psi = helmholtz_.solve(q);
  DenseMatrix zeta = q;
  for (std::size_t k = 0; k < zeta.size(); ++k)
    zeta.data()[k] += cfg_.froude * psi.data()[k];
  const DenseMatrix lap_zeta = laplacian(zeta, hx, hy);
  const DenseMatrix lap2_zeta = laplacian(lap_zeta, hx, hy);

  // The advection term is dq/dx dpsi/dy - dq/dy dpsi/dx, i.e. the standard
  // Jacobian with q in the first slot.
  DenseMatrix advection;
  if (cfg_.rossby != 0.0) {
    advection = strip_boundary(
        arakawa_jacobian(pad_interior(q), pad_interior(psi), hx, hy));
  }

  QGState out{DenseMatrix(nx, ny)};
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double psi_e = i + 1 < nx ? psi(i + 1, j) : 0.0;
      const double psi_w = i > 0 ? psi(i - 1, j) : 0.0;
      const double dpsi_dx = (psi_e - psi_w) / (2.0 * hx);
      double dq = -cfg_.beta * dpsi_dx - cfg_.rkb * zeta(i, j) +
                  cfg_.rkh * lap_zeta(i, j) - cfg_.rkh2 * lap2_zeta(i, j) +
                  forcing_[j];
      if (cfg_.rossby != 0.0) dq -= cfg_.rossby * advection(i, j);
      out.q(i, j) = dq;
    }
  }
  return out;
}

QGState QGModel::step(const QGState& state) const {
  if (cfg_.dt == 0.0) return state;
  const double dt = cfg_.dt;
  const std::size_t n = state.q.size();
  auto combine = [&](const QGState& base, const QGState& k, double w) {
    QGState s = base;
    for (std::size_t i = 0; i < n; ++i) s.q.data()[i] += w * k.q.data()[i];
    return s;
  };
  const QGState k1 = tendency(state);
  const QGState k2 = tendency(combine(state, k1, 0.5 * dt));
  const QGState k3 = tendency(combine(state, k2, 0.5 * dt));
  const QGState k4 = tendency(combine(state, k3, dt));
  QGState out = state;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double& x = out.q.data()[i];
    x += dt / 6.0 *
         (k1.q.data()[i] + 2.0 * k2.q.data()[i] + 2.0 * k3.q.data()[i] +
          k4.q.data()[i]);
    peak = std::max(peak, std::abs(x));
    if (!std::isfinite(x)) peak = kDivergenceLimit * 2.0;
  }
  if (peak > kDivergenceLimit) {
    throw ModelDivergence("QG model diverged: max |q| exceeds 1e6");
  }
  return out;
}

void QGModel::advance(std::span<double> state, double t0, double t1) const {
  const std::size_t steps = step_count(t0, t1, cfg_.dt);
  QGState s = qg_state_from_vector(state, cfg_);
  for (std::size_t k = 0; k < steps; ++k) s = step(s);
  std::copy(s.q.values().begin(), s.q.values().end(), state.begin());
}

Vector QGModel::stream_function(std::span<const double> state) const {
  const QGState s = qg_state_from_vector(state, cfg_);
  const DenseMatrix psi = helmholtz_.solve(s.q);
  return Vector(psi.values().begin(), psi.values().end());
}

QGState qg_tendency(const QGState& q, const QGConfig& cfg) {
  return QGModel(cfg).tendency(q);
}

QGState qg_step(const QGState& q, const QGConfig& cfg) {
  return QGModel(cfg).step(q);
}

}  // namespace enkf
