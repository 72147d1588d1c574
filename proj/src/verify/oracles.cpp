#include <cmath>
#include <numbers>
#include <stdexcept>

#include "enkf/models.hpp"
#include "enkf/verify.hpp"

namespace enkf::verify {

DenseMatrix naive_multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("naive_multiply: shapes");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix naive_transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix gauss_solve(DenseMatrix a, DenseMatrix b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("gauss_solve: shapes");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw std::runtime_error("gauss_solve: singular");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) s -= a(ii, k) * b(k, j);
      b(ii, j) = s / a(ii, ii);
    }
  }
  return b;
}

DenseMatrix dense_system(std::span<const double> r, const DenseMatrix& v) {
  DenseMatrix w = naive_multiply(v, naive_transpose(v));
  for (std::size_t i = 0; i < r.size(); ++i) w(i, i) += r[i];
  return w;
}

namespace {

DenseMatrix gain_analysis(const DenseMatrix& xb, const DenseMatrix& y,
                          const std::vector<std::size_t>& obs_index,
                          std::span<const double> r, const DenseMatrix* delta) {
  const std::size_t n = xb.rows();
  const std::size_t m = xb.cols();
  const std::size_t p = obs_index.size();
  // P = S S' with S = (X - mean) / sqrt(m - 1).
  DenseMatrix s(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += xb(i, j);
    mean /= static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j)
      s(i, j) = (xb(i, j) - mean) / std::sqrt(static_cast<double>(m - 1));
  }
  const DenseMatrix pmat = naive_multiply(s, naive_transpose(s));
  DenseMatrix pht(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) pht(i, k) = pmat(i, obs_index[k]);
  DenseMatrix hpht(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) hpht(a, b) = pmat(obs_index[a], obs_index[b]);
  for (std::size_t a = 0; a < p; ++a) hpht(a, a) += r[a];
  if (delta != nullptr) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < p; ++k) pht(i, k) *= (*delta)(i, k);
  }
  DenseMatrix d(p, m);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t j = 0; j < m; ++j) d(a, j) = y(a, j) - xb(obs_index[a], j);
  const DenseMatrix z = gauss_solve(hpht, d);
  const DenseMatrix inc = naive_multiply(pht, z);
  DenseMatrix xa = xb;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) xa(i, j) += inc(i, j);
  return xa;
}

}  // namespace

DenseMatrix explicit_gain_analysis(const DenseMatrix& xb, const DenseMatrix& y,
                                   const std::vector<std::size_t>& obs_index,
                                   std::span<const double> r) {
  return gain_analysis(xb, y, obs_index, r, nullptr);
}

DenseMatrix explicit_gain_analysis_localized(
    const DenseMatrix& xb, const DenseMatrix& y,
    const std::vector<std::size_t>& obs_index, std::span<const double> r,
    const DenseMatrix& delta) {
  return gain_analysis(xb, y, obs_index, r, &delta);
}

std::vector<double> lorenz96_reference(std::vector<double> x, double forcing,
                                       double dt, std::size_t steps) {
  const std::size_t n = x.size();
  auto rhs = [&](const std::vector<double>& u) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = u[(i + 1) % n];
      const double b = u[(i + n - 2) % n];
      const double c = u[(i + n - 1) % n];
      out[i] = (a - b) * c - u[i] + forcing;
    }
    return out;
  };
  std::vector<double> tmp(n);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto k1 = rhs(x);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    const auto k2 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    const auto k3 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    const auto k4 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  }
  return x;
}

double helmholtz_manufactured_error(std::size_t n) {
  QGConfig cfg = qg33_config();
  cfg.n = cfg.m = n;
  const double pi = std::numbers::pi;
  const double kx = pi / cfg.lx;
  const double ky = pi / cfg.ly;
  const double factor = -(kx * kx) - (ky * ky) - cfg.froude;
  DenseMatrix exact(cfg.nx(), cfg.ny());
  DenseMatrix q(cfg.nx(), cfg.ny());
  for (std::size_t j = 0; j < cfg.ny(); ++j)
    for (std::size_t i = 0; i < cfg.nx(); ++i) {
      const double x = static_cast<double>(i + 1) * cfg.hx();
      const double y = static_cast<double>(j + 1) * cfg.hy();
      exact(i, j) = std::sin(kx * x) * std::sin(ky * y);
      q(i, j) = factor * exact(i, j);
    }
  const DenseMatrix psi = HelmholtzSolver(cfg).solve(q);
  double err = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k)
    err = std::max(err, std::abs(psi.data()[k] - exact.data()[k]));
  return err;
}

std::vector<double> helmholtz_orders(const std::vector<std::size_t>& grids) {
  std::vector<double> orders;
  for (std::size_t k = 1; k < grids.size(); ++k) {
    const double e0 = helmholtz_manufactured_error(grids[k - 1]);
    const double e1 = helmholtz_manufactured_error(grids[k]);
    const double h0 = 1.0 / static_cast<double>(grids[k - 1] - 1);
    const double h1 = 1.0 / static_cast<double>(grids[k] - 1);
    orders.push_back(std::log(e0 / e1) / std::log(h0 / h1));
  }
  return orders;
}

std::vector<double> lorenz96_orders(double dt) {
  std::vector<double> x0(40);
  for (std::size_t i = 0; i < x0.size(); ++i)
    x0[i] = 8.0 + (i == 0 ? 0.01 : 0.0);
  x0 = lorenz96_reference(x0, 8.0, 0.01, 1000);
  const double t = 1.0;
  auto steps = [&](double h) { return static_cast<std::size_t>(std::llround(t / h)); };
  const double h_ref = dt / 64.0;
  const auto ref = lorenz96_reference(x0, 8.0, h_ref, steps(h_ref));

  Lorenz96Config cfg;
  std::vector<double> errors;
  for (double h : {dt, dt / 2.0, dt / 4.0}) {
    cfg.dt = h;
    Lorenz96Model model(cfg);
    std::vector<double> x = x0;
    model.advance(x, 0.0, t);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(x[i] - ref[i]));
    errors.push_back(err);
  }
  return {std::log2(errors[0] / errors[1]), std::log2(errors[1] / errors[2])};
}

ConservationSums arakawa_conservation(std::size_t n, std::uint64_t seed) {
  QGConfig cfg = qg33_config();
  cfg.n = cfg.m = n;
  RngStream rng(seed);
  const DenseMatrix psi = pad_interior(gaussian_matrix(rng, n - 2, n - 2, 0.0, 1.0));
  const DenseMatrix q = pad_interior(gaussian_matrix(rng, n - 2, n - 2, 0.0, 1.0));
  const DenseMatrix j = arakawa_jacobian(psi, q, cfg.hx(), cfg.hy());
  double s = 0.0, sa = 0.0, sp = 0.0, spa = 0.0, sq = 0.0, sqa = 0.0;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const double jk = j.data()[k];
    s += jk;
    sa += std::abs(jk);
    sp += psi.data()[k] * jk;
    spa += std::abs(psi.data()[k] * jk);
    sq += q.data()[k] * jk;
    sqa += std::abs(q.data()[k] * jk);
  }
  return {std::abs(s) / sa, std::abs(sp) / spa, std::abs(sq) / sqa};
}

}  // namespace enkf::verify
