#include <cmath>
#include <numbers>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/models.hpp"
#include "enkf/verify.hpp"

using namespace enkf;

TEST_CASE("Lorenz-96 tendency with cyclic indices") {
  const Vector x{1, 2, 3, 4, 5};
  const Vector f = lorenz96_tendency(x, 8.0);
  // dx0 = (x1 - x3) x4 - x0 + F
  CHECK(f[0] == (2.0 - 4.0) * 5.0 - 1.0 + 8.0);
  CHECK(f[4] == (1.0 - 3.0) * 4.0 - 5.0 + 8.0);
  const Vector fixed = lorenz96_tendency(Vector(40, 8.0), 8.0);
  for (double v : fixed) CHECK(v == 0.0);
}

TEST_CASE("Lorenz-96 integrator matches the reference") {
  Vector x(40, 8.0);
  x[3] += 0.1;
  Lorenz96Model model(Lorenz96Config{});
  Vector y = x;
  model.advance(y, 0.0, 2.0);
  const Vector ref = verify::lorenz96_reference(x, 8.0, 0.05, 40);
  for (std::size_t i = 0; i < 40; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-9));
  CHECK_THROWS_AS(model.advance(y, 0.0, 0.07), InvalidArgument);
}

TEST_CASE("RK4 is fourth order") {
  for (double order : verify::lorenz96_orders(0.05)) CHECK(order >= 3.8);
}

TEST_CASE("Lorenz-96 divergence is detected") {
  Lorenz96Model model(Lorenz96Config{40, 8.0, 0.05});
  Vector x(40);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 3 == 0 ? -1e200 : 1e200);
  CHECK_THROWS_AS(model.advance(x, 0.0, 1.0), ModelDivergence);
}

TEST_CASE("QG presets") {
  const QGConfig a = qg33_config();
  CHECK(a.state_size() == 31 * 31);
  CHECK(qg65_config().state_size() == 63 * 63);
  CHECK(qg129_config().state_size() == 127 * 127);
  CHECK(qg_preset("qg33") == a);
  CHECK_THROWS_AS(qg_preset("qg17"), InvalidArgument);
  QGConfig bad = a;
  bad.n = 2;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
}

TEST_CASE("Helmholtz solve inverts the discrete operator") {
  QGConfig cfg = qg33_config();
  cfg.n = 17;
  cfg.m = 21;
  const HelmholtzSolver solver(cfg);
  RngStream rng(1);
  const DenseMatrix psi = gaussian_matrix(rng, cfg.nx(), cfg.ny(), 0.0, 1.0);
  const DenseMatrix q = solver.apply(psi);
  CHECK(max_abs_diff(solver.solve(q), psi) < 1e-11);

  // apply is the 5-point Laplacian with zero exterior minus F psi.
  const std::size_t i = 4, j = 7;
  const double hx = cfg.hx(), hy = cfg.hy();
  const double lap = (psi(i + 1, j) - 2 * psi(i, j) + psi(i - 1, j)) / (hx * hx) +
                     (psi(i, j + 1) - 2 * psi(i, j) + psi(i, j - 1)) / (hy * hy);
  CHECK(q(i, j) == doctest::Approx(lap - cfg.froude * psi(i, j)).epsilon(1e-12));
}

TEST_CASE("Helmholtz manufactured solution converges at second order") {
  for (double order : verify::helmholtz_orders({17, 33, 65})) {
    CHECK(order >= 1.9);
    CHECK(order <= 2.1);
  }
}

TEST_CASE("Arakawa Jacobian") {
  const auto c = verify::arakawa_conservation(33, 5);
  CHECK(c.sum_j <= 1e-10);
  CHECK(c.sum_psi_j <= 1e-10);
  CHECK(c.sum_q_j <= 1e-10);

  // J(a, b) = a_x b_y - a_y b_x is exact for linear fields.
  const std::size_t n = 9;
  const double h = 0.1;
  DenseMatrix a(n, n), b(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      a(i, j) = 2.0 * i * h + 3.0 * j * h;
      b(i, j) = -1.0 * i * h + 0.5 * j * h;
    }
  const DenseMatrix jac = arakawa_jacobian(a, b, h, h);
  CHECK(jac(4, 4) == doctest::Approx(2.0 * 0.5 - 3.0 * -1.0));
  const DenseMatrix swapped = arakawa_jacobian(b, a, h, h);
  CHECK(swapped(4, 4) == doctest::Approx(-jac(4, 4)));
}

TEST_CASE("padding helpers") {
  const DenseMatrix in{{1, 2}, {3, 4}};
  const DenseMatrix full = pad_interior(in);
  CHECK(full.rows() == 4);
  CHECK(full(0, 0) == 0.0);
  CHECK(full(1, 1) == 1.0);
  CHECK(strip_boundary(full) == in);
}

TEST_CASE("QG model runs and stays bounded") {
  const QGModel model(qg33_config());
  RngStream rng(6);
  const DenseMatrix q0 = gaussian_matrix(rng, model.state_size(), 1, 0.0, 1e-3);
  Vector x(q0.values().begin(), q0.values().end());
  const Vector x0 = x;
  model.advance(x, 0.0, 50.0);
  CHECK(x != x0);
  CHECK(max_abs(std::span<const double>(x)) < QGModel::kDivergenceLimit);
  const Vector psi = model.stream_function(x);
  CHECK(psi.size() == x.size());

  Vector again = x0;
  model.advance(again, 0.0, 50.0);
  CHECK(again == x);
  CHECK_THROWS_AS(model.advance(x, 0.0, 0.5), InvalidArgument);
}

TEST_CASE("QG tendency has the forcing at rest") {
  const QGConfig cfg = qg33_config();
  const QGModel model(cfg);
  const QGState rest{DenseMatrix(cfg.nx(), cfg.ny())};
  const QGState t = model.tendency(rest);
  for (std::size_t j = 0; j < cfg.ny(); ++j) {
    const double y = static_cast<double>(j + 1) * cfg.hy();
    CHECK(t.q(3, j) == doctest::Approx(std::sin(2.0 * std::numbers::pi * y)).epsilon(1e-12));
  }
}

TEST_CASE("QG divergence is detected") {
  const QGModel model(qg33_config());
  Vector x(model.state_size(), 2e6);
  CHECK_THROWS_AS(model.advance(x, 0.0, 1.0), ModelDivergence);
}
