#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "enkf/filter.hpp"
#include "enkf/linalg.hpp"

namespace enkf {

// ---------------------------------------------------------------------------
// Lorenz-96

struct Lorenz96Config {
  std::size_t n_state = 40;
  double forcing = 8.0;
  double dt = 0.05;  // one time unit ~ five days

  friend bool operator==(const Lorenz96Config&, const Lorenz96Config&) = default;
};

void validate(const Lorenz96Config& cfg);

// dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F, indices cyclic.
Vector lorenz96_tendency(std::span<const double> x, double forcing);

// One classical RK4 step of size cfg.dt (dt == 0 returns x unchanged).
Vector lorenz96_step(std::span<const double> x, const Lorenz96Config& cfg);

class Lorenz96Model final : public ModelOperator {
 public:
  explicit Lorenz96Model(Lorenz96Config cfg);

  const Lorenz96Config& config() const noexcept { return cfg_; }
  std::size_t state_size() const override { return cfg_.n_state; }
  // Whole number of dt steps between t0 and t1.
  void advance(std::span<double> state, double t0, double t1) const override;

 private:
  Lorenz96Config cfg_;
};

// ---------------------------------------------------------------------------
// Quasi-geostrophic vorticity model on an N x M grid with homogeneous
// Dirichlet boundaries:
//
//   dq/dt = -r J(psi, q) - beta dpsi/dx - rkb zeta + rkh lap(zeta)
//           - rkh2 lap^2(zeta) + sin(2 pi y)
//   (lap - F) psi = q,  zeta = lap(psi) = q + F psi
//
// Only the (N-2) x (M-2) interior is prognostic; it is flattened with x
// fastest into the state vector.

struct QGConfig {
  std::size_t n = 33;   // grid points along x, boundaries included
  std::size_t m = 33;   // grid points along y
  double lx = 0.4;
  double ly = 0.4;
  double rkb = 1e-6;    // bottom friction
  double rkh = 1e-7;    // horizontal friction
  double rkh2 = 2e-12;  // biharmonic friction
  double beta = 1.0;
  double rossby = 1e-5;  // r
  double froude = 1600.0;
  double dt = 1.0;

  std::size_t nx() const noexcept { return n - 2; }
  std::size_t ny() const noexcept { return m - 2; }
  std::size_t state_size() const noexcept { return nx() * ny(); }
  double hx() const noexcept { return lx / static_cast<double>(n - 1); }
  double hy() const noexcept { return ly / static_cast<double>(m - 1); }

  friend bool operator==(const QGConfig&, const QGConfig&) = default;
};

void validate(const QGConfig& cfg);

QGConfig qg33_config();
QGConfig qg65_config();
QGConfig qg129_config();
// "qg33", "qg65" or "qg129"; throws InvalidArgument otherwise.
QGConfig qg_preset(const std::string& name);

// Interior potential vorticity, (N-2) x (M-2).
struct QGState {
  DenseMatrix q;
};

QGState qg_state_from_vector(std::span<const double> x, const QGConfig& cfg);

// Exact solver for the 5-point (lap - F) operator with Dirichlet boundaries,
// diagonalized by discrete sine transforms along both axes.
class HelmholtzSolver {
 public:
  explicit HelmholtzSolver(const QGConfig& cfg);

  // Interior grid functions (nx x ny), returned likewise.
  DenseMatrix solve(const DenseMatrix& rhs) const;
  DenseMatrix apply(const DenseMatrix& psi) const;

 private:
  std::size_t nx_, ny_;
  double hx_, hy_, froude_;
  DenseMatrix sx_, sy_;    // orthonormal sine bases
  Vector lambda_x_, lambda_y_;
};

DenseMatrix helmholtz_solve(const QGState& q, const QGConfig& cfg);

// Arakawa's energy- and enstrophy-conserving Jacobian J(a, b) on a full
// N x M grid (boundaries included). Values outside the grid are treated as
// zero, so every node, boundary ring included, gets a value.
DenseMatrix arakawa_jacobian(const DenseMatrix& a, const DenseMatrix& b,
                             double hx, double hy);

// Embeds an interior field into a zero-padded full grid, and back.
DenseMatrix pad_interior(const DenseMatrix& interior);
DenseMatrix strip_boundary(const DenseMatrix& full);

class QGModel final : public ModelOperator {
 public:
  explicit QGModel(QGConfig cfg);

  const QGConfig& config() const noexcept { return cfg_; }
  const HelmholtzSolver& helmholtz() const noexcept { return helmholtz_; }
  std::size_t state_size() const override { return cfg_.state_size(); }

  QGState tendency(const QGState& q) const;
  // RK4 step; throws ModelDivergence when max |q| exceeds kDivergenceLimit.
  QGState step(const QGState& q) const;
  void advance(std::span<double> state, double t0, double t1) const override;

  // Stream function for a flattened state, flattened likewise.
  Vector stream_function(std::span<const double> state) const;

  static constexpr double kDivergenceLimit = 1e6;

 private:
  QGConfig cfg_;
  HelmholtzSolver helmholtz_;
  Vector forcing_;  // sin(2 pi y_j) per interior row j
};

QGState qg_tendency(const QGState& q, const QGConfig& cfg);
QGState qg_step(const QGState& q, const QGConfig& cfg);

// Number of dt steps spanning [t0, t1]; throws unless (t1 - t0) / dt is a
// whole number to within 1e-9 relative.
std::size_t step_count(double t0, double t1, double dt);

}  // namespace enkf
