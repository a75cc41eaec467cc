#pragma once

// Semi-linear wave equation  w_tt = Lap w + F(w) + r(x) u(t)  on a rectangle
// with w = 0 on Gamma_0 and dw/dn = 0 on Gamma_1 (edge-aligned split).

#include "actuopt/core_system.hpp"

#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

namespace actuopt {

enum class Edge { left = 0, right = 1, bottom = 2, top = 3 };

inline const char* edge_name(Edge e) {
  switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
  }
  return "?";
}

enum class NonlinearityKind { none, sine_gordon, klein_gordon };

/// Pointwise nonlinearity F and its derivative.
struct NonlinearityF {
  NonlinearityKind kind = NonlinearityKind::sine_gordon;
  int k_exp = 2;  // Klein-Gordon exponent: F(w) = |w|^k w

  double value(double w) const {
    switch (kind) {
      case NonlinearityKind::none: return 0.0;
      case NonlinearityKind::sine_gordon: return std::sin(w);
      case NonlinearityKind::klein_gordon: return std::pow(std::abs(w), k_exp) * w;
    }
    return 0.0;
  }

  double derivative(double w) const {
    switch (kind) {
      case NonlinearityKind::none: return 0.0;
      case NonlinearityKind::sine_gordon: return std::cos(w);
      case NonlinearityKind::klein_gordon: return (k_exp + 1) * std::pow(std::abs(w), k_exp);
    }
    return 0.0;
  }

  bool operator==(const NonlinearityF&) const = default;
};

struct WaveParams {
  double lx = 1.0;
  double ly = 1.0;
  int nx = 48;
  int ny = 48;
  /// Edges carrying homogeneous Neumann conditions (Gamma_1); the rest is Gamma_0.
  std::array<bool, 4> neumann{false, false, false, false};
  NonlinearityF nonlinearity{};

  bool is_neumann(Edge e) const { return neumann[static_cast<int>(e)]; }
  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }

  void validate() const {
    if (!(lx > 0.0) || !(ly > 0.0)) throw UsageError("WaveParams: side lengths must be positive");
    if (nx < 8 || ny < 8) throw UsageError("WaveParams: resolutions must be at least 8");
    if (neumann[0] && neumann[1] && neumann[2] && neumann[3])
      throw UsageError("WaveParams: Gamma_0 must be nonempty (at least one Dirichlet edge)");
    if (nonlinearity.kind == NonlinearityKind::klein_gordon && nonlinearity.k_exp < 2)
      throw UsageError("WaveParams: Klein-Gordon exponent must be >= 2");
  }

  bool operator==(const WaveParams&) const = default;
};

/// Radial raised-cosine actuator centred at (c1, c2).
struct WaveActuator {
  double c1 = 0.5;
  double c2 = 0.5;
  double width = 0.2;
};

/// Normalization making the radial raised cosine integrate to one.
inline double wave_bump_scale(double width) {
  const double pi = std::numbers::pi;
  return 1.0 / (pi * width * width * (1.0 - 4.0 / (pi * pi)));
}

inline void check_wave_support(const WaveParams& params, const WaveActuator& act) {
  if (!(act.width > 0.0)) throw UsageError("WaveActuator: width must be positive");
  if (act.c1 - act.width < 0.0 || act.c1 + act.width > params.lx || act.c2 - act.width < 0.0 ||
      act.c2 + act.width > params.ly) {
    std::ostringstream os;
    os << "actuator disk at (" << act.c1 << ", " << act.c2 << ") radius " << act.width
       << " leaves the domain; project the design first";
    throw ProjectionRequired(os.str());
  }
}

/// Grid bookkeeping: node (i, j) at (i hx, j hy); Gamma_0 nodes are eliminated.
class WaveGrid {
 public:
  explicit WaveGrid(const WaveParams& p) : p_(p), index_((p.nx + 1) * (p.ny + 1), -1) {
    for (int j = 0; j <= p.ny; ++j)
      for (int i = 0; i <= p.nx; ++i)
        if (!is_dirichlet(i, j)) {
          index_[node(i, j)] = static_cast<int>(coords_.size());
          coords_.push_back({i, j});
        }
  }

  bool is_dirichlet(int i, int j) const {
    return (i == 0 && !p_.is_neumann(Edge::left)) || (i == p_.nx && !p_.is_neumann(Edge::right)) ||
           (j == 0 && !p_.is_neumann(Edge::bottom)) || (j == p_.ny && !p_.is_neumann(Edge::top));
  }

  /// Unknown index of node (i, j), or -1 on Gamma_0.
  int unknown(int i, int j) const { return index_[node(i, j)]; }
  int size() const { return static_cast<int>(coords_.size()); }
  std::array<int, 2> coords(int k) const { return coords_[k]; }

  /// Trapezoid weight of node (i, j) relative to hx*hy.
  double trapezoid(int i, int j) const {
    const double wx = (i == 0 || i == p_.nx) ? 0.5 : 1.0;
    const double wy = (j == 0 || j == p_.ny) ? 0.5 : 1.0;
    return wx * wy;
  }

 private:
  int node(int i, int j) const { return j * (p_.nx + 1) + i; }

  WaveParams p_;
  std::vector<int> index_;
  std::vector<std::array<int, 2>> coords_;
};

namespace wave_detail {

inline SparseMatrix diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline SparseMatrix blocks(Eigen::Index n, const SparseMatrix* a, const SparseMatrix* b,
                           const SparseMatrix* c, const SparseMatrix* d) {
  std::vector<Eigen::Triplet<double>> t;
  auto add = [&](const SparseMatrix* m, Eigen::Index r0, Eigen::Index c0) {
    if (m == nullptr) return;
    for (int col = 0; col < m->outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(*m, col); it; ++it)
        t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  add(a, 0, 0);
  add(b, 0, n);
  add(c, n, 0);
  add(d, n, n);
  SparseMatrix out(2 * n, 2 * n);
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

/// First-difference energy  sum_edges weight * avg(q) * (w_a - w_b)^2  as a matrix.
inline SparseMatrix stiffness(const WaveParams& p, const WaveGrid& g, const Vector& q) {
  std::vector<Eigen::Triplet<double>> t;
  auto edge = [&](int ia, int ja, int ib, int jb, double weight) {
    const int a = g.unknown(ia, ja);
    const int b = g.unknown(ib, jb);
    if (a < 0 && b < 0) return;
    double qe;
    if (a >= 0 && b >= 0) qe = 0.5 * (q[a] + q[b]);
    else qe = q[a >= 0 ? a : b];
    const double c = weight * qe;
    if (a >= 0) t.emplace_back(a, a, c);
    if (b >= 0) t.emplace_back(b, b, c);
    if (a >= 0 && b >= 0) {
      t.emplace_back(a, b, -c);
      t.emplace_back(b, a, -c);
    }
  };
  const double hx = p.hx(), hy = p.hy();
  for (int j = 0; j <= p.ny; ++j) {
    const double wy = (j == 0 || j == p.ny) ? 0.5 : 1.0;
    for (int i = 0; i < p.nx; ++i) edge(i, j, i + 1, j, wy * hy / hx);
  }
  for (int i = 0; i <= p.nx; ++i) {
    const double wx = (i == 0 || i == p.nx) ? 0.5 : 1.0;
    for (int j = 0; j < p.ny; ++j) edge(i, j, i, j + 1, wx * hx / hy);
  }
  SparseMatrix k(g.size(), g.size());
  k.setFromTriplets(t.begin(), t.end());
  k.makeCompressed();
  return k;
}

}  // namespace wave_detail

/// Assembled wave discretization. Design vector: { c1, c2 } (bump centre).
class WaveModel {
 public:
  WaveModel(const WaveParams& params, double actuator_width)
      : params_(validated(params)), width_(actuator_width), grid_(params_) {
    if (!(width_ > 0.0) || 2.0 * width_ >= std::min(params_.lx, params_.ly))
      throw UsageError("WaveModel: actuator width must be positive and fit in the domain");
    const int n = grid_.size();
    const double cell = params_.hx() * params_.hy();
    mass_.resize(n);
    positions_.resize(n, 2);
    for (int k = 0; k < n; ++k) {
      const auto [i, j] = grid_.coords(k);
      mass_[k] = cell * grid_.trapezoid(i, j);
      positions_(k, 0) = i * params_.hx();
      positions_(k, 1) = j * params_.hy();
    }
    stiffness_ = wave_detail::stiffness(params_, grid_, Vector::Ones(n));
    laplacian_ = -1.0 * (wave_detail::diagonal(mass_.cwiseInverse()) * stiffness_);
    laplacian_.makeCompressed();

    SparseMatrix id(n, n);
    id.setIdentity();
    a_ = wave_detail::blocks(n, nullptr, &id, &laplacian_, nullptr);
    const SparseMatrix mass_diag = wave_detail::diagonal(mass_);
    gram_ = wave_detail::blocks(n, &stiffness_, nullptr, nullptr, &mass_diag);

    const SparseMatrix neg_id = -1.0 * id;
    const SparseMatrix neg_lap = -1.0 * laplacian_;
    a_adj_ = wave_detail::blocks(n, nullptr, &neg_id, &neg_lap, nullptr);

    stiff_solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(stiffness_);
    if (stiff_solver_->info() != Eigen::Success) throw ConfigurationError("wave stiffness is singular");
  }

  static const WaveParams& validated(const WaveParams& p) {
    p.validate();
    return p;
  }

  const WaveParams& params() const { return params_; }
  const WaveGrid& grid() const { return grid_; }
  double actuator_width() const { return width_; }
  Eigen::Index dof_count() const { return grid_.size(); }
  Eigen::Index state_size() const { return 2 * dof_count(); }
  Eigen::Index design_size() const { return 2; }
  /// Coordinates (x, y) of each unknown node.
  const Matrix& node_positions() const { return positions_; }

  /// Discrete Laplacian on the unknowns (Gamma_0 eliminated, Gamma_1 mirrored).
  const SparseMatrix& laplacian() const { return laplacian_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const Vector& mass() const { return mass_; }
  const SparseMatrix& linear_operator() const { return a_; }
  const SparseMatrix& gram() const { return gram_; }

  /// sum_edges q1 |grad w|^2 + sum_nodes m q2 v^2.
  SparseMatrix weighted_gram(const Vector& q1, const Vector& q2) const {
    const Eigen::Index n = dof_count();
    if (q1.size() != n || q2.size() != n) throw UsageError("weighted_gram: weight length mismatch");
    const SparseMatrix top = wave_detail::stiffness(params_, grid_, q1);
    const SparseMatrix bottom = wave_detail::diagonal(mass_.cwiseProduct(q2));
    return wave_detail::blocks(n, &top, nullptr, nullptr, &bottom);
  }

  /// F(w, v) = (0, F(w)).
  Vector nonlinearity(const Vector& x) const {
    check_state(*this, x, "wave nonlinearity");
    const Eigen::Index n = dof_count();
    Vector f = Vector::Zero(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) f[n + i] = params_.nonlinearity.value(x[i]);
    return f;
  }

  SparseMatrix nonlinearity_jacobian(const Vector& x) const {
    check_state(*this, x, "wave nonlinearity_jacobian");
    const Eigen::Index n = dof_count();
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = params_.nonlinearity.derivative(x[i]);
    const SparseMatrix dm = wave_detail::diagonal(d);
    return wave_detail::blocks(n, nullptr, nullptr, &dm, nullptr);
  }

  WaveActuator actuator(const ActuatorDesign& r) const {
    if (r.size() != 2) throw UsageError("wave design must have exactly two components");
    return WaveActuator{r[0], r[1], width_};
  }

  Vector input_vector(const ActuatorDesign& r) const;
  Matrix input_jacobian(const ActuatorDesign& r) const;

  /// Box of centres keeping the disk one cell inside the rectangle.
  std::pair<Vector, Vector> design_box() const {
    Vector lo(2), hi(2);
    lo << width_ + params_.hx(), width_ + params_.hy();
    hi << params_.lx - width_ - params_.hx(), params_.ly - width_ - params_.hy();
    return {lo, hi};
  }

  /// Continuous adjoint of the skew-adjoint generator: A*(f, g) = (-g, -Lap f).
  SparseMatrix adjoint_operator() const { return a_adj_; }

  /// F'*_{x_o}(f, g) = (h, 0) with Lap h = -F'(w_o) g, h = 0 on Gamma_0, dh/dn = 0 on Gamma_1.
  Vector nonlinearity_adjoint(const Vector& x_o, const Vector& p) const {
    const Eigen::Index n = dof_count();
    Vector out = Vector::Zero(2 * n);
    out.head(n) = adjoint_h(x_o.head(n), p.tail(n));
    return out;
  }

  Vector adjoint_h(const Vector& w_o, const Vector& g) const {
    const Eigen::Index n = dof_count();
    if (w_o.size() != n || g.size() != n) throw UsageError("wave_adjoint_h: field length mismatch");
    Vector rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] = mass_[i] * params_.nonlinearity.derivative(w_o[i]) * g[i];
    // Lap_h = -M^{-1} K, so Lap_h h = -F' g  <=>  K h = M F' g.
    return stiff_solver_->solve(rhs);
  }

 private:
  WaveParams params_;
  double width_;
  WaveGrid grid_;
  Vector mass_;
  Matrix positions_;
  SparseMatrix stiffness_, laplacian_, a_, gram_, a_adj_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> stiff_solver_;
};

/// Actuator shape samples r(x_k) at the unknown nodes.
inline Vector wave_actuator(const WaveModel& model, const WaveActuator& act) {
  check_wave_support(model.params(), act);
  const Matrix& pos = model.node_positions();
  const double scale = wave_bump_scale(act.width);
  const double pi = std::numbers::pi;
  Vector out(pos.rows());
  for (Eigen::Index k = 0; k < pos.rows(); ++k) {
    const double rho = std::hypot(pos(k, 0) - act.c1, pos(k, 1) - act.c2);
    out[k] = rho < act.width ? scale * (1.0 + std::cos(pi * rho / act.width)) : 0.0;
  }
  return out;
}

/// d r / d c1 and d r / d c2 at the unknown nodes (columns 0 and 1).
inline Matrix wave_actuator_grad(const WaveModel& model, const WaveActuator& act) {
  check_wave_support(model.params(), act);
  const Matrix& pos = model.node_positions();
  const double scale = wave_bump_scale(act.width);
  const double pi = std::numbers::pi;
  Matrix out = Matrix::Zero(pos.rows(), 2);
  for (Eigen::Index k = 0; k < pos.rows(); ++k) {
    const double dx = pos(k, 0) - act.c1;
    const double dy = pos(k, 1) - act.c2;
    const double rho = std::hypot(dx, dy);
    if (rho >= act.width || rho == 0.0) continue;
    // d/dc of (1 + cos(pi rho / W)) = sin(pi rho / W) (pi / W) (x - c) / rho
    const double s = scale * std::sin(pi * rho / act.width) * (pi / act.width) / rho;
    out(k, 0) = s * dx;
    out(k, 1) = s * dy;
  }
  return out;
}

inline Vector WaveModel::input_vector(const ActuatorDesign& r) const {
  const Eigen::Index n = dof_count();
  Vector out = Vector::Zero(2 * n);
  out.tail(n) = wave_actuator(*this, actuator(r));
  return out;
}

inline Matrix WaveModel::input_jacobian(const ActuatorDesign& r) const {
  const Eigen::Index n = dof_count();
  Matrix out = Matrix::Zero(2 * n, 2);
  out.bottomRows(n) = wave_actuator_grad(*this, actuator(r));
  return out;
}

inline WaveModel assemble_wave(const WaveParams& params, double actuator_width = 0.2) {
  return WaveModel(params, actuator_width);
}

/// Solve the adjoint boundary-value problem Lap h = -F'(w_o) g.
inline Vector wave_adjoint_h(const WaveModel& model, const Vector& w_o, const Vector& g) {
  return model.adjoint_h(w_o, g);
}

inline Vector wave_adjoint_h(const WaveParams& params, const Vector& w_o, const Vector& g) {
  return WaveModel(params, 0.25 * std::min(params.lx, params.ly)).adjoint_h(w_o, g);
}

}  // namespace actuopt
