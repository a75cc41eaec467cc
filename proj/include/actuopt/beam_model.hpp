#pragma once

// Railway-track beam on a nonlinear elastic foundation:
//
//   rho_a w_tt + (EI w_xx + Cd w_txx)_xx + mu w_t + k w + alpha w^3 = b(x; r) u(t)
//
// simply supported at both ends, discretized by finite differences on a
// uniform grid with deflection and velocity dofs at the interior nodes.

#include "actuopt/core_system.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace actuopt {

struct BeamParams {
  double ei = 1.0;      // flexural rigidity E*I
  double rho_a = 1.0;   // mass per unit length
  double length = 1.0;
  double k = 1.0;       // linear foundation stiffness
  double alpha = 1.0;   // cubic foundation coefficient
  double mu = 0.1;      // viscous foundation damping
  double cd = 0.01;     // Kelvin-Voigt coefficient
  int n_cells = 64;

  double spacing() const { return length / n_cells; }

  void validate() const {
    auto fail = [](const char* msg) { throw UsageError(std::string("BeamParams: ") + msg); };
    if (!(ei > 0.0) || !(rho_a > 0.0) || !(length > 0.0)) fail("EI, rho_a and length must be positive");
    if (!(k > 0.0)) fail("k must be positive (the energy norm needs it)");
    if (!(alpha >= 0.0) || !(mu >= 0.0) || !(cd >= 0.0)) fail("alpha, mu and Cd must be non-negative");
    if (n_cells < 8) fail("n_cells must be at least 8");
  }

  bool operator==(const BeamParams&) const = default;
};

/// Raised-cosine actuator of half-width `width` centred at r.
struct BeamActuator {
  double center = 0.5;
  double width = 0.05;
};

namespace beam_detail {

inline SparseMatrix identity(Eigen::Index n) {
  SparseMatrix i(n, n);
  i.setIdentity();
  return i;
}

inline SparseMatrix diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// 2x2 block matrix [[a, b], [c, d]] of n x n sparse blocks (empty blocks allowed).
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

}  // namespace beam_detail

/// Second difference on the interior nodes with w = 0 at both ends.
inline SparseMatrix beam_second_difference(int n_cells, double h) {
  const int n = n_cells - 1;
  std::vector<Eigen::Triplet<double>> t;
  const double s = 1.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, -2.0 * s);
    if (i > 0) t.emplace_back(i, i - 1, s);
    if (i + 1 < n) t.emplace_back(i, i + 1, s);
  }
  SparseMatrix d2(n, n);
  d2.setFromTriplets(t.begin(), t.end());
  return d2;
}

/// Five-point fourth difference with simply-supported ends: w_0 = w_N = 0 and
/// the ghost reflection w_{-1} = -w_1, w_{N+1} = -w_{N-1}.
inline SparseMatrix beam_fourth_difference(int n_cells, double h) {
  const int n = n_cells - 1;
  const double s = 1.0 / (h * h * h * h);
  std::vector<Eigen::Triplet<double>> t;
  // Full-grid node index j = i + 1. Value at node j expressed in interior dofs.
  auto add = [&](int row, int node, double coef) {
    if (node == 0 || node == n_cells) return;  // w = 0 at the supports
    if (node == -1) { t.emplace_back(row, 0, -coef); return; }
    if (node == n_cells + 1) { t.emplace_back(row, n - 1, -coef); return; }
    t.emplace_back(row, node - 1, coef);
  };
  for (int i = 0; i < n; ++i) {
    const int j = i + 1;
    add(i, j - 2, s);
    add(i, j - 1, -4.0 * s);
    add(i, j, 6.0 * s);
    add(i, j + 1, -4.0 * s);
    add(i, j + 2, s);
  }
  SparseMatrix d4(n, n);
  d4.setFromTriplets(t.begin(), t.end());
  return d4;
}

/// Raised-cosine bump b(x; r) = (1 + cos(pi (x - r)/width)) / (2 width) on |x - r| < width.
/// Unit integral, C^1 in x and r.
inline double beam_bump(double x, double center, double width) {
  const double d = x - center;
  if (std::abs(d) >= width) return 0.0;
  return (1.0 + std::cos(std::numbers::pi * d / width)) / (2.0 * width);
}

inline double beam_bump_dr(double x, double center, double width) {
  const double d = x - center;
  if (std::abs(d) >= width) return 0.0;
  const double pi = std::numbers::pi;
  return pi * std::sin(pi * d / width) / (2.0 * width * width);
}

inline void check_beam_support(const BeamParams& params, const BeamActuator& act) {
  if (!(act.width > 0.0)) throw UsageError("BeamActuator: width must be positive");
  if (act.center - act.width < 0.0 || act.center + act.width > params.length) {
    std::ostringstream os;
    os << "actuator support [" << act.center - act.width << ", " << act.center + act.width
       << "] leaves (0, " << params.length << "); project the design first";
    throw ProjectionRequired(os.str());
  }
}

/// Samples of b(x_i; r) at the interior nodes.
inline Vector beam_b(const BeamParams& params, const BeamActuator& act) {
  check_beam_support(params, act);
  const int n = params.n_cells - 1;
  const double h = params.spacing();
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = beam_bump((i + 1) * h, act.center, act.width);
  return b;
}

/// Samples of db/dr at the interior nodes.
inline Vector beam_b_r(const BeamParams& params, const BeamActuator& act) {
  check_beam_support(params, act);
  const int n = params.n_cells - 1;
  const double h = params.spacing();
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = beam_bump_dr((i + 1) * h, act.center, act.width);
  return b;
}

/// Closed-form Green's function of h'''' = delta on (0, l) with h = h'' = 0 at both ends.
/// The branch x <= eta is the published formula; the branch x > eta is its
/// mirror image G(eta, x).
inline double greens_eval(const BeamParams& params, double x, double eta) {
  const double l = params.length;
  if (x < 0.0 || x > l || eta < 0.0 || eta > l || !std::isfinite(x) || !std::isfinite(eta))
    throw UsageError("greens_eval: arguments must lie in [0, length]");
  auto branch = [l](double s, double e) {
    return ((2.0 * l * l * e - 3.0 * l * e * e + e * e * e) * s + (e - l) * s * s * s) / (6.0 * l);
  };
  return x <= eta ? branch(x, eta) : branch(eta, x);
}

/// Solve  EI h'''' + k h = -3 alpha (w_o)^2 g  with simply-supported ends using
/// the same fourth-difference stencil as the dynamics. Accepts k = 0.
inline Vector beam_adjoint_h(const BeamParams& params, const Vector& w_o, const Vector& g) {
  if (!(params.ei > 0.0) || !(params.k >= 0.0) || params.n_cells < 2)
    throw UsageError("beam_adjoint_h: need EI > 0 and k >= 0");
  const int n = params.n_cells - 1;
  if (w_o.size() != n || g.size() != n) throw UsageError("beam_adjoint_h: field length mismatch");
  const double h = params.spacing();
  SparseMatrix op = params.ei * beam_fourth_difference(params.n_cells, h) + params.k * beam_detail::identity(n);
  Eigen::SimplicialLDLT<SparseMatrix> solver(op);
  if (solver.info() != Eigen::Success) throw std::logic_error("beam_adjoint_h: singular operator");
  const Vector rhs = (-3.0 * params.alpha) * (w_o.array().square() * g.array()).matrix();
  return solver.solve(rhs);
}

/// h(x_i) = -3 alpha int G(x_i, eta) w_o(eta)^2 g(eta) d eta by the trapezoid rule.
/// Valid as a solution of the adjoint ODE only for EI = 1 and k = 0.
inline Vector beam_adjoint_h_greens(const BeamParams& params, const Vector& w_o, const Vector& g) {
  const int n = params.n_cells - 1;
  if (w_o.size() != n || g.size() != n) throw UsageError("beam_adjoint_h_greens: field length mismatch");
  const double h = params.spacing();
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    // End nodes carry zero weight: w_o and g vanish there.
    for (int j = 0; j < n; ++j)
      s += greens_eval(params, (i + 1) * h, (j + 1) * h) * w_o[j] * w_o[j] * g[j] * h;
    out[i] = -3.0 * params.alpha * s;
  }
  return out;
}

/// Assembled beam discretization. Design vector: { actuator center }.
class BeamModel {
 public:
  BeamModel(const BeamParams& params, double actuator_width)
      : params_(params), width_(actuator_width) {
    params_.validate();
    if (!(width_ > 0.0) || 2.0 * width_ >= params_.length)
      throw UsageError("BeamModel: actuator width must be positive and fit in the beam");
    const int n = params_.n_cells - 1;
    const double h = params_.spacing();
    d2_ = beam_second_difference(params_.n_cells, h);
    d4_ = beam_fourth_difference(params_.n_cells, h);
    const SparseMatrix id = beam_detail::identity(n);

    const SparseMatrix stiff = (params_.ei * d4_ + params_.k * id);
    const SparseMatrix lower_left = (-1.0 / params_.rho_a) * stiff;
    const SparseMatrix lower_right = (-1.0 / params_.rho_a) * (params_.cd * d4_ + params_.mu * id);
    a_ = beam_detail::blocks(n, nullptr, &id, &lower_left, &lower_right);

    gram_ = weighted_gram(Vector::Ones(n), Vector::Ones(n));

    const SparseMatrix neg_id = -1.0 * id;
    const SparseMatrix adj_ll = (1.0 / params_.rho_a) * stiff;
    const SparseMatrix adj_lr = (-1.0 / params_.rho_a) * (params_.cd * d4_ + params_.mu * id);
    a_adj_ = beam_detail::blocks(n, nullptr, &neg_id, &adj_ll, &adj_lr);

    stiff_solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(stiff);
    positions_.resize(n, 1);
    for (int i = 0; i < n; ++i) positions_(i, 0) = (i + 1) * h;
  }

  const BeamParams& params() const { return params_; }
  double actuator_width() const { return width_; }
  Eigen::Index dof_count() const { return params_.n_cells - 1; }
  Eigen::Index state_size() const { return 2 * dof_count(); }
  Eigen::Index design_size() const { return 1; }
  /// Node coordinates of the w-dofs (one column).
  const Matrix& node_positions() const { return positions_; }

  const SparseMatrix& second_difference() const { return d2_; }
  const SparseMatrix& fourth_difference() const { return d4_; }
  const SparseMatrix& linear_operator() const { return a_; }
  const SparseMatrix& gram() const { return gram_; }

  /// Discrete energy form  h sum [ EI q1 (D2 w)^2 + k q1 w^2 + rho_a q2 v^2 ].
  SparseMatrix weighted_gram(const Vector& q1, const Vector& q2) const {
    const Eigen::Index n = dof_count();
    if (q1.size() != n || q2.size() != n) throw UsageError("weighted_gram: weight length mismatch");
    const double h = params_.spacing();
    const SparseMatrix q1d = beam_detail::diagonal(q1);
    const SparseMatrix top = h * (params_.ei * SparseMatrix(d2_.transpose() * q1d * d2_) + params_.k * q1d);
    const SparseMatrix bottom = (h * params_.rho_a) * beam_detail::diagonal(q2);
    return beam_detail::blocks(n, &top, nullptr, nullptr, &bottom);
  }

  /// F(w, v) = (0, -alpha w^3 / rho_a).
  Vector nonlinearity(const Vector& x) const {
    check_state(*this, x, "beam nonlinearity");
    const Eigen::Index n = dof_count();
    Vector f = Vector::Zero(2 * n);
    f.tail(n) = (-params_.alpha / params_.rho_a) * x.head(n).array().cube().matrix();
    return f;
  }

  /// Jacobian (f, g) -> (0, -3 alpha w^2 f / rho_a).
  SparseMatrix nonlinearity_jacobian(const Vector& x) const {
    check_state(*this, x, "beam nonlinearity_jacobian");
    const Eigen::Index n = dof_count();
    const SparseMatrix d = beam_detail::diagonal((-3.0 * params_.alpha / params_.rho_a) * x.head(n).array().square().matrix());
    return beam_detail::blocks(n, nullptr, nullptr, &d, nullptr);
  }

  BeamActuator actuator(const ActuatorDesign& r) const {
    if (r.size() != 1) throw UsageError("beam design must have exactly one component");
    return BeamActuator{r[0], width_};
  }

  /// B(r) = (0, b(.; r) / rho_a).
  Vector input_vector(const ActuatorDesign& r) const {
    const Eigen::Index n = dof_count();
    Vector out = Vector::Zero(2 * n);
    out.tail(n) = beam_b(params_, actuator(r)) / params_.rho_a;
    return out;
  }

  Matrix input_jacobian(const ActuatorDesign& r) const {
    const Eigen::Index n = dof_count();
    Matrix out = Matrix::Zero(2 * n, 1);
    out.col(0).tail(n) = beam_b_r(params_, actuator(r)) / params_.rho_a;
    return out;
  }

  /// Closed interval of centres keeping the support one cell inside the beam.
  std::pair<Vector, Vector> design_box() const {
    const double h = params_.spacing();
    return {Vector::Constant(1, width_ + h), Vector::Constant(1, params_.length - width_ - h)};
  }

  /// Continuous adjoint A*(f, g) = (-g, (EI D4 f - Cd D4 g + k f - mu g) / rho_a).
  SparseMatrix adjoint_operator() const { return a_adj_; }

  /// F'*_{x_o}(f, g) = (h, 0) with EI h'''' + k h = -3 alpha w_o^2 g.
  Vector nonlinearity_adjoint(const Vector& x_o, const Vector& p) const {
    const Eigen::Index n = dof_count();
    const Vector rhs = (-3.0 * params_.alpha) * (x_o.head(n).array().square() * p.tail(n).array()).matrix();
    Vector out = Vector::Zero(2 * n);
    out.head(n) = stiff_solver_->solve(rhs);
    return out;
  }

 private:
  BeamParams params_;
  double width_;
  SparseMatrix d2_, d4_, a_, gram_, a_adj_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> stiff_solver_;
  Matrix positions_;
};

/// Assemble the default-width beam model.
inline BeamModel assemble_beam(const BeamParams& params, double actuator_width = 0.05) {
  return BeamModel(params, actuator_width);
}

/// Beam nonlinearity on a stacked state, free-function form.
inline Vector beam_F(const BeamParams& params, const StateVec& x) {
  const Eigen::Index n = x.size() / 2;
  Vector f = Vector::Zero(x.size());
  f.tail(n) = (-params.alpha / params.rho_a) * x.head(n).array().cube().matrix();
  return f;
}

inline Matrix beam_F_jac(const BeamParams& params, const StateVec& x) {
  const Eigen::Index n = x.size() / 2;
  Matrix j = Matrix::Zero(x.size(), x.size());
  j.bottomLeftCorner(n, n).diagonal() = (-3.0 * params.alpha / params.rho_a) * x.head(n).array().square().matrix();
  return j;
}

}  // namespace actuopt
