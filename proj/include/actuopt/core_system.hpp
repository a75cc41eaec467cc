#pragma once

// Model-agnostic machinery for  x' = A x + F(x) + B(r) u  on a discrete
// state space: grids, the energy inner product, the IMEX (Crank-Nicolson +
// Adams-Bashforth-2) stepper, a Picard mild-solution oracle and the
// quadratic cost.

#include "actuopt/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace actuopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete state x = (w, v): first half deflection dofs, second half velocity dofs.
using StateVec = Eigen::VectorXd;
/// Scalar control sampled at the time-grid nodes (n_steps + 1 entries).
using ControlSignal = Eigen::VectorXd;
/// Actuator parameter (beam: bump center; wave: bump center coordinates).
using ActuatorDesign = Eigen::VectorXd;
/// States at every time node.
using Trajectory = std::vector<Eigen::VectorXd>;

inline Eigen::Ref<const Vector> w_part(const StateVec& x) { return x.head(x.size() / 2); }
inline Eigen::Ref<const Vector> v_part(const StateVec& x) { return x.tail(x.size() / 2); }

inline StateVec make_state(const Vector& w, const Vector& v) {
  if (w.size() != v.size()) throw UsageError("make_state: w and v lengths differ");
  StateVec x(w.size() + v.size());
  x << w, v;
  return x;
}

/// Uniform grid on [0, t_final].
struct TimeGrid {
  double t_final = 1.0;
  int n_steps = 100;

  TimeGrid() = default;
  TimeGrid(double t_final_, int n_steps_) : t_final(t_final_), n_steps(n_steps_) { validate(); }

  void validate() const {
    if (!(t_final > 0.0) || !std::isfinite(t_final))
      throw UsageError("TimeGrid: t_final must be positive and finite");
    if (n_steps < 2) throw UsageError("TimeGrid: n_steps must be at least 2");
  }

  double dt() const { return t_final / n_steps; }
  double time(int n) const { return t_final * static_cast<double>(n) / n_steps; }
  int n_nodes() const { return n_steps + 1; }

  /// Composite trapezoid weight of node n.
  double weight(int n) const { return (n == 0 || n == n_steps) ? 0.5 * dt() : dt(); }

  bool operator==(const TimeGrid&) const = default;
};

/// Weights of the state cost <Q x, x> and the control cost R |u|^2.
struct CostSpec {
  Vector q1;  // on w-dofs
  Vector q2;  // on v-dofs
  double r_weight = 1.0;

  void validate(Eigen::Index n_dof) const {
    if (q1.size() != n_dof || q2.size() != n_dof)
      throw UsageError("CostSpec: weight fields must have one entry per dof");
    if ((q1.array() < 0.0).any() || (q2.array() < 0.0).any() || !q1.allFinite() || !q2.allFinite())
      throw UsageError("CostSpec: q1 and q2 must be finite and non-negative");
    if (!(r_weight > 0.0) || !std::isfinite(r_weight))
      throw UsageError("CostSpec: R_weight must be positive");
  }

  static CostSpec uniform(Eigen::Index n_dof, double q1v, double q2v, double r) {
    return CostSpec{Vector::Constant(n_dof, q1v), Vector::Constant(n_dof, q2v), r};
  }
};

/// Discretization contract shared by the beam and wave models.
///
/// The linear operator, Gram matrix and input vectors act on stacked states
/// (w, v) of length state_size() = 2 * dof_count(). The nonlinearity must
/// satisfy F(0) = 0 exactly. adjoint_operator() and nonlinearity_adjoint()
/// are assembled from the continuous adjoint formulas and are used only by
/// the continuous-adjoint oracle.
template <class M>
concept SemilinearModel = requires(const M& m, const Vector& x, const Vector& r) {
  { m.dof_count() } -> std::convertible_to<Eigen::Index>;
  { m.state_size() } -> std::convertible_to<Eigen::Index>;
  { m.design_size() } -> std::convertible_to<Eigen::Index>;
  { m.linear_operator() } -> std::convertible_to<const SparseMatrix&>;
  { m.gram() } -> std::convertible_to<const SparseMatrix&>;
  { m.nonlinearity(x) } -> std::convertible_to<Vector>;
  { m.nonlinearity_jacobian(x) } -> std::convertible_to<SparseMatrix>;
  { m.input_vector(r) } -> std::convertible_to<Vector>;
  { m.input_jacobian(r) } -> std::convertible_to<Matrix>;
  { m.weighted_gram(x, x) } -> std::convertible_to<SparseMatrix>;
  { m.adjoint_operator() } -> std::convertible_to<SparseMatrix>;
  { m.nonlinearity_adjoint(x, x) } -> std::convertible_to<Vector>;
};

template <SemilinearModel Model>
void check_state(const Model& model, const StateVec& x, const char* who) {
  if (x.size() != model.state_size()) {
    std::ostringstream os;
    os << who << ": state has " << x.size() << " entries, model expects " << model.state_size();
    throw UsageError(os.str());
  }
}

inline void check_control(const ControlSignal& u, const TimeGrid& grid, const char* who) {
  if (u.size() != grid.n_nodes()) {
    std::ostringstream os;
    os << who << ": control has " << u.size() << " samples, grid has " << grid.n_nodes() << " nodes";
    throw UsageError(os.str());
  }
}

/// Energy inner product a^T G b.
template <SemilinearModel Model>
double energy_inner(const Model& model, const StateVec& a, const StateVec& b) {
  check_state(model, a, "energy_inner");
  check_state(model, b, "energy_inner");
  return a.dot(model.gram() * b);
}

template <SemilinearModel Model>
double energy_norm(const Model& model, const StateVec& a) {
  return std::sqrt(std::max(0.0, energy_inner(model, a, a)));
}

/// Trapezoid L2(0, tau) inner product of two node-sampled signals.
inline double l2_inner(const Vector& a, const Vector& b, const TimeGrid& grid) {
  check_control(a, grid, "l2_inner");
  check_control(b, grid, "l2_inner");
  double s = 0.0;
  for (int n = 0; n <= grid.n_steps; ++n) s += grid.weight(n) * a[n] * b[n];
  return s;
}

inline double l2_norm(const Vector& a, const TimeGrid& grid) {
  return std::sqrt(std::max(0.0, l2_inner(a, a, grid)));
}

/// Midpoint control average consumed by step n -> n+1.
inline double control_midpoint(const ControlSignal& u, int n) { return 0.5 * (u[n] + u[n + 1]); }

/// Crank-Nicolson factorization shared by the forward, linearized and
/// adjoint sweeps:  (I - dt/2 A) x_{n+1} = (I + dt/2 A) x_n + dt * rhs.
class ImexStepper {
 public:
  template <SemilinearModel Model>
  ImexStepper(const Model& model, double dt) : dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("ImexStepper: dt must be positive");
    const SparseMatrix& a = model.linear_operator();
    SparseMatrix identity(a.rows(), a.cols());
    identity.setIdentity();
    implicit_ = identity - 0.5 * dt * a;
    explicit_ = identity + 0.5 * dt * a;
    implicit_.makeCompressed();
    explicit_.makeCompressed();
    implicit_t_ = implicit_.transpose();
    explicit_t_ = explicit_.transpose();
    factorize(lu_, implicit_);
    factorize(lu_t_, implicit_t_);
  }

  double dt() const { return dt_; }

  /// Solve (I - dt/2 A) y = rhs.
  Vector solve(const Vector& rhs) const { return lu_.solve(rhs); }
  /// Solve (I - dt/2 A)^T y = rhs.
  Vector solve_transpose(const Vector& rhs) const { return lu_t_.solve(rhs); }

  const SparseMatrix& explicit_matrix() const { return explicit_; }
  const SparseMatrix& explicit_matrix_transpose() const { return explicit_t_; }

  /// One step given the extrapolated nonlinearity and the input forcing b*u_mid.
  Vector advance(const Vector& x_n, const Vector& f_extrap, const Vector& forcing) const {
    Vector rhs = explicit_ * x_n;
    rhs.noalias() += dt_ * (f_extrap + forcing);
    return solve(rhs);
  }

 private:
  void factorize(Eigen::SparseLU<SparseMatrix>& lu, const SparseMatrix& m) const {
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) {
      std::ostringstream os;
      os << "implicit Crank-Nicolson system is singular at dt=" << dt_
         << "; A_h has an eigenvalue near 2/dt (try a different dt)";
      throw ConfigurationError(os.str());
    }
  }

  double dt_;
  SparseMatrix implicit_, explicit_, implicit_t_, explicit_t_;
  Eigen::SparseLU<SparseMatrix> lu_, lu_t_;
};

/// AB2 extrapolation 3/2 F(x_n) - 1/2 F(x_{n-1}); F(x_n) alone on the first step.
inline Vector extrapolate_nonlinearity(const Vector& f_n, const Vector* f_prev) {
  if (f_prev == nullptr) return f_n;
  return 1.5 * f_n - 0.5 * (*f_prev);
}

/// Single IMEX step. Factorizes the implicit system on every call; use
/// solve_forward for whole trajectories.
template <SemilinearModel Model>
StateVec imex_step(const Model& model, const StateVec& x_n, const std::optional<StateVec>& x_prev,
                   double u_mid, const ActuatorDesign& r, double dt) {
  check_state(model, x_n, "imex_step");
  const ImexStepper stepper(model, dt);
  const Vector f_n = model.nonlinearity(x_n);
  Vector f_prev;
  if (x_prev) {
    check_state(model, *x_prev, "imex_step");
    f_prev = model.nonlinearity(*x_prev);
  }
  const Vector f = extrapolate_nonlinearity(f_n, x_prev ? &f_prev : nullptr);
  return stepper.advance(x_n, f, model.input_vector(r) * u_mid);
}

/// Integrate the semi-linear system over the grid. Returns n_steps + 1 states.
template <SemilinearModel Model>
Trajectory solve_forward(const Model& model, const StateVec& x0, const ControlSignal& u,
                         const ActuatorDesign& r, const TimeGrid& grid) {
  grid.validate();
  check_state(model, x0, "solve_forward");
  check_control(u, grid, "solve_forward");
  if (!x0.allFinite()) throw UsageError("solve_forward: initial state is not finite");
  if (!u.allFinite()) throw UsageError("solve_forward: control is not finite");

  const ImexStepper stepper(model, grid.dt());
  const Vector b = model.input_vector(r);

  Trajectory traj;
  traj.reserve(grid.n_nodes());
  traj.push_back(x0);
  Vector f_prev = model.nonlinearity(x0);
  Vector f_n = f_prev;
  for (int n = 0; n < grid.n_steps; ++n) {
    const Vector f = extrapolate_nonlinearity(f_n, n == 0 ? nullptr : &f_prev);
    Vector next = stepper.advance(traj.back(), f, b * control_midpoint(u, n));
    if (!next.allFinite()) {
      std::ostringstream os;
      os << "non-finite state at time step " << n + 1 << " (t=" << grid.time(n + 1) << ")";
      throw BlowUpError(os.str(), n + 1, std::move(traj));
    }
    traj.push_back(std::move(next));
    f_prev = std::move(f_n);
    f_n = model.nonlinearity(traj.back());
  }
  return traj;
}

struct PicardResult {
  Trajectory trajectory;
  /// max_n ||x^{k+1}(t_n) - x^k(t_n)|| in the energy norm, one entry per iteration.
  std::vector<double> distances;
  int iterations = 0;
  bool converged = false;

  /// distances[k+1] / distances[k].
  std::vector<double> ratios() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < distances.size(); ++k)
      out.push_back(distances[k - 1] > 0.0 ? distances[k] / distances[k - 1] : 0.0);
    return out;
  }
};

/// Fixed-point iteration on the variation-of-constants equation
///   x = T(t) x0 + int T(t-s) F(x(s)) ds + int T(t-s) B(r) u(s) ds,
/// where each sweep propagates with the Crank-Nicolson semigroup and the
/// nonlinearity frozen at the previous iterate (trapezoid in time).
template <SemilinearModel Model>
PicardResult picard_mild_solve(const Model& model, const StateVec& x0, const ControlSignal& u,
                               const ActuatorDesign& r, const TimeGrid& grid, int max_iters,
                               double tol) {
  grid.validate();
  check_state(model, x0, "picard_mild_solve");
  check_control(u, grid, "picard_mild_solve");
  if (max_iters < 1) throw UsageError("picard_mild_solve: max_iters must be >= 1");

  const ImexStepper stepper(model, grid.dt());
  const Vector b = model.input_vector(r);

  PicardResult result;
  Trajectory current(grid.n_nodes(), x0);
  int non_contracting = 0;
  for (int k = 0; k < max_iters; ++k) {
    std::vector<Vector> frozen(grid.n_nodes());
    for (int n = 0; n <= grid.n_steps; ++n) frozen[n] = model.nonlinearity(current[n]);

    Trajectory next;
    next.reserve(grid.n_nodes());
    next.push_back(x0);
    for (int n = 0; n < grid.n_steps; ++n) {
      const Vector f = 0.5 * (frozen[n] + frozen[n + 1]);
      next.push_back(stepper.advance(next.back(), f, b * control_midpoint(u, n)));
    }

    double dist = 0.0, scale = 0.0;
    for (int n = 0; n <= grid.n_steps; ++n) {
      if (!next[n].allFinite()) {
        std::ostringstream os;
        os << "Picard iterate " << k + 1 << " is not finite; reduce the horizon";
        throw ContractionFailure(os.str(), result.distances);
      }
      dist = std::max(dist, energy_norm(model, Vector(next[n] - current[n])));
      scale = std::max(scale, energy_norm(model, next[n]));
    }
    result.distances.push_back(dist);
    result.iterations = k + 1;
    current = std::move(next);

    if (dist <= tol * std::max(1.0, scale)) {
      result.converged = true;
      break;
    }
    const std::size_t m = result.distances.size();
    if (m >= 2 && result.distances[m - 1] >= result.distances[m - 2]) {
      if (++non_contracting >= 3) {
        std::ostringstream os;
        os << "Picard map is not contracting (distance ratio >= 1 for 3 iterations); "
           << "reduce the horizon tau=" << grid.t_final;
        throw ContractionFailure(os.str(), result.distances);
      }
    } else {
      non_contracting = 0;
    }
  }
  result.trajectory = std::move(current);
  return result;
}

/// Trapezoid-in-time cost  sum_n c_n ( x_n^T W x_n + R u_n^2 ),
/// W the q1/q2-weighted Gram form.
template <SemilinearModel Model>
double cost_eval(const Model& model, const CostSpec& cost, const Trajectory& traj,
                 const ControlSignal& u, const TimeGrid& grid) {
  cost.validate(model.dof_count());
  check_control(u, grid, "cost_eval");
  if (static_cast<int>(traj.size()) != grid.n_nodes())
    throw UsageError("cost_eval: trajectory length does not match the time grid");
  const SparseMatrix weight = model.weighted_gram(cost.q1, cost.q2);
  double j = 0.0;
  for (int n = 0; n <= grid.n_steps; ++n) {
    check_state(model, traj[n], "cost_eval");
    j += grid.weight(n) * (traj[n].dot(weight * traj[n]) + cost.r_weight * u[n] * u[n]);
  }
  return j;
}

/// Energy <x, x> at every node of a trajectory.
template <SemilinearModel Model>
std::vector<double> energy_history(const Model& model, const Trajectory& traj) {
  std::vector<double> e;
  e.reserve(traj.size());
  for (const auto& x : traj) e.push_back(energy_inner(model, x, x));
  return e;
}

}  // namespace actuopt
