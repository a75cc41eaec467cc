#pragma once

// Discretize-then-optimize derivatives of the cost.
//
// The forward IMEX step  M- x_{n+1} = M+ x_n + dt Fext_n + dt b ubar_n  is
// differentiated exactly; the backward sweep is its transpose. With
// Euclidean multipliers lambda_m (m = 1..N, lambda_{N+1} = lambda_{N+2} = 0):
//
//   M-^T lambda_m = M+^T lambda_{m+1}
//                   + dt J_m^T (3/2 lambda_{m+1} - 1/2 lambda_{m+2}) + s_m,
//
// where J_m is the Jacobian of F at x_m and s_m the cost source. The adjoint
// state in the energy inner product is p_n = 1/2 G^{-1} lambda_{n+1}; it lives
// on the interval [t_n, t_{n+1}] and p_N = 0.

#include "actuopt/admissible.hpp"
#include "actuopt/core_system.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <sstream>

namespace actuopt {

struct AdjointState {
  /// Energy-space adjoint p_0..p_N, p_N = 0 exactly.
  Trajectory p;
  /// Euclidean multipliers lambda_0..lambda_{N+1}; entry 0 and N+1 are zero.
  Trajectory multipliers;
};

struct GradientReport {
  /// Riesz representative of dJ/du in the trapezoid L2(0, tau) inner product.
  ControlSignal grad_u;
  Vector grad_r;
  double J = 0.0;
};

struct OptimalityResidual {
  double res_u = 0.0;      // || u + R^{-1} B* p ||_{L2}
  Vector res_r;            // | int (B'_r u)* p dt |, componentwise
  double proj_u = 0.0;     // || u - P_U(u - grad_u) ||_{L2}
  double proj_r = 0.0;     // || r - P_K(r - grad_r) ||
};

namespace adjoint_detail {

inline void check_trajectory(const Trajectory& x, const TimeGrid& grid, const char* who) {
  if (static_cast<int>(x.size()) != grid.n_nodes()) {
    std::ostringstream os;
    os << who << ": trajectory has " << x.size() << " states, grid has " << grid.n_nodes() << " nodes";
    throw UsageError(os.str());
  }
}

/// Linearized IMEX sweep with per-step forcing vectors forcing[n] (n = 0..N-1).
template <SemilinearModel Model>
Trajectory linearized_sweep(const Model& model, const ImexStepper& stepper, const Trajectory& x,
                            const std::vector<Vector>& forcing) {
  const int n_steps = static_cast<int>(x.size()) - 1;
  Trajectory dx;
  dx.reserve(x.size());
  dx.push_back(Vector::Zero(model.state_size()));
  Vector jf_prev = Vector::Zero(model.state_size());
  for (int n = 0; n < n_steps; ++n) {
    const Vector jf = model.nonlinearity_jacobian(x[n]) * dx[n];
    const Vector f = extrapolate_nonlinearity(jf, n == 0 ? nullptr : &jf_prev);
    dx.push_back(stepper.advance(dx[n], f, forcing[n]));
    jf_prev = jf;
  }
  return dx;
}

/// Transposed sweep. sources[m] for m = 0..N (entry 0 is unused).
template <SemilinearModel Model>
Trajectory backward_sweep(const Model& model, const ImexStepper& stepper, const Trajectory& x,
                          const std::vector<Vector>& sources) {
  const int n_steps = static_cast<int>(x.size()) - 1;
  const double dt = stepper.dt();
  const Vector zero = Vector::Zero(model.state_size());
  Trajectory lambda(n_steps + 3, zero);
  for (int m = n_steps; m >= 1; --m) {
    Vector rhs = stepper.explicit_matrix_transpose() * lambda[m + 1];
    const Vector combo = 1.5 * lambda[m + 1] - 0.5 * lambda[m + 2];
    if (combo.squaredNorm() > 0.0) rhs.noalias() += dt * (model.nonlinearity_jacobian(x[m]).transpose() * combo);
    rhs += sources[m];
    lambda[m] = stepper.solve_transpose(rhs);
  }
  lambda.resize(n_steps + 2);
  return lambda;
}

/// dJ/du_n contributions of the multipliers, divided by the trapezoid weight.
inline ControlSignal control_adjoint(const Vector& b, const Trajectory& lambda, const TimeGrid& grid) {
  const int n_steps = grid.n_steps;
  const double dt = grid.dt();
  ControlSignal out(n_steps + 1);
  for (int n = 0; n <= n_steps; ++n) {
    double s = 0.0;
    if (n >= 1) s += b.dot(lambda[n]);
    if (n <= n_steps - 1) s += b.dot(lambda[n + 1]);
    out[n] = 0.5 * dt * s / grid.weight(n);
  }
  return out;
}

/// sum_k dt ubar_k B_r^T lambda_{k+1}.
inline Vector design_adjoint(const Matrix& b_r, const ControlSignal& u, const Trajectory& lambda,
                             const TimeGrid& grid) {
  Vector g = Vector::Zero(b_r.cols());
  for (int k = 0; k < grid.n_steps; ++k)
    g.noalias() += grid.dt() * control_midpoint(u, k) * (b_r.transpose() * lambda[k + 1]);
  return g;
}

}  // namespace adjoint_detail

/// Solution of the linearized equation  x~' = (A + F'_{x(t)}) x~ + B(r) u~,  x~(0) = 0,
/// realized as the exact derivative of the IMEX scheme.
template <SemilinearModel Model>
Trajectory solve_linearized(const Model& model, const Trajectory& x_traj, const ControlSignal& du,
                            const ActuatorDesign& r, const TimeGrid& grid) {
  adjoint_detail::check_trajectory(x_traj, grid, "solve_linearized");
  check_control(du, grid, "solve_linearized");
  const ImexStepper stepper(model, grid.dt());
  const Vector b = model.input_vector(r);
  std::vector<Vector> forcing(grid.n_steps);
  for (int n = 0; n < grid.n_steps; ++n) forcing[n] = b * control_midpoint(du, n);
  return adjoint_detail::linearized_sweep(model, stepper, x_traj, forcing);
}

/// Linearized response to a design perturbation dr:  forcing (B'_r dr) u.
template <SemilinearModel Model>
Trajectory solve_linearized_design(const Model& model, const Trajectory& x_traj, const ControlSignal& u,
                                   const ActuatorDesign& r, const Vector& dr, const TimeGrid& grid) {
  adjoint_detail::check_trajectory(x_traj, grid, "solve_linearized_design");
  check_control(u, grid, "solve_linearized_design");
  const ImexStepper stepper(model, grid.dt());
  const Vector db = model.input_jacobian(r) * dr;
  std::vector<Vector> forcing(grid.n_steps);
  for (int n = 0; n < grid.n_steps; ++n) forcing[n] = db * control_midpoint(u, n);
  return adjoint_detail::linearized_sweep(model, stepper, x_traj, forcing);
}

/// Adjoint state sourced by the cost along x_traj. The design r is not needed by
/// the sweep itself; it is accepted so every derivative routine shares one signature.
template <SemilinearModel Model>
AdjointState solve_adjoint(const Model& model, const CostSpec& cost, const Trajectory& x_traj,
                           const ActuatorDesign& /*r*/, const TimeGrid& grid) {
  adjoint_detail::check_trajectory(x_traj, grid, "solve_adjoint");
  cost.validate(model.dof_count());
  const ImexStepper stepper(model, grid.dt());
  const SparseMatrix weight = model.weighted_gram(cost.q1, cost.q2);
  std::vector<Vector> sources(grid.n_nodes());
  for (int m = 0; m <= grid.n_steps; ++m) sources[m] = (2.0 * grid.weight(m)) * (weight * x_traj[m]);

  AdjointState out;
  out.multipliers = adjoint_detail::backward_sweep(model, stepper, x_traj, sources);
  Eigen::SimplicialLDLT<SparseMatrix> gram_solver(model.gram());
  out.p.resize(grid.n_nodes());
  for (int n = 0; n < grid.n_steps; ++n) out.p[n] = 0.5 * gram_solver.solve(out.multipliers[n + 1]);
  out.p[grid.n_steps] = Vector::Zero(model.state_size());
  return out;
}

/// Relative discrepancy of  <x^, S'u~>_{L2(0,tau;X)}  and  <S'* x^, u~>_{L2(0,tau)},
/// both computed with the discrete sweeps. Normalized by the Cauchy-Schwarz bound.
template <SemilinearModel Model>
double duality_check(const Model& model, const Trajectory& x_traj, const ActuatorDesign& r,
                     const ControlSignal& du, const Trajectory& x_hat, const TimeGrid& grid) {
  adjoint_detail::check_trajectory(x_traj, grid, "duality_check");
  adjoint_detail::check_trajectory(x_hat, grid, "duality_check");
  const Trajectory dx = solve_linearized(model, x_traj, du, r, grid);
  const SparseMatrix& gram = model.gram();

  double lhs = 0.0, nx_hat = 0.0, ndx = 0.0;
  for (int n = 0; n <= grid.n_steps; ++n) {
    const Vector g_hat = gram * x_hat[n];
    lhs += grid.weight(n) * g_hat.dot(dx[n]);
    nx_hat += grid.weight(n) * g_hat.dot(x_hat[n]);
    ndx += grid.weight(n) * dx[n].dot(gram * dx[n]);
  }

  const ImexStepper stepper(model, grid.dt());
  std::vector<Vector> sources(grid.n_nodes());
  for (int m = 0; m <= grid.n_steps; ++m) sources[m] = grid.weight(m) * (gram * x_hat[m]);
  const Trajectory lambda = adjoint_detail::backward_sweep(model, stepper, x_traj, sources);
  const ControlSignal s_adj = adjoint_detail::control_adjoint(model.input_vector(r), lambda, grid);
  const double rhs = l2_inner(s_adj, du, grid);

  const double scale = std::sqrt(std::max(0.0, nx_hat)) * std::sqrt(std::max(0.0, ndx));
  if (scale == 0.0) return std::abs(lhs - rhs) == 0.0 ? 0.0 : std::abs(lhs - rhs);
  return std::abs(lhs - rhs) / scale;
}

/// Gradient from a precomputed trajectory and adjoint.
template <SemilinearModel Model>
GradientReport gradient_from_adjoint(const Model& model, const CostSpec& cost, const ControlSignal& u,
                                     const ActuatorDesign& r, const Trajectory& x_traj,
                                     const AdjointState& adj, const TimeGrid& grid) {
  GradientReport rep;
  rep.J = cost_eval(model, cost, x_traj, u, grid);
  rep.grad_u = 2.0 * cost.r_weight * u + adjoint_detail::control_adjoint(model.input_vector(r), adj.multipliers, grid);
  rep.grad_r = adjoint_detail::design_adjoint(model.input_jacobian(r), u, adj.multipliers, grid);
  return rep;
}

/// J and its exact discrete gradients with respect to u and r.
template <SemilinearModel Model>
GradientReport gradient(const Model& model, const CostSpec& cost, const StateVec& x0, const ControlSignal& u,
                        const ActuatorDesign& r, const TimeGrid& grid) {
  const Trajectory x = solve_forward(model, x0, u, r, grid);
  const AdjointState adj = solve_adjoint(model, cost, x, r, grid);
  return gradient_from_adjoint(model, cost, u, r, x, adj, grid);
}

/// Discrete J only.
template <SemilinearModel Model>
double evaluate_cost(const Model& model, const CostSpec& cost, const StateVec& x0, const ControlSignal& u,
                     const ActuatorDesign& r, const TimeGrid& grid) {
  return cost_eval(model, cost, solve_forward(model, x0, u, r, grid), u, grid);
}

/// Residuals of the first-order optimality system. When `spec` is given the
/// projected-gradient residuals for the constrained case are filled in too.
template <SemilinearModel Model>
OptimalityResidual optimality_residual(const Model& model, const CostSpec& cost, const ControlSignal& u,
                                       const ActuatorDesign& r, const Trajectory& x_traj,
                                       const AdjointState& adj, const TimeGrid& grid,
                                       const ProjectionSpec* spec = nullptr) {
  const GradientReport g = gradient_from_adjoint(model, cost, u, r, x_traj, adj, grid);
  OptimalityResidual res;
  res.res_u = l2_norm(g.grad_u, grid) / (2.0 * cost.r_weight);
  res.res_r = (0.5 * g.grad_r).cwiseAbs();
  if (spec != nullptr) {
    res.proj_u = l2_norm(u - project_u(u - g.grad_u, *spec, grid), grid);
    res.proj_r = (r - project_r(r - g.grad_r, *spec)).norm();
  } else {
    res.proj_u = l2_norm(g.grad_u, grid);
    res.proj_r = g.grad_r.norm();
  }
  return res;
}

/// Backward integration of  p' = -(A* + F'*_{x(t)}) p - Q x(t),  p(tau) = 0,
/// using the continuous adjoint formulas of the model (A* assembled directly,
/// F'* through the adjoint boundary-value problem). Crank-Nicolson on A*, Heun
/// on the F'* term, trapezoid on the source. Returns nodal values p(t_n).
template <SemilinearModel Model>
Trajectory integrate_continuous_adjoint(const Model& model, const CostSpec& cost, const Trajectory& x_traj,
                                        const TimeGrid& grid) {
  adjoint_detail::check_trajectory(x_traj, grid, "integrate_continuous_adjoint");
  cost.validate(model.dof_count());
  const double dt = grid.dt();
  const SparseMatrix a_star = model.adjoint_operator();
  SparseMatrix id(a_star.rows(), a_star.cols());
  id.setIdentity();
  const SparseMatrix lhs = id - 0.5 * dt * a_star;
  const SparseMatrix rhs_op = id + 0.5 * dt * a_star;
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success) throw ConfigurationError("continuous adjoint: singular CN system");

  // Q x in the energy space is the Riesz representative G^{-1} W x of the cost form.
  const SparseMatrix weight = model.weighted_gram(cost.q1, cost.q2);
  Eigen::SimplicialLDLT<SparseMatrix> gram_solver(model.gram());
  std::vector<Vector> source(grid.n_nodes());
  for (int n = 0; n <= grid.n_steps; ++n) source[n] = gram_solver.solve(weight * x_traj[n]);

  Trajectory p(grid.n_nodes());
  p[grid.n_steps] = Vector::Zero(model.state_size());
  for (int n = grid.n_steps - 1; n >= 0; --n) {
    const Vector& next = p[n + 1];
    const Vector base = rhs_op * next + 0.5 * dt * (model.nonlinearity_adjoint(x_traj[n + 1], next) + source[n] + source[n + 1]);
    const Vector predictor = lu.solve(Vector(base + 0.5 * dt * model.nonlinearity_adjoint(x_traj[n], next)));
    p[n] = lu.solve(Vector(base + 0.5 * dt * model.nonlinearity_adjoint(x_traj[n], predictor)));
  }
  return p;
}

struct AdjointComparison {
  /// max |p_disc - p_cont| / max |p_cont| over all entries of each block, maximum over blocks.
  double linf_relative = 0.0;
  double linf_relative_w = 0.0;
  double linf_relative_v = 0.0;
  double max_abs_reference = 0.0;
};

/// Compare the discrete adjoint (interval-centred) against nodal values of the
/// continuous adjoint averaged onto the same intervals.
inline AdjointComparison compare_adjoints(const AdjointState& discrete, const Trajectory& continuous) {
  if (discrete.p.size() != continuous.size()) throw UsageError("compare_adjoints: length mismatch");
  const Eigen::Index half = continuous.front().size() / 2;
  double err_w = 0.0, err_v = 0.0, ref_w = 0.0, ref_v = 0.0;
  for (std::size_t n = 0; n + 1 < continuous.size(); ++n) {
    const Vector mid = 0.5 * (continuous[n] + continuous[n + 1]);
    const Vector d = discrete.p[n] - mid;
    err_w = std::max(err_w, d.head(half).cwiseAbs().maxCoeff());
    err_v = std::max(err_v, d.tail(half).cwiseAbs().maxCoeff());
    ref_w = std::max(ref_w, mid.head(half).cwiseAbs().maxCoeff());
    ref_v = std::max(ref_v, mid.tail(half).cwiseAbs().maxCoeff());
  }
  AdjointComparison c;
  c.linf_relative_w = ref_w > 0.0 ? err_w / ref_w : err_w;
  c.linf_relative_v = ref_v > 0.0 ? err_v / ref_v : err_v;
  c.linf_relative = std::max(c.linf_relative_w, c.linf_relative_v);
  c.max_abs_reference = std::max(ref_w, ref_v);
  return c;
}

}  // namespace actuopt
