#pragma once

// Projected gradient descent on (u, r) in U_ad x K_ad with Barzilai-Borwein
// step sizes per block and Armijo backtracking on the discrete cost, plus a
// dense grid search over actuator designs.

#include "actuopt/adjoint_grad.hpp"
#include "actuopt/admissible.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace actuopt {

struct OptimizerConfig {
  int max_iters = 500;
  double tol_grad = 1e-7;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  double max_design_step = 0.01;  // per-iteration cap on |dr|, fraction of the box width

  void validate() const {
    if (max_iters < 0) throw UsageError("OptimizerConfig: max_iters must be >= 0");
    if (!(tol_grad > 0.0)) throw UsageError("OptimizerConfig: tol_grad must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw UsageError("OptimizerConfig: armijo_c must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw UsageError("OptimizerConfig: backtrack must lie in (0, 1)");
    if (max_backtracks < 1) throw UsageError("OptimizerConfig: max_backtracks must be >= 1");
    if (!(max_design_step > 0.0)) throw UsageError("OptimizerConfig: max_design_step must be positive");
  }

  bool operator==(const OptimizerConfig&) const = default;
};

struct IterationRecord {
  int iter = 0;
  double J = 0.0;
  double res_u = 0.0;  // projected residual, u block
  double res_r = 0.0;  // projected residual, r block
  double step_u = 0.0;
  double step_r = 0.0;
  double u_norm = 0.0;  // L2(0, tau) norm of the iterate
  Vector r;
};

struct OptimRun {
  std::vector<IterationRecord> history;
  ControlSignal u;
  ActuatorDesign r;
  Trajectory x;
  AdjointState p;
  double J = 0.0;
  bool converged = false;
  bool failed = false;
  std::string message;
};

namespace optimizer_detail {

template <SemilinearModel Model>
struct Evaluation {
  Trajectory x;
  AdjointState adj;
  GradientReport grad;
};

template <SemilinearModel Model>
std::optional<Evaluation<Model>> evaluate(const Model& model, const CostSpec& cost, const StateVec& x0,
                                          const ControlSignal& u, const ActuatorDesign& r, const TimeGrid& grid) {
  try {
    Evaluation<Model> e;
    e.x = solve_forward(model, x0, u, r, grid);
    e.adj = solve_adjoint(model, cost, e.x, r, grid);
    e.grad = gradient_from_adjoint(model, cost, u, r, e.x, e.adj, grid);
    if (!std::isfinite(e.grad.J) || !e.grad.grad_u.allFinite() || !e.grad.grad_r.allFinite()) return std::nullopt;
    return e;
  } catch (const BlowUpError&) {
    return std::nullopt;
  }
}

/// Forward solve and cost; nullopt on blow-up.
template <SemilinearModel Model>
std::optional<std::pair<Trajectory, double>> trial(const Model& model, const CostSpec& cost, const StateVec& x0,
                                                   const ControlSignal& u, const ActuatorDesign& r,
                                                   const TimeGrid& grid) {
  try {
    Trajectory x = solve_forward(model, x0, u, r, grid);
    const double j = cost_eval(model, cost, x, u, grid);
    if (!std::isfinite(j)) return std::nullopt;
    return std::pair{std::move(x), j};
  } catch (const BlowUpError&) {
    return std::nullopt;
  }
}

inline double clamp_step(double s, double fallback) {
  if (!std::isfinite(s) || s <= 0.0) return fallback;
  return std::clamp(s, 1e-12, 1e12);
}

}  // namespace optimizer_detail

/// Projected gradient descent. With optimize_design = false the design stays
/// at r_init and only the control is updated.
template <SemilinearModel Model>
OptimRun optimize(const Model& model, const CostSpec& cost, const StateVec& x0, const ControlSignal& u_init,
                  const ActuatorDesign& r_init, const ProjectionSpec& spec, const OptimizerConfig& config,
                  const TimeGrid& grid, bool optimize_design = true) {
  spec.validate();
  config.validate();
  cost.validate(model.dof_count());
  check_control(u_init, grid, "optimize");

  OptimRun run;
  ControlSignal u = project_u(u_init, spec, grid);
  ActuatorDesign r = project_r(r_init, spec);

  auto current = optimizer_detail::evaluate(model, cost, x0, u, r, grid);
  if (!current) {
    run.failed = true;
    run.message = "forward solve blew up at the initial point";
    run.u = u;
    run.r = r;
    return run;
  }

  auto residuals = [&](const GradientReport& g, const ControlSignal& uu, const ActuatorDesign& rr) {
    const double pu = l2_norm(uu - project_u(uu - g.grad_u, spec, grid), grid);
    const double pr = optimize_design ? (rr - project_r(rr - g.grad_r, spec)).norm() : 0.0;
    return std::pair{pu, pr};
  };

  double step_u = 1.0 / (2.0 * cost.r_weight);
  double step_r = 1.0;
  const double max_dr = config.max_design_step * (spec.r_upper - spec.r_lower).maxCoeff();

  for (int iter = 0;; ++iter) {
    const auto [pu, pr] = residuals(current->grad, u, r);
    run.history.push_back({iter, current->grad.J, pu, pr, step_u, step_r, l2_norm(u, grid), r});

    if (pu <= config.tol_grad * std::max(1.0, l2_norm(u, grid)) && pr <= config.tol_grad) {
      run.converged = true;
      run.message = "projected gradient residual below tolerance";
      break;
    }
    if (iter >= config.max_iters) {
      run.message = "maximum iterations reached";
      break;
    }

    const GradientReport& g = current->grad;
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < config.max_backtracks; ++bt, t *= config.backtrack) {
      const ControlSignal u_new = project_u(u - t * step_u * g.grad_u, spec, grid);
      const double gr = g.grad_r.norm();
      const double sr_eff = gr * step_r > max_dr ? max_dr / gr : step_r;
      const ActuatorDesign r_new = optimize_design ? project_r(r - t * sr_eff * g.grad_r, spec) : r;
      const double decrease = l2_inner(g.grad_u, u - u_new, grid) + g.grad_r.dot(r - r_new);
      if (decrease <= 0.0) continue;
      auto tried = optimizer_detail::trial(model, cost, x0, u_new, r_new, grid);
      if (!tried || !(tried->second < g.J) || tried->second > g.J - config.armijo_c * decrease) continue;

      optimizer_detail::Evaluation<Model> next_eval;
      next_eval.x = std::move(tried->first);
      next_eval.adj = solve_adjoint(model, cost, next_eval.x, r_new, grid);
      next_eval.grad = gradient_from_adjoint(model, cost, u_new, r_new, next_eval.x, next_eval.adj, grid);
      auto next = std::optional<optimizer_detail::Evaluation<Model>>(std::move(next_eval));

      // Barzilai-Borwein (BB1) per block.
      const ControlSignal su = u_new - u;
      const ControlSignal yu = next->grad.grad_u - g.grad_u;
      step_u = optimizer_detail::clamp_step(l2_inner(su, su, grid) / l2_inner(su, yu, grid), step_u);
      if (optimize_design) {
        const Vector sr = r_new - r;
        const Vector yr = next->grad.grad_r - g.grad_r;
        const double curv = sr.dot(yr);
        if (sr.squaredNorm() > 0.0) step_r = optimizer_detail::clamp_step(sr.squaredNorm() / curv, step_r);
      }
      u = u_new;
      r = r_new;
      current = std::move(next);
      accepted = true;
      break;
    }
    if (!accepted) {
      run.message = "line search failed to find a decrease";
      break;
    }
  }

  run.u = u;
  run.r = r;
  run.J = current->grad.J;
  run.x = std::move(current->x);
  run.p = std::move(current->adj);
  return run;
}

struct GridPoint {
  ActuatorDesign r;
  double J = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool failed = false;
};

struct GridSearchResult {
  std::vector<GridPoint> points;  // ordered by r (lexicographic, first component fastest)
  std::optional<std::size_t> best;
  ActuatorDesign r_best;
  double J_best = std::numeric_limits<double>::quiet_NaN();
};

/// Uniform grid of n_grid points per design component over the box.
inline std::vector<ActuatorDesign> design_grid(const ProjectionSpec& spec, int n_grid) {
  const Eigen::Index d = spec.r_lower.size();
  std::size_t total = 1;
  for (Eigen::Index k = 0; k < d; ++k) total *= static_cast<std::size_t>(n_grid);
  std::vector<ActuatorDesign> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    ActuatorDesign r(d);
    std::size_t rem = idx;
    for (Eigen::Index k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem % n_grid);
      rem /= n_grid;
      r[k] = spec.r_lower[k] + (spec.r_upper[k] - spec.r_lower[k]) * i / (n_grid - 1);
    }
    out.push_back(r);
  }
  return out;
}

/// For each design on the grid solve the control subproblem and record J.
/// Points are independent and are distributed over `threads` workers.
template <SemilinearModel Model>
GridSearchResult grid_search_r(const Model& model, const CostSpec& cost, const StateVec& x0,
                               const ProjectionSpec& spec, const OptimizerConfig& config, const TimeGrid& grid,
                               int n_grid, int threads = 1) {
  if (n_grid < 8) throw UsageError("grid_search_r: n_grid must be at least 8");
  spec.validate();
  GridSearchResult result;
  const std::vector<ActuatorDesign> designs = design_grid(spec, n_grid);
  result.points.resize(designs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < designs.size(); i = next++) {
      GridPoint& pt = result.points[i];
      pt.r = designs[i];
      try {
        const OptimRun run = optimize(model, cost, x0, ControlSignal::Zero(grid.n_nodes()), designs[i], spec,
                                      config, grid, /*optimize_design=*/false);
        pt.failed = run.failed;
        pt.converged = run.converged;
        if (!run.failed) pt.J = run.J;
      } catch (const std::exception&) {
        pt.failed = true;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(designs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const GridPoint& pt = result.points[i];
    if (pt.failed || !std::isfinite(pt.J)) continue;
    if (!result.best || pt.J < result.points[*result.best].J) result.best = i;
  }
  if (result.best) {
    result.r_best = result.points[*result.best].r;
    result.J_best = result.points[*result.best].J;
  }
  return result;
}

}  // namespace actuopt
