#pragma once

// Finite-difference gradient checks and the Green's-function agreement study.

#include "actuopt/adjoint_grad.hpp"
#include "actuopt/beam_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace actuopt {

/// Step sizes swept by the central-difference checks; the best agreement is reported.
inline const std::vector<double>& default_fd_steps() {
  static const std::vector<double> steps{1e-4, 5e-5, 2e-5, 1e-5, 5e-6, 2e-6, 1e-6};
  return steps;
}

/// |a - b| / max(|a|, |b|); zero when both are below `floor`.
inline double relative_gap(double a, double b, double floor = 0.0) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale <= floor) return 0.0;
  return std::abs(a - b) / scale;
}

/// Random smooth perturbation  sum_k (a_k sin(k pi t / tau) + b_k cos(k pi t / tau)) / k
/// with standard normal a_k, b_k.
template <class Rng>
ControlSignal random_smooth_signal(Rng& rng, const TimeGrid& grid, int modes = 8) {
  std::normal_distribution<double> normal;
  ControlSignal s = ControlSignal::Zero(grid.n_nodes());
  for (int k = 1; k <= modes; ++k) {
    const double a = normal(rng) / k, b = normal(rng) / k;
    for (int n = 0; n <= grid.n_steps; ++n) {
      const double phase = k * std::numbers::pi * grid.time(n) / grid.t_final;
      s[n] += a * std::sin(phase) + b * std::cos(phase);
    }
  }
  return s;
}

struct FdCheck {
  double analytic = 0.0;
  double fd = 0.0;  // at the best step
  double step = 0.0;
  double rel_error = std::numeric_limits<double>::infinity();
};

namespace verification_detail {

template <class Eval>
FdCheck sweep(double analytic, double j_scale, const std::vector<double>& steps, Eval&& eval) {
  FdCheck best;
  best.analytic = analytic;
  // Derivatives at the level of the cost's round-off are indistinguishable from zero.
  const double floor = 1e-12 * (1.0 + std::abs(j_scale));
  for (double eps : steps) {
    const double fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
    const double err = relative_gap(fd, analytic, floor);
    if (err < best.rel_error) {
      best.rel_error = err;
      best.fd = fd;
      best.step = eps;
    }
  }
  return best;
}

}  // namespace verification_detail

/// Central differences of the discrete cost along du against <grad_u, du>.
template <SemilinearModel Model>
FdCheck fd_check_u(const Model& model, const CostSpec& cost, const StateVec& x0, const ControlSignal& u,
                   const ActuatorDesign& r, const TimeGrid& grid, const ControlSignal& du,
                   const GradientReport& g, const std::vector<double>& steps = default_fd_steps()) {
  const double analytic = l2_inner(g.grad_u, du, grid);
  return verification_detail::sweep(analytic, g.J, steps, [&](double e) {
    return evaluate_cost(model, cost, x0, ControlSignal(u + e * du), r, grid);
  });
}

/// Central differences of the discrete cost along dr against grad_r . dr.
template <SemilinearModel Model>
FdCheck fd_check_r(const Model& model, const CostSpec& cost, const StateVec& x0, const ControlSignal& u,
                   const ActuatorDesign& r, const TimeGrid& grid, const Vector& dr, const GradientReport& g,
                   const std::vector<double>& steps = default_fd_steps()) {
  const double analytic = g.grad_r.dot(dr);
  return verification_detail::sweep(analytic, g.J, steps, [&](double e) {
    return evaluate_cost(model, cost, x0, u, ActuatorDesign(r + e * dr), grid);
  });
}

struct GreensAgreement {
  std::vector<int> cells;
  std::vector<double> errors;  // max |h_ode - h_green| / max |h_ode|
  std::vector<double> orders;  // log2 of consecutive error ratios
};

/// Compare the adjoint-ODE solve with the Green's-function quadrature for
/// EI = 1, k = 0 on successively refined grids. Test fields: w_o = sin(pi x / l),
/// g = sin(2 pi x / l) + x (l - x).
inline GreensAgreement greens_agreement(const BeamParams& base, const std::vector<int>& cells) {
  GreensAgreement out;
  out.cells = cells;
  for (int nc : cells) {
    BeamParams p = base;
    p.ei = 1.0;
    p.k = 0.0;
    p.n_cells = nc;
    const double l = p.length;
    const double h = p.spacing();
    const double pi = std::numbers::pi;
    Vector w(nc - 1), g(nc - 1);
    for (int i = 0; i < nc - 1; ++i) {
      const double x = (i + 1) * h;
      w[i] = std::sin(pi * x / l);
      g[i] = std::sin(2.0 * pi * x / l) + x * (l - x);
    }
    const Vector h_ode = beam_adjoint_h(p, w, g);
    const Vector h_green = beam_adjoint_h_greens(p, w, g);
    out.errors.push_back((h_ode - h_green).cwiseAbs().maxCoeff() / h_ode.cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 1; i < out.errors.size(); ++i) {
    const double ratio = static_cast<double>(out.cells[i]) / out.cells[i - 1];
    out.orders.push_back(std::log(out.errors[i - 1] / out.errors[i]) / std::log(ratio));
  }
  return out;
}

}  // namespace actuopt
