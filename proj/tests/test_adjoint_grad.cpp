#include "actuopt/verification.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace actuopt;

namespace {

struct BeamCase {
  BeamModel model;
  CostSpec cost;
  StateVec x0;
  ControlSignal u;
  ActuatorDesign r;
  TimeGrid grid;
};

BeamCase beam_case(double alpha, double mu, double cd, int n_cells = 16, int n_steps = 40) {
  BeamModel model(oracle::small_beam(alpha, mu, cd, n_cells), 0.05);
  TimeGrid grid{0.6, n_steps};
  CostSpec cost = CostSpec::uniform(model.dof_count(), 1.0, 0.5, 0.3);
  const Vector w = oracle::beam_mode(model, 1, 0.8) + oracle::beam_mode(model, 2, 0.3);
  StateVec x0 = make_state(w, Vector::Zero(w.size()));
  return {std::move(model), std::move(cost), std::move(x0), oracle::sine_signal(grid, 1.5, 4.0, 0.3),
          Vector::Constant(1, 0.3713), grid};
}

}  // namespace

TEST(Duality, BeamVariantsMatchToRoundOff) {
  std::mt19937_64 rng(101);
  for (double alpha : {0.0, 2.0})
    for (double damp : {0.0, 1.0}) {
      const BeamCase c = beam_case(alpha, 0.1 * damp, 0.01 * damp);
      const auto x = solve_forward(c.model, c.x0, c.u, c.r, c.grid);
      Trajectory x_hat;
      for (int n = 0; n <= c.grid.n_steps; ++n) x_hat.push_back(oracle::random_vector(rng, c.model.state_size()));
      const ControlSignal du = oracle::random_vector(rng, c.grid.n_nodes());
      EXPECT_LE(duality_check(c.model, x, c.r, du, x_hat, c.grid), 1e-10) << "alpha=" << alpha << " damp=" << damp;
    }
}

TEST(Duality, WaveVariantsMatchToRoundOff) {
  std::mt19937_64 rng(202);
  for (auto kind : {NonlinearityKind::none, NonlinearityKind::sine_gordon, NonlinearityKind::klein_gordon}) {
    WaveParams p = oracle::small_wave(kind, 10);
    p.neumann = {false, true, false, false};
    const WaveModel m(p, 0.2);
    const TimeGrid grid{0.5, 30};
    Vector r(2);
    r << 0.44, 0.51;
    const StateVec x0 = make_state(oracle::wave_mode(m, 0.9), Vector::Zero(m.dof_count()));
    const auto x = solve_forward(m, x0, oracle::sine_signal(grid, 1.0, 3.0), r, grid);
    Trajectory x_hat;
    for (int n = 0; n <= grid.n_steps; ++n) x_hat.push_back(oracle::random_vector(rng, m.state_size()));
    const ControlSignal du = oracle::random_vector(rng, grid.n_nodes());
    EXPECT_LE(duality_check(m, x, r, du, x_hat, grid), 1e-10);
  }
}

TEST(Gradient, ControlGradientMatchesBruteForceLinearization) {
  for (double alpha : {0.0, 3.0}) {
    const BeamCase c = beam_case(alpha, 0.1, 0.01);
    const GradientReport g = gradient(c.model, c.cost, c.x0, c.u, c.r, c.grid);
    const Vector ref = oracle::brute_force_grad_u(c.model, c.cost, c.x0, c.u, c.r, c.grid);
    EXPECT_LT((g.grad_u - ref).cwiseAbs().maxCoeff(), 1e-9 * ref.cwiseAbs().maxCoeff()) << "alpha=" << alpha;
  }
}

TEST(Gradient, DesignGradientMatchesBruteForceLinearization) {
  const BeamCase c = beam_case(2.0, 0.1, 0.01);
  const GradientReport g = gradient(c.model, c.cost, c.x0, c.u, c.r, c.grid);
  const Vector ref = oracle::brute_force_grad_r(c.model, c.cost, c.x0, c.u, c.r, c.grid);
  EXPECT_NEAR(g.grad_r[0], ref[0], 1e-9 * std::abs(ref[0]));

  const WaveModel m(oracle::small_wave(NonlinearityKind::sine_gordon, 10), 0.2);
  const TimeGrid grid{0.4, 20};
  const CostSpec cost = CostSpec::uniform(m.dof_count(), 1.0, 1.0, 0.1);
  Vector r(2);
  r << 0.41, 0.56;
  const StateVec x0 = make_state(oracle::wave_mode(m), Vector::Zero(m.dof_count()));
  const ControlSignal u = oracle::sine_signal(grid, 2.0, 5.0);
  const GradientReport gw = gradient(m, cost, x0, u, r, grid);
  const Vector refw = oracle::brute_force_grad_r(m, cost, x0, u, r, grid);
  EXPECT_LT((gw.grad_r - refw).cwiseAbs().maxCoeff(), 1e-9 * refw.cwiseAbs().maxCoeff());
}

TEST(Gradient, FiniteDifferencesAgree) {
  const BeamCase c = beam_case(1.0, 0.1, 0.01, 32, 100);
  const GradientReport g = gradient(c.model, c.cost, c.x0, c.u, c.r, c.grid);
  std::mt19937_64 rng(7);
  const ControlSignal du = oracle::random_vector(rng, c.grid.n_nodes());
  EXPECT_LE(fd_check_u(c.model, c.cost, c.x0, c.u, c.r, c.grid, du, g).rel_error, 1e-6);
  EXPECT_LE(fd_check_r(c.model, c.cost, c.x0, c.u, c.r, c.grid, Vector::Ones(1), g).rel_error, 1e-6);
}

TEST(Gradient, TaylorRemainderIsSecondOrder) {
  const BeamCase c = beam_case(2.0, 0.1, 0.01, 16, 60);
  const GradientReport g = gradient(c.model, c.cost, c.x0, c.u, c.r, c.grid);
  std::mt19937_64 rng(13);
  const ControlSignal du = oracle::random_vector(rng, c.grid.n_nodes());
  const double slope = l2_inner(g.grad_u, du, c.grid);
  std::vector<double> rem;
  for (double eps : {1e-1, 5e-2, 2.5e-2}) {
    const double j = evaluate_cost(c.model, c.cost, c.x0, ControlSignal(c.u + eps * du), c.r, c.grid);
    rem.push_back(std::abs(j - g.J - eps * slope));
  }
  EXPECT_GT(std::log2(rem[0] / rem[1]), 1.8);
  EXPECT_GT(std::log2(rem[1] / rem[2]), 1.8);
}

TEST(Gradient, SymmetricConfigurationHasZeroDesignGradient) {
  const BeamModel beam(oracle::small_beam(1.0, 0.1, 0.01, 32), 0.05);
  const TimeGrid grid{1.0, 100};
  const CostSpec cost = CostSpec::uniform(beam.dof_count(), 1.0, 1.0, 1.0);
  const StateVec x0 = make_state(oracle::beam_mode(beam, 1), Vector::Zero(beam.dof_count()));
  const GradientReport g = gradient(beam, cost, x0, oracle::sine_signal(grid, 1.0, 2.0), Vector::Constant(1, 0.5), grid);
  EXPECT_LE(std::abs(g.grad_r[0]), 1e-8);
}

TEST(Adjoint, TerminalValueAndZeroCost) {
  const BeamCase c = beam_case(1.0, 0.1, 0.01);
  const auto x = solve_forward(c.model, c.x0, c.u, c.r, c.grid);
  const AdjointState adj = solve_adjoint(c.model, c.cost, x, c.r, c.grid);
  ASSERT_EQ(static_cast<int>(adj.p.size()), c.grid.n_nodes());
  EXPECT_EQ(adj.p.back().cwiseAbs().maxCoeff(), 0.0);

  const CostSpec zero{Vector::Zero(c.model.dof_count()), Vector::Zero(c.model.dof_count()), 1.0};
  const AdjointState adj0 = solve_adjoint(c.model, zero, x, c.r, c.grid);
  for (const auto& p : adj0.p) EXPECT_EQ(p.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adjoint, DiscreteAndContinuousAdjointsAgree) {
  const BeamModel beam(oracle::small_beam(1.0, 0.1, 0.01, 32), 0.05);
  const TimeGrid grid{1.0, 400};
  const CostSpec cost = CostSpec::uniform(beam.dof_count(), 1.0, 1.0, 1.0);
  const StateVec x0 = make_state(oracle::beam_mode(beam, 1), Vector::Zero(beam.dof_count()));
  const Vector r = Vector::Constant(1, 0.3);
  const auto x = solve_forward(beam, x0, oracle::sine_signal(grid, 1.0, 1.5), r, grid);
  const AdjointState adj = solve_adjoint(beam, cost, x, r, grid);
  const auto cont = integrate_continuous_adjoint(beam, cost, x, grid);
  EXPECT_LE(compare_adjoints(adj, cont).linf_relative, 1e-2);
}

TEST(Optimality, ResidualsFollowGradient) {
  const BeamCase c = beam_case(1.0, 0.1, 0.01);
  const auto x = solve_forward(c.model, c.x0, c.u, c.r, c.grid);
  const AdjointState adj = solve_adjoint(c.model, c.cost, x, c.r, c.grid);
  const GradientReport g = gradient_from_adjoint(c.model, c.cost, c.u, c.r, x, adj, c.grid);
  const OptimalityResidual res = optimality_residual(c.model, c.cost, c.u, c.r, x, adj, c.grid);
  EXPECT_NEAR(res.res_u, l2_norm(g.grad_u, c.grid) / (2.0 * c.cost.r_weight), 1e-14);
  EXPECT_NEAR(res.res_r[0], 0.5 * std::abs(g.grad_r[0]), 1e-14);
  const ProjectionSpec spec{1e6, Vector::Constant(1, 0.1), Vector::Constant(1, 0.9)};
  const OptimalityResidual proj = optimality_residual(c.model, c.cost, c.u, c.r, x, adj, c.grid, &spec);
  EXPECT_NEAR(proj.proj_u, l2_norm(g.grad_u, c.grid), 1e-10 * l2_norm(g.grad_u, c.grid));
}

TEST(Verification, RelativeGapFloor) {
  EXPECT_EQ(relative_gap(1e-20, -1e-20, 1e-12), 0.0);
  EXPECT_NEAR(relative_gap(1.0, 1.1), 0.1 / 1.1, 1e-15);
}
