#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace actuopt;

namespace {

constexpr double kPi = std::numbers::pi;

WaveParams wave_params(int n, NonlinearityKind kind = NonlinearityKind::none) {
  WaveParams p;
  p.nx = n;
  p.ny = n;
  p.nonlinearity.kind = kind;
  return p;
}

Vector sample(const WaveModel& m, const std::function<double(double, double)>& f) {
  const Matrix& pos = m.node_positions();
  Vector out(pos.rows());
  for (Eigen::Index k = 0; k < pos.rows(); ++k) out[k] = f(pos(k, 0), pos(k, 1));
  return out;
}

}  // namespace

TEST(WaveGrid, DirichletNodesAreEliminated) {
  const WaveModel all_d(wave_params(10), 0.2);
  EXPECT_EQ(all_d.dof_count(), 9 * 9);
  WaveParams p = wave_params(10);
  p.neumann = {true, false, false, false};
  const WaveModel one_n(p, 0.2);
  EXPECT_EQ(one_n.dof_count(), 10 * 9);
}

TEST(WaveParams, RejectsAllNeumannAndCoarseGrids) {
  WaveParams p = wave_params(10);
  p.neumann = {true, true, true, true};
  EXPECT_THROW(WaveModel(p, 0.2), UsageError);
  EXPECT_THROW(WaveModel(wave_params(4), 0.2), UsageError);
  EXPECT_THROW(WaveModel(wave_params(16), 0.6), UsageError);
}

TEST(WaveLaplacian, DirichletEigenfunctionConvergesAtSecondOrder) {
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    const WaveModel m(wave_params(n), 0.2);
    const Vector w = sample(m, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); });
    const double err = (m.laplacian() * w + 2.0 * kPi * kPi * w).cwiseAbs().maxCoeff();
    if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.9);
    prev = err;
  }
}

TEST(WaveLaplacian, NeumannEdgesUseMirroredStencil) {
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    WaveParams p = wave_params(n);
    p.neumann = {true, true, false, false};
    const WaveModel m(p, 0.2);
    const Vector w = sample(m, [](double x, double y) { return std::cos(kPi * x) * std::sin(kPi * y); });
    const double err = (m.laplacian() * w + 2.0 * kPi * kPi * w).cwiseAbs().maxCoeff();
    if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.8);
    prev = err;
  }
}

TEST(WaveModel, StiffnessSymmetricPositiveDefinite) {
  WaveParams p = wave_params(10);
  p.neumann = {false, true, true, false};
  const WaveModel m(p, 0.2);
  const Matrix k = oracle::dense(m.stiffness());
  EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(WaveModel, GeneratorIsSkewAdjointInEnergyForm) {
  WaveParams p = wave_params(10);
  p.neumann = {true, false, false, true};
  const WaveModel m(p, 0.2);
  const Matrix g = oracle::dense(m.gram());
  const Matrix a = oracle::dense(m.linear_operator());
  EXPECT_LT((g * a + a.transpose() * g).cwiseAbs().maxCoeff(), 1e-12 * g.cwiseAbs().maxCoeff());
  const Matrix a_star = oracle::dense(m.adjoint_operator());
  EXPECT_LT((a_star + a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WaveNonlinearity, FamiliesAndDerivatives) {
  NonlinearityF sg{NonlinearityKind::sine_gordon, 2};
  NonlinearityF kg{NonlinearityKind::klein_gordon, 2};
  NonlinearityF kg3{NonlinearityKind::klein_gordon, 3};
  NonlinearityF none{NonlinearityKind::none, 2};
  for (double w : {-1.3, -0.2, 0.0, 0.4, 2.1}) {
    EXPECT_DOUBLE_EQ(sg.value(w), std::sin(w));
    EXPECT_DOUBLE_EQ(kg.value(w), std::abs(w) * std::abs(w) * w);
    EXPECT_NEAR(kg3.value(w), std::pow(std::abs(w), 3) * w, 1e-14);
    EXPECT_EQ(none.value(w), 0.0);
    const double e = 1e-6;
    for (const auto& f : {sg, kg, kg3})
      EXPECT_NEAR(f.derivative(w), (f.value(w + e) - f.value(w - e)) / (2 * e), 1e-7 * (1 + std::abs(f.derivative(w))));
  }
  EXPECT_EQ(sg.value(0.0), 0.0);
  WaveParams p = wave_params(10, NonlinearityKind::klein_gordon);
  p.nonlinearity.k_exp = 1;
  EXPECT_THROW(WaveModel(p, 0.2), UsageError);
}

TEST(WaveModel, JacobianMatchesDifferenceQuotient) {
  for (auto kind : {NonlinearityKind::sine_gordon, NonlinearityKind::klein_gordon}) {
    const WaveModel m(wave_params(10, kind), 0.2);
    std::mt19937_64 rng(17);
    const StateVec x = oracle::random_vector(rng, m.state_size());
    const StateVec d = oracle::random_vector(rng, m.state_size());
    const double eps = 1e-6;
    const Vector fd = (m.nonlinearity(x + eps * d) - m.nonlinearity(x - eps * d)) / (2.0 * eps);
    const Vector an = m.nonlinearity_jacobian(x) * d;
    EXPECT_LT((fd - an).norm(), 1e-7 * (1.0 + an.norm()));
  }
}

TEST(WaveActuator, UnitIntegralAndSupportCheck) {
  const WaveModel m(wave_params(96), 0.2);
  Vector r(2);
  r << 0.45, 0.52;
  const Vector b = m.input_vector(r).tail(m.dof_count());
  EXPECT_NEAR(m.mass().dot(b), 1.0, 2e-3);
  r << 0.1, 0.5;
  EXPECT_THROW(m.input_vector(r), ProjectionRequired);
  EXPECT_THROW(m.input_vector(Vector::Zero(1)), UsageError);
}

TEST(WaveActuator, DesignGradientMatchesDifferenceQuotient) {
  const WaveModel m(wave_params(32), 0.2);
  Vector r(2);
  r << 0.43, 0.57;
  const Matrix jac = m.input_jacobian(r);
  const double eps = 1e-6;
  for (int k = 0; k < 2; ++k) {
    Vector rp = r, rm = r;
    rp[k] += eps;
    rm[k] -= eps;
    const Vector fd = (m.input_vector(rp) - m.input_vector(rm)) / (2.0 * eps);
    EXPECT_LT((fd - jac.col(k)).cwiseAbs().maxCoeff(), 1e-5 * jac.col(k).cwiseAbs().maxCoeff());
  }
}

TEST(WaveModel, DesignBoxKeepsDiskInside) {
  const WaveModel m(wave_params(20), 0.2);
  const auto [lo, hi] = m.design_box();
  EXPECT_NO_THROW(m.input_vector(lo));
  EXPECT_NO_THROW(m.input_vector(hi));
  EXPECT_NEAR(lo[0], 0.25, 1e-15);
  EXPECT_NEAR(hi[1], 0.75, 1e-15);
}

TEST(WaveModel, NonlinearityAdjointIsEnergyAdjointOfJacobian) {
  WaveParams p = wave_params(12, NonlinearityKind::sine_gordon);
  p.neumann = {false, false, true, false};
  const WaveModel m(p, 0.2);
  std::mt19937_64 rng(23);
  const StateVec xo = oracle::random_vector(rng, m.state_size());
  const StateVec y = oracle::random_vector(rng, m.state_size());
  const StateVec q = oracle::random_vector(rng, m.state_size());
  const double lhs = energy_inner(m, Vector(m.nonlinearity_jacobian(xo) * y), q);
  const double rhs = energy_inner(m, y, m.nonlinearity_adjoint(xo, q));
  EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
}

TEST(WaveModel, AdjointBoundaryProblemSolvesPoisson) {
  const WaveModel m(wave_params(16, NonlinearityKind::klein_gordon), 0.2);
  std::mt19937_64 rng(29);
  const Vector w = oracle::random_vector(rng, m.dof_count());
  const Vector g = oracle::random_vector(rng, m.dof_count());
  const Vector h = wave_adjoint_h(m, w, g);
  Vector rhs(m.dof_count());
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs[i] = -m.params().nonlinearity.derivative(w[i]) * g[i];
  EXPECT_LT((m.laplacian() * h - rhs).cwiseAbs().maxCoeff(), 1e-9 * rhs.cwiseAbs().maxCoeff());
}

TEST(WaveConservation, LinearUncontrolledEnergyIsConstant) {
  const WaveModel m(wave_params(24), 0.2);
  const TimeGrid grid{2.0, 400};
  const StateVec x0 = make_state(oracle::wave_mode(m), oracle::wave_mode(m, 0.3));
  Vector r(2);
  r << 0.5, 0.5;
  const auto e = energy_history(m, solve_forward(m, x0, ControlSignal::Zero(grid.n_nodes()), r, grid));
  for (double v : e) EXPECT_LE(std::abs(v - e[0]) / e[0], 1e-10);
}
