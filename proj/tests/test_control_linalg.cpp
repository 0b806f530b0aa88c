#include <gtest/gtest.h>

#include <cmath>

#include "actgov/control_linalg.hpp"
#include "actgov/simlab.hpp"

using namespace actgov;

namespace {

Eigen::MatrixXd mat(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST(SpectralRadius, ComplexPair) {
  Eigen::Matrix2d M;
  M << 0, -2, 2, 0;
  EXPECT_NEAR(spectral_radius(M), 2.0, 1e-12);
  EXPECT_THROW(spectral_radius(Eigen::MatrixXd::Ones(2, 3)), Error);
}

TEST(ClosedLoop, ExampleMatrices) {
  const ExampleSystem sys = example_system();
  const ClosedLoop cl = closed_loop(sys.plant, sys.out, sys.gain);
  Eigen::Matrix2d At;
  At << 1, 1, -0.2054, 0.2165;
  EXPECT_NEAR((cl.At - At).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(cl.Bt(1, 0), 0.2054, 1e-12);
  EXPECT_NEAR(cl.Ct(2, 0), -0.2054, 1e-12);
  EXPECT_NEAR(cl.Dt(2, 0), 0.2054, 1e-12);
  // complex pair: |lambda|^2 = det(At)
  EXPECT_NEAR(spectral_radius(cl.At), std::sqrt(0.4219), 1e-4);
  // steady state for v sits at (v, 0)
  const Eigen::VectorXd xs = cl.steady_state(Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_NEAR(xs(0), 3.0, 1e-12);
  EXPECT_NEAR(xs(1), 0.0, 1e-12);
}

TEST(ClosedLoop, UnstableGainRejected) {
  const ExampleSystem sys = example_system();
  NominalGain g{(Eigen::MatrixXd(1, 2) << 0.1, 0.0).finished(), mat(0.0)};
  try {
    closed_loop(sys.plant, sys.out, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Instability);
  }
}

TEST(ScaledLyapunov, ScalarClosedForm) {
  // (1/a) * 0.25 P - P + 1/(1-a) = 0 with a = 0.75 gives P = 6.
  const Eigen::MatrixXd P = dlyap_scaled(mat(0.5), mat(1.0), 0.75);
  EXPECT_NEAR(P(0, 0), 6.0, 1e-12);
}

TEST(ScaledLyapunov, ExampleResidualAndDomain) {
  const ExampleSystem sys = example_system();
  const ClosedLoop cl = closed_loop(sys.plant, sys.out, sys.gain);
  const Eigen::MatrixXd P = dlyap_scaled(cl.At, cl.plant.E, 0.75);
  EXPECT_LT(dlyap_residual(cl.At, cl.plant.E, 0.75, P), 1e-10);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().minCoeff(), 0.0);
  EXPECT_THROW(dlyap_scaled(cl.At, cl.plant.E, 0.3), Error);  // below rho^2
  EXPECT_THROW(dlyap_scaled(cl.At, cl.plant.E, 1.0), Error);
}

TEST(Riccati, ScalarFiniteHorizon) {
  // P1 = 1 + 1 - 1/2 = 1.5, K0 = -1.5 / 2.5
  const Eigen::MatrixXd K = riccati_finite(mat(1), mat(1), mat(1), mat(1), mat(1), 2);
  EXPECT_NEAR(K(0, 0), -0.6, 1e-12);
  EXPECT_THROW(riccati_finite(mat(1), mat(1), mat(1), mat(1), mat(1), 0), Error);
}

TEST(Riccati, ScalarInfiniteHorizon) {
  // P = 1 + P - P^2/(1+P)  ->  P^2 - P - 1 = 0
  const RiccatiSolution s = dare_solve(mat(1), mat(1), mat(1), mat(1));
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(s.P(0, 0), phi, 1e-8);
  EXPECT_NEAR(s.K(0, 0), -phi / (1.0 + phi), 1e-8);
}

TEST(Riccati, DoubleIntegratorGain) {
  Eigen::Matrix2d A;
  A << 1, 1, 0, 1;
  const RiccatiSolution s =
      dare_solve(A, Eigen::Vector2d(0, 1), Eigen::Matrix2d::Identity(), mat(10));
  EXPECT_NEAR(s.K(0, 0), -0.2054, 5e-4);
  EXPECT_NEAR(s.K(0, 1), -0.7835, 5e-4);
  EXPECT_LT(dare_residual(A, Eigen::Vector2d(0, 1), Eigen::Matrix2d::Identity(),
                          mat(10), s.P),
            1e-8);
}

TEST(Riccati, UnstabilizableDiverges) {
  // Unstable mode the input cannot touch.
  Eigen::Matrix2d A;
  A << 2, 0, 0, 0.5;
  try {
    dare_solve(A, Eigen::Vector2d(0, 1), Eigen::Matrix2d::Identity(), mat(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoStabilizingSolution);
  }
}
