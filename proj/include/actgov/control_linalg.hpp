#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <string>
#include <utility>

#include "actgov/convexset.hpp"
#include "actgov/error.hpp"

namespace actgov {

/// x+ = A x + B u + E w.
struct LinearPlant {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd E;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index action_dim() const { return B.cols(); }
  Eigen::Index disturbance_dim() const { return E.cols(); }

  void validate() const {
    if (A.rows() != A.cols())
      fail(ErrorKind::Argument, "LinearPlant: A must be square");
    if (B.rows() != A.rows() || E.rows() != A.rows())
      fail(ErrorKind::Argument, "LinearPlant: B/E row count must match A");
  }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& w) const {
    return A * x + B * u + E * w;
  }
};

/// y = C x + D u, constrained to constraint_set.
struct OutputMap {
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;
  HPolytope constraint_set;

  void validate(const LinearPlant& plant) const {
    if (C.cols() != plant.state_dim() || D.cols() != plant.action_dim() ||
        C.rows() != D.rows())
      fail(ErrorKind::Argument, "OutputMap: C/D dimensions inconsistent");
    if (constraint_set.dim() != C.rows())
      fail(ErrorKind::Argument,
           "OutputMap: constraint set dimension differs from output size");
  }

  Eigen::VectorXd output(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) const {
    return C * x + D * u;
  }

  /// (x, u) in the constraint set, with no tolerance.
  bool admissible(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  double tol = 0.0) const {
    return constraint_set.contains(output(x, u), tol);
  }
};

/// Nominal policy u = K x + L v. Sign convention everywhere in this library:
/// gains multiply the state directly, u = K x, so stabilizing gains for the
/// double integrator have negative entries.
struct NominalGain {
  Eigen::MatrixXd K;
  Eigen::MatrixXd L;

  Eigen::VectorXd action(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& v) const {
    return K * x + L * v;
  }
};

struct ClosedLoop {
  Eigen::MatrixXd At;  // A + B K
  Eigen::MatrixXd Bt;  // B L
  Eigen::MatrixXd Ct;  // C + D K
  Eigen::MatrixXd Dt;  // D L
  LinearPlant plant;
  NominalGain gain;

  Eigen::Index reference_dim() const { return Bt.cols(); }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& w) const {
    return At * x + Bt * v + plant.E * w;
  }

  /// Equilibrium state for constant v and zero disturbance.
  Eigen::VectorXd steady_state(const Eigen::VectorXd& v) const {
    const auto n = At.rows();
    return (Eigen::MatrixXd::Identity(n, n) - At).partialPivLu().solve(Bt * v);
  }
};

inline double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols())
    fail(ErrorKind::Argument, "spectral_radius: matrix not square");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    fail(ErrorKind::Numerical, "spectral_radius: eigenvalues did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline ClosedLoop closed_loop(const LinearPlant& plant, const OutputMap& out,
                              const NominalGain& gain) {
  plant.validate();
  out.validate(plant);
  if (gain.K.rows() != plant.action_dim() || gain.K.cols() != plant.state_dim())
    fail(ErrorKind::Argument, "closed_loop: K has wrong shape");
  if (gain.L.rows() != plant.action_dim())
    fail(ErrorKind::Argument, "closed_loop: L has wrong row count");
  ClosedLoop cl{plant.A + plant.B * gain.K, plant.B * gain.L,
                out.C + out.D * gain.K, out.D * gain.L, plant, gain};
  const double rho = spectral_radius(cl.At);
  if (!(rho < 1.0 - 1e-9))
    fail(ErrorKind::Instability,
         "closed_loop: A + BK has spectral radius " + std::to_string(rho));
  return cl;
}

/// Solves (1/alpha) At P At' - P + 1/(1-alpha) E E' = 0 by vectorization.
/// Requires rho(At)^2 < alpha < 1.
inline Eigen::MatrixXd dlyap_scaled(const Eigen::MatrixXd& At,
                                    const Eigen::MatrixXd& E, double alpha) {
  if (At.rows() != At.cols() || E.rows() != At.rows())
    fail(ErrorKind::Argument, "dlyap_scaled: dimension mismatch");
  const double rho = spectral_radius(At);
  if (!(alpha > rho * rho && alpha < 1.0))
    fail(ErrorKind::Argument, "dlyap_scaled: alpha=" + std::to_string(alpha) +
                                  " outside (rho^2, 1) with rho^2=" +
                                  std::to_string(rho * rho));
  const auto n = At.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n * n, n * n);
  const Eigen::MatrixXd lhs =
      Eigen::kroneckerProduct(At, At).eval() / alpha - I;
  const Eigen::MatrixXd Q = E * E.transpose() / (1.0 - alpha);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
  if (!lu.isInvertible())
    fail(ErrorKind::Numerical, "dlyap_scaled: singular vectorized system");
  const Eigen::VectorXd p = lu.solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
  P = 0.5 * (P + P.transpose()).eval();
  return P;
}

inline double dlyap_residual(const Eigen::MatrixXd& At,
                             const Eigen::MatrixXd& E, double alpha,
                             const Eigen::MatrixXd& P) {
  return (At * P * At.transpose() / alpha - P +
          E * E.transpose() / (1.0 - alpha))
      .norm();
}

struct RiccatiSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;  // u = K x
  int iterations = 0;
};

inline Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& R,
                                const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-300)
    fail(ErrorKind::Numerical, "Riccati: R + B'PB is singular");
  return -ldlt.solve(B.transpose() * P * A);
}

inline double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd K = lqr_gain(A, B, R, P);
  const Eigen::MatrixXd next = Q + A.transpose() * P * (A + B * K);
  return (next - P).cwiseAbs().maxCoeff();
}

/// Infinite-horizon LQR via fixed-point Riccati iteration from P = Q.
inline RiccatiSolution dare_solve(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& R,
                                  double tol = 1e-9, int max_sweeps = 100000) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || Q.rows() != A.rows() ||
      Q.cols() != A.cols() || R.rows() != B.cols() || R.cols() != B.cols())
    fail(ErrorKind::Argument, "dare_solve: dimension mismatch");
  Eigen::MatrixXd P = Q;
  for (int it = 1; it <= max_sweeps; ++it) {
    const Eigen::MatrixXd K = lqr_gain(A, B, R, P);
    Eigen::MatrixXd next = Q + A.transpose() * P * (A + B * K);
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e14)
      fail(ErrorKind::NoStabilizingSolution, "dare_solve: iteration diverged");
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (delta < tol) {
      RiccatiSolution sol{P, lqr_gain(A, B, R, P), it};
      if (!(spectral_radius(A + B * sol.K) < 1.0))
        fail(ErrorKind::NoStabilizingSolution,
             "dare_solve: converged gain is not stabilizing");
      return sol;
    }
  }
  fail(ErrorKind::NoStabilizingSolution,
       "dare_solve: no convergence after " + std::to_string(max_sweeps) +
           " sweeps");
}

/// Step-0 gain of the horizon-N LQR problem with terminal weight Qf.
inline Eigen::MatrixXd riccati_finite(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& B,
                                      const Eigen::MatrixXd& Q,
                                      const Eigen::MatrixXd& R,
                                      const Eigen::MatrixXd& Qf, int N) {
  if (N < 1) fail(ErrorKind::Argument, "riccati_finite: horizon must be >= 1");
  Eigen::MatrixXd P = Qf;
  Eigen::MatrixXd K;
  for (int k = N - 1; k >= 0; --k) {
    K = lqr_gain(A, B, R, P);
    Eigen::MatrixXd next = Q + A.transpose() * P * (A + B * K);
    P = 0.5 * (next + next.transpose());
  }
  return K;
}

}  // namespace actgov
