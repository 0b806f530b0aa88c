#pragma once

// Dense two-phase simplex for small LPs over free variables:
//
//   minimize / maximize  c'z   subject to  A z <= b,  z in R^n.
//
// Free variables are split as z = z+ - z-, every row gets a slack, and rows
// with negative right-hand side get an artificial for phase 1. Pivoting uses
// Bland's rule throughout, so the solver cannot cycle.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "actgov/error.hpp"

namespace actgov {

enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class Sense { Min, Max };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double value = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd point;

  bool optimal() const { return status == LpStatus::Optimal; }
};

struct LpTolerances {
  double feasibility = 1e-9;
  double optimality = 1e-9;
  double pivot = 1e-11;
  int max_pivots = 200000;
};

namespace detail {

class SimplexTableau {
 public:
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SimplexTableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                 const LpTolerances& tol)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())),
        tol_(tol) {
    std::vector<int> needs_artificial;
    for (int i = 0; i < m_; ++i)
      if (b(i) < 0.0) needs_artificial.push_back(i);
    num_art_ = static_cast<int>(needs_artificial.size());
    cols_ = 2 * n_ + m_ + num_art_;
    T_ = RowMatrix::Zero(m_ + 1, cols_ + 1);
    basis_.assign(m_, -1);

    int art = 0;
    for (int i = 0; i < m_; ++i) {
      // Row scaling leaves the feasible set untouched and keeps pivots sane.
      double scale = A.row(i).cwiseAbs().maxCoeff();
      if (!(scale > 0.0)) scale = 1.0;
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      const double k = sign / scale;
      for (int j = 0; j < n_; ++j) {
        T_(i, j) = k * A(i, j);
        T_(i, n_ + j) = -k * A(i, j);
      }
      T_(i, 2 * n_ + i) = k;
      T_(i, cols_) = k * b(i);
      if (sign < 0.0) {
        const int col = 2 * n_ + m_ + art++;
        T_(i, col) = 1.0;
        basis_[i] = col;
      } else {
        basis_[i] = 2 * n_ + i;
      }
    }
  }

  bool is_artificial(int col) const { return col >= 2 * n_ + m_; }

  // Phase 1: drive the artificials to zero. Returns false when infeasible.
  bool phase_one() {
    if (num_art_ == 0) return true;
    T_.row(m_).setZero();
    for (int j = 2 * n_ + m_; j < cols_; ++j) T_(m_, j) = 1.0;
    for (int i = 0; i < m_; ++i)
      if (is_artificial(basis_[i])) T_.row(m_) -= T_.row(i);
    run(/*allow_artificial=*/true);
    const double infeasibility = -T_(m_, cols_);
    if (infeasibility > tol_.feasibility) return false;

    // Pivot remaining zero-level artificials out of the basis where possible.
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      int best = -1;
      double best_abs = tol_.pivot;
      for (int j = 0; j < 2 * n_ + m_; ++j) {
        const double a = std::abs(T_(i, j));
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
    return true;
  }

  // Phase 2 with objective c over the original variables (minimization).
  // Returns false when unbounded.
  bool phase_two(const Eigen::VectorXd& c) {
    T_.row(m_).setZero();
    for (int j = 0; j < n_; ++j) {
      T_(m_, j) = c(j);
      T_(m_, n_ + j) = -c(j);
    }
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_of(basis_[i], c);
      if (cb != 0.0) T_.row(m_) -= cb * T_.row(i);
    }
    return run(/*allow_artificial=*/false);
  }

  Eigen::VectorXd point() const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      const int col = basis_[i];
      if (col < n_)
        z(col) += T_(i, cols_);
      else if (col < 2 * n_)
        z(col - n_) -= T_(i, cols_);
    }
    return z;
  }

 private:
  double cost_of(int col, const Eigen::VectorXd& c) const {
    if (col < n_) return c(col);
    if (col < 2 * n_) return -c(col - n_);
    return 0.0;
  }

  void pivot(int r, int col) {
    T_.row(r) /= T_(r, col);
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = T_(i, col);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    basis_[r] = col;
  }

  // Bland's rule iterations. Returns false on unboundedness.
  bool run(bool allow_artificial) {
    const int limit = allow_artificial ? cols_ : 2 * n_ + m_;
    for (int iter = 0; iter < tol_.max_pivots; ++iter) {
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (T_(m_, j) < -tol_.optimality) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = T_(i, enter);
        if (a <= tol_.pivot) continue;
        const double ratio = std::max(T_(i, cols_), 0.0) / a;
        if (leave < 0 || ratio < best_ratio - 1e-13) {
          leave = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + 1e-13 && basis_[i] < basis_[leave]) {
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    fail(ErrorKind::Numerical, "simplex exceeded pivot limit");
  }

  int m_;
  int n_;
  int cols_ = 0;
  int num_art_ = 0;
  LpTolerances tol_;
  RowMatrix T_;
  std::vector<int> basis_;
};

}  // namespace detail

/// Solves  opt c'z  s.t.  A z <= b  over free z.
inline LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& b, Sense sense = Sense::Min,
                         const LpTolerances& tol = {}) {
  if (c.size() != A.cols())
    fail(ErrorKind::Argument, "solve_lp: objective dimension " +
                                  std::to_string(c.size()) +
                                  " does not match " +
                                  std::to_string(A.cols()) + " variables");
  if (b.size() != A.rows())
    fail(ErrorKind::Argument, "solve_lp: offsets/rows mismatch");

  detail::SimplexTableau tab(A, b, tol);
  LpResult res;
  if (!tab.phase_one()) {
    res.status = LpStatus::Infeasible;
    return res;
  }
  const Eigen::VectorXd cmin = sense == Sense::Min ? c : Eigen::VectorXd(-c);
  if (!tab.phase_two(cmin)) {
    res.status = LpStatus::Unbounded;
    res.value = sense == Sense::Min ? -std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::infinity();
    return res;
  }
  res.status = LpStatus::Optimal;
  res.point = tab.point();
  res.value = c.dot(res.point);
  return res;
}

}  // namespace actgov
