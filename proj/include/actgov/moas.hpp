#pragma once

// Maximal output admissible set of the disturbed linear closed loop
//
//   x+ = At x + Bt v + E w,   y = Ct x + Dt v,   y in Y,  w in W,
//
// over (x, v) pairs, and the governor step that keeps the plant inside it.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "actgov/control_linalg.hpp"
#include "actgov/convexset.hpp"
#include "actgov/error.hpp"

namespace actgov {

struct MoasOptions {
  double epsilon = 0.01;  // steady-state tightening of the last layer
  int t_cap = 500;
  // Bounds on v intersected with the set; required when the steady-state
  // constraint alone leaves v unbounded. Defaults to no extra bound.
  std::optional<HPolytope> v_bounds;
};

struct Moas {
  int t_star = 0;
  HPolytope set_xv;
  HPolytope proj_x;
  HPolytope proj_x_shrunk;  // proj_x ⊖ E W
  double epsilon = 0.0;
  Eigen::Index state_dim = 0;
  // Offsets of the tightened output set Y_t for t = 0 .. t_star + 1; the
  // normals are those of the output constraint set.
  std::vector<Eigen::VectorXd> output_offsets;
};

namespace detail {

inline HPolytope stack_rows(const std::vector<Eigen::VectorXd>& normals,
                            const std::vector<double>& offsets,
                            Eigen::Index dim) {
  Eigen::MatrixXd H(normals.size(), dim);
  Eigen::VectorXd h(normals.size());
  for (std::size_t i = 0; i < normals.size(); ++i) {
    H.row(i) = normals[i].transpose();
    h(i) = offsets[i];
  }
  return {H, h};
}

}  // namespace detail

/// Builds the finitely determined admissible set. Layers O_t are appended one
/// at a time; a candidate row that the current set already satisfies is
/// redundant and dropped, and the first layer whose rows are all redundant
/// proves finite determination.
inline Moas build_moas(const ClosedLoop& cl, const OutputMap& out,
                       const HPolytope& w_set, const MoasOptions& opt = {}) {
  if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0))
    fail(ErrorKind::Argument, "build_moas: epsilon must lie in (0, 1)");
  if (w_set.is_empty() || !w_set.is_bounded())
    fail(ErrorKind::Argument, "build_moas: disturbance set must be compact and nonempty");
  const Eigen::MatrixXd& E = cl.plant.E;
  if (w_set.dim() != E.cols())
    fail(ErrorKind::Argument, "build_moas: disturbance dimension mismatch");

  const Eigen::Index n = cl.At.rows();
  const Eigen::Index r = cl.reference_dim();
  const Eigen::Index dim = n + r;
  const Eigen::MatrixXd& H = out.constraint_set.normals();
  const Eigen::Index q = H.rows();
  if (opt.v_bounds && opt.v_bounds->dim() != r)
    fail(ErrorKind::Argument, "build_moas: v_bounds dimension mismatch");

  const Eigen::MatrixXd HCt = H * cl.Ct;
  const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd steady =
      cl.Ct * (In - cl.At).partialPivLu().solve(cl.Bt) + cl.Dt;
  const Eigen::MatrixXd Hsteady = H * steady;

  auto y_empty = [&](const Eigen::VectorXd& h) {
    return HPolytope(H, h).is_empty();
  };

  // Rows fixed by v alone: steady-state tightening plus optional bounds.
  auto v_rows = [&](const Eigen::VectorXd& h_t) {
    std::vector<Eigen::VectorXd> N;
    std::vector<double> b;
    for (Eigen::Index i = 0; i < q; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      row.tail(r) = Hsteady.row(i).transpose();
      if (row.isZero(0.0)) continue;
      N.push_back(row);
      b.push_back((1.0 - opt.epsilon) * h_t(i));
    }
    if (opt.v_bounds) {
      for (Eigen::Index i = 0; i < opt.v_bounds->num_rows(); ++i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        row.tail(r) = opt.v_bounds->normals().row(i).transpose();
        N.push_back(row);
        b.push_back(opt.v_bounds->offsets()(i));
      }
    }
    return std::pair{N, b};
  };

  Moas moas;
  moas.epsilon = opt.epsilon;
  moas.state_dim = n;

  // Layer t: H [Ct At^t , Ct sum_{k<t} At^k Bt + Dt] (x, v) <= h_t.
  Eigen::MatrixXd Apow = In;
  Eigen::MatrixXd vsum = Eigen::MatrixXd::Zero(n, r);
  Eigen::VectorXd h_t = out.constraint_set.offsets();
  moas.output_offsets.push_back(h_t);
  if (y_empty(h_t))
    fail(ErrorKind::ConstructionInfeasible, "build_moas: output set is empty");

  std::vector<Eigen::VectorXd> layer_normals;
  std::vector<double> layer_offsets;
  auto layer_row = [&](Eigen::Index i) {
    Eigen::VectorXd row(dim);
    row.head(n) = (HCt.row(i) * Apow).transpose();
    row.tail(r) = (HCt.row(i) * vsum + H.row(i) * cl.Dt).transpose();
    return row;
  };
  for (Eigen::Index i = 0; i < q; ++i) {
    layer_normals.push_back(layer_row(i));
    layer_offsets.push_back(h_t(i));
  }

  for (int t = 0; t < opt.t_cap; ++t) {
    // Y_{t+1} = Y_t ⊖ Ct At^t E W.
    Eigen::VectorXd h_next = h_t;
    const Eigen::MatrixXd shrink_map = cl.Ct * Apow * E;
    for (Eigen::Index i = 0; i < q; ++i)
      h_next(i) -= support(w_set, (H.row(i) * shrink_map).transpose());
    moas.output_offsets.push_back(h_next);
    if (y_empty(h_next))
      fail(ErrorKind::ConstructionInfeasible,
           "build_moas: tightened output set empty at t=" +
               std::to_string(t + 1) + " (disturbance too large)");

    auto [vn, vb] = v_rows(h_t);
    std::vector<Eigen::VectorXd> all_n = layer_normals;
    std::vector<double> all_b = layer_offsets;
    all_n.insert(all_n.end(), vn.begin(), vn.end());
    all_b.insert(all_b.end(), vb.begin(), vb.end());
    const HPolytope current = detail::stack_rows(all_n, all_b, dim);
    if (current.is_empty())
      fail(ErrorKind::ConstructionInfeasible,
           "build_moas: admissible set empty at t=" + std::to_string(t));

    vsum += Apow * cl.Bt;
    Apow = Apow * cl.At;
    h_t = h_next;

    bool determined = true;
    for (Eigen::Index i = 0; i < q; ++i) {
      const Eigen::VectorXd row = layer_row(i);
      const double scale = row.norm();
      if (scale == 0.0) {
        if (h_t(i) < 0.0)
          fail(ErrorKind::ConstructionInfeasible, "build_moas: empty layer");
        continue;
      }
      const LpResult res = lp_solve(row, current, Sense::Max);
      const bool redundant = res.status == LpStatus::Optimal &&
                             (res.value - h_t(i)) / scale <= 1e-9;
      if (!redundant) {
        determined = false;
        layer_normals.push_back(row);
        layer_offsets.push_back(h_t(i));
      }
    }
    if (determined) {
      moas.t_star = t;
      moas.set_xv = remove_redundancy(current);
      std::vector<int> vdims;
      for (Eigen::Index k = 0; k < r; ++k) vdims.push_back(static_cast<int>(n + k));
      moas.proj_x = project_out(moas.set_xv, vdims);
      moas.proj_x_shrunk = pontryagin_diff(moas.proj_x, E, w_set);
      return moas;
    }
  }
  fail(ErrorKind::NonDetermination,
       "build_moas: not finitely determined within t_cap=" +
           std::to_string(opt.t_cap));
}

enum class DistanceNorm { L1, Linf };

inline double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       DistanceNorm norm) {
  if (a.size() == 0) return 0.0;
  return norm == DistanceNorm::L1 ? (a - b).cwiseAbs().sum()
                                  : (a - b).cwiseAbs().maxCoeff();
}

struct AgStep {
  Eigen::VectorXd u;
  bool adjusted = false;
};

namespace detail {

/// Affine action constraints G u <= g at state x for the reduced governor:
/// C x + D u in Y and A x + B u in proj_x ⊖ E W.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> linear_action_constraints(
    const Moas& moas, const LinearPlant& plant, const OutputMap& out,
    const Eigen::VectorXd& x) {
  const HPolytope& Y = out.constraint_set;
  const HPolytope& S = moas.proj_x_shrunk;
  const Eigen::Index m = plant.action_dim();
  Eigen::MatrixXd G(Y.num_rows() + S.num_rows(), m);
  Eigen::VectorXd g(G.rows());
  G.topRows(Y.num_rows()) = Y.normals() * out.D;
  g.head(Y.num_rows()) = Y.offsets() - Y.normals() * (out.C * x);
  G.bottomRows(S.num_rows()) = S.normals() * plant.B;
  g.tail(S.num_rows()) = S.offsets() - S.normals() * (plant.A * x);
  return {G, g};
}

/// min ||target - (M s + c)|| over s subject to G s <= g, as an LP in
/// (s, epigraph). Returns nullopt when the constraints are infeasible.
inline std::optional<Eigen::VectorXd> min_distance_lp_exact(
    const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
    const Eigen::MatrixXd& M, const Eigen::VectorXd& c,
    const Eigen::VectorXd& target, DistanceNorm norm) {
  const Eigen::Index ns = G.cols();
  const Eigen::Index m = M.rows();
  const Eigen::Index ne = norm == DistanceNorm::L1 ? m : 1;
  const Eigen::Index nv = ns + ne;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(G.rows() + 2 * m, nv);
  Eigen::VectorXd b(A.rows());
  A.topLeftCorner(G.rows(), ns) = G;
  b.head(G.rows()) = g;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index e = ns + (norm == DistanceNorm::L1 ? i : 0);
    const Eigen::Index r1 = G.rows() + 2 * i;
    // (M s + c)_i - target_i <= e  and  target_i - (M s + c)_i <= e
    A.block(r1, 0, 1, ns) = M.row(i);
    A(r1, e) = -1.0;
    b(r1) = target(i) - c(i);
    A.block(r1 + 1, 0, 1, ns) = -M.row(i);
    A(r1 + 1, e) = -1.0;
    b(r1 + 1) = c(i) - target(i);
  }
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(nv);
  obj.tail(ne).setOnes();
  const LpResult res = solve_lp(obj, A, b, Sense::Min);
  if (res.status != LpStatus::Optimal) return std::nullopt;
  return Eigen::VectorXd(res.point.head(ns));
}

/// As above, but first solved against constraints pulled in by a relative
/// 1e-9 so the optimizer's round-off cannot leave the result a few ulps
/// outside the set. Falls back to the exact constraints when that fails.
inline std::optional<Eigen::VectorXd> min_distance_lp(
    const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
    const Eigen::MatrixXd& M, const Eigen::VectorXd& c,
    const Eigen::VectorXd& target, DistanceNorm norm) {
  const Eigen::VectorXd inner =
      g.array() - 1e-9 * (1.0 + g.array().abs());
  if (auto s = min_distance_lp_exact(G, inner, M, c, target, norm)) return s;
  return min_distance_lp_exact(G, g, M, c, target, norm);
}

}  // namespace detail

/// Reduced governor for the linear case. Any minimizer is acceptable; the
/// simplex pivot order makes the returned one deterministic.
inline AgStep linear_ag_step(const Moas& moas, const LinearPlant& plant,
                             const OutputMap& out, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u1,
                             DistanceNorm norm = DistanceNorm::L1) {
  if (x.size() != plant.state_dim() || u1.size() != plant.action_dim())
    fail(ErrorKind::Argument, "linear_ag_step: dimension mismatch");
  const auto [G, g] = detail::linear_action_constraints(moas, plant, out, x);
  if (((G * u1 - g).array() <= 0.0).all()) return {u1, false};
  const Eigen::Index m = plant.action_dim();
  auto u = detail::min_distance_lp(G, g, Eigen::MatrixXd::Identity(m, m),
                                   Eigen::VectorXd::Zero(m), u1, norm);
  if (!u)
    fail(ErrorKind::InfeasibleState,
         "linear_ag_step: no admissible action at this state");
  return {*u, true};
}

}  // namespace actgov
