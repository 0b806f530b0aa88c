#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "actgov/error.hpp"
#include "actgov/lp.hpp"

namespace actgov {

/// Convex polytope {z : normals * z <= offsets}.
///
/// Values are immutable. Emptiness and boundedness are decided with the LP
/// once at construction, so a polytope can be shared across threads freely.
/// A polytope with zero rows is all of R^n.
class HPolytope {
 public:
  HPolytope() : HPolytope(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0)) {}

  HPolytope(Eigen::MatrixXd normals, Eigen::VectorXd offsets)
      : normals_(std::move(normals)), offsets_(std::move(offsets)) {
    if (normals_.rows() != offsets_.size())
      fail(ErrorKind::Argument,
           "HPolytope: " + std::to_string(normals_.rows()) + " normals but " +
               std::to_string(offsets_.size()) + " offsets");
    if (!normals_.allFinite() || !offsets_.allFinite())
      fail(ErrorKind::Argument, "HPolytope: non-finite entries");
    classify();
  }

  /// Axis-aligned box [lo, hi].
  static HPolytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != hi.size())
      fail(ErrorKind::Argument, "HPolytope::box: bound sizes differ");
    const auto n = lo.size();
    Eigen::MatrixXd H(2 * n, n);
    Eigen::VectorXd h(2 * n);
    H.topRows(n) = Eigen::MatrixXd::Identity(n, n);
    H.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
    h.head(n) = hi;
    h.tail(n) = -lo;
    return {H, h};
  }

  /// Canonical empty polytope in dimension n.
  static HPolytope empty(Eigen::Index n) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, n);
    Eigen::VectorXd h(1);
    h(0) = -1.0;
    return {H, h};
  }

  Eigen::Index dim() const { return normals_.cols(); }
  Eigen::Index num_rows() const { return normals_.rows(); }
  const Eigen::MatrixXd& normals() const { return normals_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }
  bool is_empty() const { return empty_; }
  bool is_bounded() const { return bounded_; }

  bool contains(const Eigen::VectorXd& z, double tol = 1e-9) const {
    if (z.size() != dim())
      fail(ErrorKind::Argument, "HPolytope::contains: dimension mismatch");
    if (num_rows() == 0) return true;
    return ((normals_ * z - offsets_).array() <= tol).all();
  }

  /// Row-stacked intersection.
  HPolytope intersect(const HPolytope& other) const {
    if (other.dim() != dim())
      fail(ErrorKind::Argument, "HPolytope::intersect: dimension mismatch");
    Eigen::MatrixXd H(num_rows() + other.num_rows(), dim());
    Eigen::VectorXd h(H.rows());
    H << normals_, other.normals_;
    h << offsets_, other.offsets_;
    return {H, h};
  }

 private:
  void classify() {
    const auto n = dim();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    empty_ = num_rows() > 0 &&
             solve_lp(zero, normals_, offsets_).status == LpStatus::Infeasible;
    if (empty_) {
      bounded_ = true;
      return;
    }
    bounded_ = true;
    for (Eigen::Index j = 0; j < n && bounded_; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(n, j);
      if (solve_lp(e, normals_, offsets_, Sense::Max).status ==
              LpStatus::Unbounded ||
          solve_lp(e, normals_, offsets_, Sense::Min).status ==
              LpStatus::Unbounded)
        bounded_ = false;
    }
  }

  Eigen::MatrixXd normals_;
  Eigen::VectorXd offsets_;
  bool empty_ = false;
  bool bounded_ = false;
};

inline LpResult lp_solve(const Eigen::VectorXd& objective,
                         const HPolytope& poly, Sense sense) {
  if (objective.size() != poly.dim())
    fail(ErrorKind::Argument, "lp_solve: objective has dimension " +
                                  std::to_string(objective.size()) +
                                  ", polytope has " +
                                  std::to_string(poly.dim()));
  return solve_lp(objective, poly.normals(), poly.offsets(), sense);
}

/// sup { direction . z : z in poly }.
inline double support(const HPolytope& poly, const Eigen::VectorXd& direction) {
  if (direction.size() != poly.dim())
    fail(ErrorKind::Argument, "support: dimension mismatch");
  if (poly.is_empty()) fail(ErrorKind::EmptySet, "support: empty polytope");
  if (direction.isZero(0.0)) return 0.0;
  const LpResult r = lp_solve(direction, poly, Sense::Max);
  if (r.status == LpStatus::Unbounded)
    fail(ErrorKind::Unbounded, "support: polytope unbounded in direction");
  if (r.status == LpStatus::Infeasible)
    fail(ErrorKind::EmptySet, "support: empty polytope");
  return r.value;
}

/// poly ⊖ (map · w_set), by shrinking every offset with the support of the
/// mapped subtrahend. Normals are unchanged. The result may be empty.
inline HPolytope pontryagin_diff(const HPolytope& poly,
                                 const Eigen::MatrixXd& map,
                                 const HPolytope& w_set) {
  if (map.rows() != poly.dim() || map.cols() != w_set.dim())
    fail(ErrorKind::Argument, "pontryagin_diff: map is " +
                                  std::to_string(map.rows()) + "x" +
                                  std::to_string(map.cols()));
  if (w_set.is_empty())
    fail(ErrorKind::EmptySet, "pontryagin_diff: empty subtrahend");
  Eigen::VectorXd b = poly.offsets();
  for (Eigen::Index i = 0; i < poly.num_rows(); ++i) {
    const Eigen::VectorXd dir = map.transpose() * poly.normals().row(i).transpose();
    b(i) -= support(w_set, dir);
  }
  return {poly.normals(), b};
}

/// Drops every halfspace that cannot be active. Rows are visited in order and
/// each is tested against the rows kept so far plus the rows not yet visited.
inline HPolytope remove_redundancy(const HPolytope& poly, double tol = 1e-9) {
  if (poly.is_empty())
    fail(ErrorKind::EmptySet, "remove_redundancy: empty polytope");
  const auto m = poly.num_rows();
  const auto n = poly.dim();
  const Eigen::MatrixXd& H = poly.normals();
  const Eigen::VectorXd& h = poly.offsets();

  std::vector<bool> keep(m, true);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = H.row(i).norm();
    if (norm == 0.0) keep[i] = false;  // 0 <= h_i, already known feasible
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!keep[i]) continue;
    std::vector<Eigen::Index> others;
    for (Eigen::Index k = 0; k < m; ++k)
      if (k != i && keep[k]) others.push_back(k);
    if (others.empty()) continue;
    Eigen::MatrixXd A(others.size(), n);
    Eigen::VectorXd b(others.size());
    for (std::size_t r = 0; r < others.size(); ++r) {
      A.row(r) = H.row(others[r]);
      b(r) = h(others[r]);
    }
    const LpResult res = solve_lp(H.row(i).transpose(), A, b, Sense::Max);
    if (res.status == LpStatus::Optimal &&
        (res.value - h(i)) / H.row(i).norm() <= tol)
      keep[i] = false;
  }

  const auto kept = std::count(keep.begin(), keep.end(), true);
  Eigen::MatrixXd Hr(kept, n);
  Eigen::VectorXd hr(kept);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!keep[i]) continue;
    Hr.row(r) = H.row(i);
    hr(r) = h(i);
    ++r;
  }
  return {Hr, hr};
}

/// Fourier–Motzkin elimination of `dims`, with redundancy removal after each
/// eliminated coordinate. Remaining coordinates keep their relative order.
inline HPolytope project_out(const HPolytope& poly, std::vector<int> dims) {
  const int n = static_cast<int>(poly.dim());
  std::sort(dims.begin(), dims.end());
  if (std::adjacent_find(dims.begin(), dims.end()) != dims.end())
    fail(ErrorKind::Argument, "project_out: repeated dimension");
  for (int d : dims)
    if (d < 0 || d >= n)
      fail(ErrorKind::Argument, "project_out: dimension " + std::to_string(d) +
                                    " out of range");
  if (static_cast<int>(dims.size()) >= n)
    fail(ErrorKind::Argument, "project_out: cannot eliminate every dimension");
  if (dims.empty()) return poly;
  const int out_dim = n - static_cast<int>(dims.size());
  if (poly.is_empty()) return HPolytope::empty(out_dim);

  // Working rows are [normal | offset]; eliminate from the highest index down
  // so earlier indices stay valid.
  Eigen::MatrixXd rows(poly.num_rows(), n + 1);
  rows << poly.normals(), poly.offsets();
  int cur = n;
  for (auto it = dims.rbegin(); it != dims.rend(); ++it) {
    const int d = *it;
    std::vector<Eigen::Index> pos, neg, zero;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double scale = rows.row(i).head(cur).cwiseAbs().maxCoeff();
      const double a = rows(i, d);
      if (a > 1e-12 * scale)
        pos.push_back(i);
      else if (a < -1e-12 * scale)
        neg.push_back(i);
      else
        zero.push_back(i);
    }
    std::vector<Eigen::VectorXd> next;
    next.reserve(zero.size() + pos.size() * neg.size());
    auto drop_col = [&](const Eigen::VectorXd& r) {
      Eigen::VectorXd o(cur);
      o.head(d) = r.head(d);
      o.tail(cur - d) = r.tail(cur - d);
      return o;
    };
    for (auto i : zero) {
      Eigen::VectorXd r = rows.row(i).transpose();
      r(d) = 0.0;
      next.push_back(drop_col(r));
    }
    for (auto p : pos) {
      for (auto q : neg) {
        Eigen::VectorXd r = rows.row(p).transpose() / rows(p, d) +
                            rows.row(q).transpose() / (-rows(q, d));
        r(d) = 0.0;
        next.push_back(drop_col(r));
      }
    }
    --cur;

    // Normalize, drop trivial rows, detect contradictions.
    std::vector<Eigen::VectorXd> cleaned;
    for (auto& r : next) {
      const double nn = r.head(cur).norm();
      if (nn <= 1e-12 * std::max(1.0, std::abs(r(cur)))) {
        if (r(cur) < -1e-9) return HPolytope::empty(out_dim);
        continue;
      }
      cleaned.push_back(r / nn);
    }
    Eigen::MatrixXd H(cleaned.size(), cur);
    Eigen::VectorXd h(cleaned.size());
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
      H.row(i) = cleaned[i].head(cur).transpose();
      h(i) = cleaned[i](cur);
    }
    HPolytope step(H, h);
    if (step.is_empty()) return HPolytope::empty(out_dim);
    step = remove_redundancy(step);
    rows.resize(step.num_rows(), cur + 1);
    rows << step.normals(), step.offsets();
  }
  return {rows.leftCols(cur), rows.col(cur)};
}

/// p ⊆ q, decided by one support query per halfspace of q.
inline bool is_subset(const HPolytope& p, const HPolytope& q,
                      double tol = 1e-9) {
  if (p.dim() != q.dim())
    fail(ErrorKind::Argument, "is_subset: dimension mismatch");
  if (p.is_empty()) return true;
  for (Eigen::Index i = 0; i < q.num_rows(); ++i) {
    const LpResult r =
        lp_solve(q.normals().row(i).transpose(), p, Sense::Max);
    if (r.status != LpStatus::Optimal) return false;
    if (r.value > q.offsets()(i) + tol) return false;
  }
  return true;
}

/// Ellipsoid {x : (x - center)' shape^-1 (x - center) <= 1}.
class Ellipsoid {
 public:
  Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape)
      : center_(std::move(center)), shape_(std::move(shape)) {
    if (shape_.rows() != shape_.cols() || shape_.rows() != center_.size())
      fail(ErrorKind::Argument, "Ellipsoid: shape/center size mismatch");
    if ((shape_ - shape_.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, shape_.cwiseAbs().maxCoeff()))
      fail(ErrorKind::Argument, "Ellipsoid: shape not symmetric");
    llt_.compute(shape_);
    if (llt_.info() != Eigen::Success)
      fail(ErrorKind::Argument, "Ellipsoid: shape not positive definite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shape_);
    if (es.eigenvalues().minCoeff() <= 0.0)
      fail(ErrorKind::Argument, "Ellipsoid: shape not positive definite");
  }

  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }

  double quadratic_form(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd d = x - center_;
    return d.dot(llt_.solve(d));
  }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline double ellipsoid_support(const Ellipsoid& e,
                                const Eigen::VectorXd& direction) {
  if (direction.size() != e.center().size())
    fail(ErrorKind::Argument, "ellipsoid_support: dimension mismatch");
  const double q = direction.dot(e.shape() * direction);
  return direction.dot(e.center()) + std::sqrt(std::max(q, 0.0));
}

inline bool ellipsoid_contains(const Ellipsoid& e, const Eigen::VectorXd& x) {
  if (x.size() != e.center().size())
    fail(ErrorKind::Argument, "ellipsoid_contains: dimension mismatch");
  return e.quadratic_form(x) <= 1.0 + 1e-12;
}

// JSON: {"normals": [[...], ...], "offsets": [...]}, row-major.

inline void to_json(nlohmann::json& j, const HPolytope& p) {
  nlohmann::json normals = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.dim(); ++k) row.push_back(p.normals()(i, k));
    normals.push_back(std::move(row));
  }
  nlohmann::json offsets = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.num_rows(); ++i)
    offsets.push_back(p.offsets()(i));
  j = nlohmann::json{{"normals", std::move(normals)},
                     {"offsets", std::move(offsets)}};
}

inline HPolytope polytope_from_json(const nlohmann::json& j,
                                    Eigen::Index dim_if_empty = 0) {
  const auto& normals = j.at("normals");
  const auto& offsets = j.at("offsets");
  if (normals.size() != offsets.size())
    fail(ErrorKind::Argument, "polytope JSON: normals/offsets length mismatch");
  const auto m = static_cast<Eigen::Index>(normals.size());
  const Eigen::Index n =
      m > 0 ? static_cast<Eigen::Index>(normals[0].size()) : dim_if_empty;
  Eigen::MatrixXd H(m, n);
  Eigen::VectorXd h(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(normals[i].size()) != n)
      fail(ErrorKind::Argument, "polytope JSON: ragged normals");
    for (Eigen::Index k = 0; k < n; ++k) H(i, k) = normals[i][k].get<double>();
    h(i) = offsets[i].get<double>();
  }
  return {H, h};
}

}  // namespace actgov
