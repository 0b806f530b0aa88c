#pragma once

// Grid abstraction of the closed loop x+ = At x + Bt v + E w with a 2-D state,
// scalar reference and scalar disturbance, and the classification sweep that
// grows a safe and returnable set of (x, v) pairs from an invariant seed.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actgov/control_linalg.hpp"
#include "actgov/convexset.hpp"
#include "actgov/error.hpp"
#include "actgov/governor.hpp"

namespace actgov {

/// Uniform grid lo, lo + step, ..., up to hi.
struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;

  int count() const {
    return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  }
  double value(int i) const { return lo + step * i; }
  double last() const { return value(count() - 1); }

  /// Nearest index; exact ties resolve to the lower index. Points outside
  /// [lo, last] are off the grid.
  std::optional<int> nearest(double x) const {
    const double tol = 1e-9 * step;
    if (x < lo - tol || x > last() + tol) return std::nullopt;
    int i = static_cast<int>(std::ceil((x - lo) / step - 0.5));
    if (i < 0) i = 0;
    if (i >= count()) i = count() - 1;
    return i;
  }

  void validate(const char* name) const {
    if (!(step > 0.0) || !(lo < hi))
      fail(ErrorKind::Argument, std::string("grid axis ") + name +
                                    ": need step > 0 and lo < hi");
  }
};

struct GridSpec {
  Axis x1;
  Axis x2;
  Axis v;
  Axis w;

  void validate() const {
    x1.validate("x1");
    x2.validate("x2");
    v.validate("v");
    // A single-point disturbance grid ({0}) is allowed.
    if (!(w.step > 0.0) || w.lo > w.hi)
      fail(ErrorKind::Argument, "grid axis w: need step > 0 and lo <= hi");
  }

  int nx() const { return x1.count() * x2.count(); }
  int nv() const { return v.count(); }
  int nw() const { return w.count(); }
  std::int64_t num_pairs() const {
    return static_cast<std::int64_t>(nx()) * nv();
  }

  int x_index(int i1, int i2) const { return i1 * x2.count() + i2; }
  Eigen::Vector2d x_point(int xi) const {
    return {x1.value(xi / x2.count()), x2.value(xi % x2.count())};
  }
  std::int64_t pair_index(int xi, int vi) const {
    return static_cast<std::int64_t>(xi) * nv() + vi;
  }

  /// Nearest x-grid point (Euclidean; separable per axis), or nullopt.
  std::optional<int> snap(const Eigen::VectorXd& x) const {
    const auto i1 = x1.nearest(x(0));
    const auto i2 = x2.nearest(x(1));
    if (!i1 || !i2) return std::nullopt;
    return x_index(*i1, *i2);
  }
};

inline constexpr std::int32_t kOutOfGrid = -1;

/// (x, v, w) grid indices -> successor x index under the closed loop.
class TransitionTable {
 public:
  TransitionTable(int nx, int nv, int nw)
      : nx_(nx), nv_(nv), nw_(nw),
        next_(static_cast<std::size_t>(nx) * nv * nw, kOutOfGrid) {}

  std::int32_t at(int xi, int vi, int wi) const { return next_[offset(xi, vi, wi)]; }
  void set(int xi, int vi, int wi, std::int32_t s) { next_[offset(xi, vi, wi)] = s; }

  int nx() const { return nx_; }
  int nv() const { return nv_; }
  int nw() const { return nw_; }

 private:
  std::size_t offset(int xi, int vi, int wi) const {
    return (static_cast<std::size_t>(xi) * nv_ + vi) * nw_ + wi;
  }
  int nx_, nv_, nw_;
  std::vector<std::int32_t> next_;
};

inline TransitionTable discretize(const ClosedLoop& cl, const GridSpec& grid) {
  grid.validate();
  if (cl.At.rows() != 2 || cl.Bt.cols() != 1 || cl.plant.E.cols() != 1)
    fail(ErrorKind::Argument,
         "discretize: grid abstraction needs 2 states, scalar v and scalar w");
  TransitionTable tt(grid.nx(), grid.nv(), grid.nw());
  const Eigen::Matrix2d A = cl.At;
  const Eigen::Vector2d Bv = cl.Bt.col(0);
  const Eigen::Vector2d E = cl.plant.E.col(0);
  for (int xi = 0; xi < grid.nx(); ++xi) {
    const Eigen::Vector2d Ax = A * grid.x_point(xi);
    for (int vi = 0; vi < grid.nv(); ++vi) {
      const Eigen::Vector2d base = Ax + Bv * grid.v.value(vi);
      for (int wi = 0; wi < grid.nw(); ++wi) {
        const Eigen::VectorXd next = base + E * grid.w.value(wi);
        const auto s = grid.snap(next);
        tt.set(xi, vi, wi, s ? *s : kOutOfGrid);
      }
    }
  }
  return tt;
}

enum class PairClass : std::uint8_t { Remain = 0, SafePlus = 1, Minus = 2 };

inline constexpr const char* to_string(PairClass c) {
  switch (c) {
    case PairClass::Remain: return "remain";
    case PairClass::SafePlus: return "safe";
    case PairClass::Minus: return "unsafe";
  }
  return "?";
}

struct SweepStats {
  std::int64_t safe = 0;
  std::int64_t minus = 0;
  std::int64_t remain = 0;
};

/// Witness codes stored for Minus pairs.
inline constexpr std::int8_t kWitnessDirect = -1;  // violates the constraints itself
inline constexpr std::int8_t kWitnessNone = -2;

class DiscreteSafeSet {
 public:
  explicit DiscreteSafeSet(GridSpec grid)
      : grid_(grid), cls_(grid.num_pairs(), PairClass::Remain),
        seed_(grid.num_pairs(), 0), pi_(grid.num_pairs(), 0),
        witness_(grid.num_pairs(), kWitnessNone), proj_(grid.nx(), 0) {}

  const GridSpec& grid() const { return grid_; }
  PairClass cls(std::int64_t pair) const { return cls_[pair]; }
  bool in_seed(std::int64_t pair) const { return seed_[pair] != 0; }
  bool in_pi(std::int64_t pair) const { return pi_[pair] != 0; }
  bool proj_member(int xi) const { return proj_[xi] != 0; }
  std::int8_t witness(std::int64_t pair) const { return witness_[pair]; }
  const std::vector<SweepStats>& sweeps() const { return sweeps_; }
  std::int64_t visits() const { return visits_; }

  std::int64_t count(PairClass c) const {
    std::int64_t k = 0;
    for (auto x : cls_) k += (x == c);
    return k;
  }
  std::int64_t seed_size() const {
    std::int64_t k = 0;
    for (auto s : seed_) k += s;
    return k;
  }

  /// Chooses Π. Must contain the seed and lie inside the safe class.
  void select_pi(const std::vector<std::uint8_t>& mask) {
    if (static_cast<std::int64_t>(mask.size()) != grid_.num_pairs())
      fail(ErrorKind::Argument, "select_pi: mask size mismatch");
    for (std::int64_t p = 0; p < grid_.num_pairs(); ++p) {
      if (seed_[p] && !mask[p])
        fail(ErrorKind::Argument, "select_pi: selection must contain the seed");
      if (mask[p] && cls_[p] != PairClass::SafePlus)
        fail(ErrorKind::Argument, "select_pi: selection must lie in the safe class");
    }
    pi_ = mask;
    refresh_projection();
  }

 private:
  friend DiscreteSafeSet compute_safe_set(const std::vector<std::uint8_t>&,
                                          const TransitionTable&,
                                          const ClosedLoop&, const OutputMap&,
                                          const GridSpec&, std::int64_t);

  void refresh_projection() {
    std::fill(proj_.begin(), proj_.end(), 0);
    for (int xi = 0; xi < grid_.nx(); ++xi)
      for (int vi = 0; vi < grid_.nv(); ++vi)
        if (pi_[grid_.pair_index(xi, vi)]) {
          proj_[xi] = 1;
          break;
        }
  }

  GridSpec grid_;
  std::vector<PairClass> cls_;
  std::vector<std::uint8_t> seed_;
  std::vector<std::uint8_t> pi_;
  std::vector<std::int8_t> witness_;
  std::vector<std::uint8_t> proj_;
  std::vector<SweepStats> sweeps_;
  std::int64_t visits_ = 0;
};

namespace detail {

/// Per-pair test of (x, π0(x, v)) in the constraint set, no tolerance.
inline std::vector<std::uint8_t> pair_admissible(const ClosedLoop& cl,
                                                 const OutputMap& out,
                                                 const GridSpec& grid) {
  const HPolytope& Y = out.constraint_set;
  const Eigen::MatrixXd HC = Y.normals() * cl.Ct;
  const Eigen::VectorXd HD = Y.normals() * cl.Dt.col(0);
  std::vector<Eigen::VectorXd> x_part(grid.nx());
  for (int xi = 0; xi < grid.nx(); ++xi)
    x_part[xi] = HC * Eigen::VectorXd(grid.x_point(xi)) - Y.offsets();
  std::vector<std::uint8_t> ok(grid.num_pairs(), 0);
  for (int xi = 0; xi < grid.nx(); ++xi)
    for (int vi = 0; vi < grid.nv(); ++vi) {
      const double v = grid.v.value(vi);
      ok[grid.pair_index(xi, vi)] =
          ((x_part[xi] + HD * v).array() <= 0.0).all() ? 1 : 0;
    }
  return ok;
}

}  // namespace detail

/// Seed set of safe, positively invariant grid pairs. A reference value is
/// eligible when the invariant ellipsoid around its steady state is certified
/// against the constraints via its support function. Admissible grid points
/// inside the ellipsoid scaled by `inflation` are candidates, and pairs whose
/// rounded successors escape are pruned to a fixed point.
inline std::vector<std::uint8_t> build_seed(const ClosedLoop& cl,
                                            const OutputMap& out,
                                            const GridSpec& grid, double alpha,
                                            const TransitionTable& tt,
                                            double inflation = 1.25) {
  grid.validate();
  if (!(inflation >= 1.0))
    fail(ErrorKind::Argument, "build_seed: inflation must be >= 1");
  double w_scale = 1.0;
  for (int wi = 0; wi < grid.nw(); ++wi)
    w_scale = std::max(w_scale, std::abs(grid.w.value(wi)));
  const Eigen::MatrixXd P = dlyap_scaled(cl.At, cl.plant.E * w_scale, alpha);
  const HPolytope& Y = out.constraint_set;
  const Eigen::MatrixXd HC = Y.normals() * cl.Ct;
  const Eigen::MatrixXd HD = Y.normals() * cl.Dt;
  // Snapping successors to the grid acts as an extra bounded disturbance, so
  // the ellipsoid itself is generally not invariant for the gridded map.
  // Candidates come from an inflated copy, are checked pointwise against the
  // constraints, and the pruning pass below keeps the invariant part.
  const Eigen::MatrixXd Pin = P * inflation * inflation;
  const double half1 = std::sqrt(Pin(0, 0));
  const double half2 = std::sqrt(Pin(1, 1));
  const auto admissible = detail::pair_admissible(cl, out, grid);

  std::vector<std::uint8_t> seed(grid.num_pairs(), 0);
  for (int vi = 0; vi < grid.nv(); ++vi) {
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, grid.v.value(vi));
    const Eigen::VectorXd c = cl.steady_state(v);
    bool certified = true;
    {
      const Ellipsoid ell(c, P);
      for (Eigen::Index i = 0; i < Y.num_rows() && certified; ++i) {
        const double worst =
            ellipsoid_support(ell, HC.row(i).transpose()) + HD.row(i).dot(v);
        certified = worst <= Y.offsets()(i);
      }
    }
    if (!certified) continue;
    const Ellipsoid big(c, Pin);
    for (int i1 = 0; i1 < grid.x1.count(); ++i1) {
      const double a = grid.x1.value(i1);
      if (std::abs(a - c(0)) > half1 + 1e-9) continue;
      for (int i2 = 0; i2 < grid.x2.count(); ++i2) {
        const double b = grid.x2.value(i2);
        if (std::abs(b - c(1)) > half2 + 1e-9) continue;
        const auto p = grid.pair_index(grid.x_index(i1, i2), vi);
        if (admissible[p] && ellipsoid_contains(big, Eigen::Vector2d(a, b)))
          seed[p] = 1;
      }
    }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (int xi = 0; xi < grid.nx(); ++xi)
      for (int vi = 0; vi < grid.nv(); ++vi) {
        const auto p = grid.pair_index(xi, vi);
        if (!seed[p]) continue;
        for (int wi = 0; wi < grid.nw(); ++wi) {
          const auto s = tt.at(xi, vi, wi);
          if (s == kOutOfGrid || !seed[grid.pair_index(s, vi)]) {
            seed[p] = 0;
            changed = true;
            break;
          }
        }
      }
  }

  bool any = false;
  for (auto s : seed) any = any || s;
  if (!any)
    fail(ErrorKind::SeedConstruction,
         "build_seed: no invariant seed pairs on this grid");
  return seed;
}

/// Classification sweep. Remaining pairs are visited in index order, sweep
/// after sweep, until a sweep changes nothing or k_max visits have been
/// spent. A pair becomes safe when it is admissible and every disturbance
/// successor is already safe; it becomes unsafe when it is inadmissible or
/// some successor is unsafe or leaves the grid. Π defaults to the safe class.
inline DiscreteSafeSet compute_safe_set(const std::vector<std::uint8_t>& seed,
                                        const TransitionTable& tt,
                                        const ClosedLoop& cl,
                                        const OutputMap& out,
                                        const GridSpec& grid,
                                        std::int64_t k_max = -1) {
  grid.validate();
  if (static_cast<std::int64_t>(seed.size()) != grid.num_pairs())
    fail(ErrorKind::Argument, "compute_safe_set: seed size mismatch");
  if (k_max < 0) k_max = 50 * grid.num_pairs();

  DiscreteSafeSet dss(grid);
  dss.seed_ = seed;
  const auto admissible = detail::pair_admissible(cl, out, grid);
  std::vector<std::int64_t> remain;
  bool any_seed = false;
  for (std::int64_t p = 0; p < grid.num_pairs(); ++p) {
    if (seed[p]) {
      dss.cls_[p] = PairClass::SafePlus;
      any_seed = true;
    } else {
      remain.push_back(p);
    }
  }
  if (!any_seed) fail(ErrorKind::Argument, "compute_safe_set: empty seed");

  const int nv = grid.nv();
  const int nw = grid.nw();
  std::int64_t k = 0;
  std::int64_t n_safe = grid.num_pairs() - static_cast<std::int64_t>(remain.size());
  std::int64_t n_minus = 0;
  bool changed = true;
  while (changed && !remain.empty() && k < k_max) {
    changed = false;
    std::vector<std::int64_t> still;
    still.reserve(remain.size());
    for (std::size_t idx = 0; idx < remain.size(); ++idx) {
      const auto p = remain[idx];
      if (k >= k_max) {
        still.insert(still.end(), remain.begin() + idx, remain.end());
        break;
      }
      ++k;
      const int xi = static_cast<int>(p / nv);
      const int vi = static_cast<int>(p % nv);
      if (!admissible[p]) {
        dss.cls_[p] = PairClass::Minus;
        dss.witness_[p] = kWitnessDirect;
        ++n_minus;
        changed = true;
        continue;
      }
      bool all_safe = true;
      int bad_w = -1;
      for (int wi = 0; wi < nw; ++wi) {
        const auto s = tt.at(xi, vi, wi);
        if (s == kOutOfGrid) {
          bad_w = wi;
          break;
        }
        const PairClass c = dss.cls_[grid.pair_index(s, vi)];
        if (c == PairClass::Minus) {
          bad_w = wi;
          break;
        }
        if (c != PairClass::SafePlus) all_safe = false;
      }
      if (bad_w >= 0) {
        dss.cls_[p] = PairClass::Minus;
        dss.witness_[p] = static_cast<std::int8_t>(bad_w);
        ++n_minus;
        changed = true;
      } else if (all_safe) {
        dss.cls_[p] = PairClass::SafePlus;
        ++n_safe;
        changed = true;
      } else {
        still.push_back(p);
      }
    }
    remain.swap(still);
    dss.sweeps_.push_back(
        {n_safe, n_minus, static_cast<std::int64_t>(remain.size())});
  }
  dss.visits_ = k;

  for (std::int64_t p = 0; p < grid.num_pairs(); ++p)
    dss.pi_[p] = dss.cls_[p] == PairClass::SafePlus ? 1 : 0;
  dss.refresh_projection();
  return dss;
}

/// Oracle over a classified grid. The adjustment problem enumerates u1 and
/// the action grid, checking admissibility and that every disturbance-grid
/// successor lands in proj(Π); the backup problem enumerates the v grid.
class DiscreteOracle {
 public:
  DiscreteOracle(const DiscreteSafeSet& dss, LinearPlant plant, OutputMap out,
                 NominalGain gain, Axis action_grid)
      : dss_(&dss), plant_(std::move(plant)), out_(std::move(out)),
        gain_(std::move(gain)) {
    for (int i = 0; i < action_grid.count(); ++i)
      actions_.push_back(Eigen::VectorXd::Constant(1, action_grid.value(i)));
    const Axis& v = dss.grid().v;
    for (int i = 0; i < v.count(); ++i)
      refs_.push_back(Eigen::VectorXd::Constant(1, v.value(i)));
  }

  const DiscreteSafeSet& safe_set() const { return *dss_; }
  std::span<const Eigen::VectorXd> actions() const { return actions_; }

  bool member(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    const auto xi = dss_->grid().snap(x);
    const auto vi = dss_->grid().v.nearest(v(0));
    return xi && vi && dss_->in_pi(dss_->grid().pair_index(*xi, *vi));
  }

  bool proj_member(const Eigen::VectorXd& x) const {
    const auto xi = dss_->grid().snap(x);
    return xi && dss_->proj_member(*xi);
  }

  Eigen::VectorXd nominal(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& v) const {
    return gain_.action(x, v);
  }

  /// Admissible now, and every grid-disturbance successor in proj(Π).
  bool action_feasible(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const {
    if (!out_.admissible(x, u)) return false;
    const Eigen::VectorXd base = plant_.A * x + plant_.B * u;
    const Axis& w = dss_->grid().w;
    for (int wi = 0; wi < w.count(); ++wi) {
      const Eigen::VectorXd next = base + plant_.E.col(0) * w.value(wi);
      const auto s = dss_->grid().snap(next);
      if (!s || !dss_->proj_member(*s)) return false;
    }
    return true;
  }

  std::optional<Eigen::VectorXd> adjust_action(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& u1,
                                               const Distance& d) const {
    if (action_feasible(x, u1)) return u1;
    return exhaustive_argmin(
        std::span<const Eigen::VectorXd>(actions_),
        [&](const Eigen::VectorXd& u) { return action_feasible(x, u); },
        [&](const Eigen::VectorXd& u) { return d(x, u1, u); });
  }

  std::optional<Eigen::VectorXd> backup_reference(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& u1,
                                                  const Distance& d) const {
    const auto xi = dss_->grid().snap(x);
    if (!xi) return std::nullopt;
    const GridSpec& g = dss_->grid();
    return exhaustive_argmin(
        std::span<const Eigen::VectorXd>(refs_),
        [&](const Eigen::VectorXd& v) {
          return dss_->in_pi(g.pair_index(*xi, *g.v.nearest(v(0))));
        },
        [&](const Eigen::VectorXd& v) { return d(x, u1, nominal(x, v)); });
  }

 private:
  const DiscreteSafeSet* dss_;
  LinearPlant plant_;
  OutputMap out_;
  NominalGain gain_;
  std::vector<Eigen::VectorXd> actions_;
  std::vector<Eigen::VectorXd> refs_;
};

static_assert(SafeSetOracle<DiscreteOracle>);

inline DiscreteOracle make_oracle(const DiscreteSafeSet& dss,
                                  const ClosedLoop& cl, const OutputMap& out,
                                  Axis action_grid) {
  return DiscreteOracle(dss, cl.plant, out, cl.gain, action_grid);
}

}  // namespace actgov
