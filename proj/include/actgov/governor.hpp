#pragma once

// Generalized action governor loop:
//
//   u = û                 if the adjustment problem is feasible,
//   u = π0(x, v̂)          otherwise,
//
// where v̂ is re-optimized whenever x lies in the projection of the safe set
// and held from the previous step otherwise.

#include <Eigen/Dense>

#include <concepts>
#include <optional>
#include <span>
#include <utility>

#include "actgov/control_linalg.hpp"
#include "actgov/error.hpp"
#include "actgov/moas.hpp"

namespace actgov {

/// Distance between actions. The state argument is accepted so a
/// state-dependent metric can be slotted in; the built-in norms ignore it.
struct Distance {
  DistanceNorm norm = DistanceNorm::L1;

  double operator()(const Eigen::VectorXd& /*x*/, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b) const {
    return distance(a, b, norm);
  }
};

enum class Branch { Adjusted, BackupFresh, BackupHeld };

inline constexpr const char* to_string(Branch b) {
  switch (b) {
    case Branch::Adjusted: return "adjusted";
    case Branch::BackupFresh: return "backup_fresh";
    case Branch::BackupHeld: return "backup_held";
  }
  return "?";
}

struct GovernorState {
  std::optional<Eigen::VectorXd> v_hat;
};

struct GovernorOutcome {
  Eigen::VectorXd u;
  Branch branch = Branch::Adjusted;
  bool eq8_feasible = false;  // adjustment problem
  bool eq9_feasible = false;  // backup-reference problem
};

/// Safe-set oracle: membership in Π and its state projection, plus the two
/// optimization problems posed over it.
template <class O>
concept SafeSetOracle = requires(const O& o, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& u1, const Distance& d) {
  { o.member(x, v) } -> std::convertible_to<bool>;
  { o.proj_member(x) } -> std::convertible_to<bool>;
  { o.nominal(x, v) } -> std::convertible_to<Eigen::VectorXd>;
  { o.adjust_action(x, u1, d) } -> std::same_as<std::optional<Eigen::VectorXd>>;
  { o.backup_reference(x, u1, d) } -> std::same_as<std::optional<Eigen::VectorXd>>;
};

template <SafeSetOracle O>
std::optional<Eigen::VectorXd> adjust_action(const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& u1,
                                             const O& oracle,
                                             const Distance& dist) {
  return oracle.adjust_action(x, u1, dist);
}

template <SafeSetOracle O>
std::optional<Eigen::VectorXd> backup_reference(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& u1,
                                                const O& oracle,
                                                const Distance& dist) {
  return oracle.backup_reference(x, u1, dist);
}

/// One supervision step. Only `gs` is mutated.
template <SafeSetOracle O>
GovernorOutcome govern(const Eigen::VectorXd& x, const Eigen::VectorXd& u1,
                       GovernorState& gs, const O& oracle,
                       const Distance& dist = {}) {
  GovernorOutcome out;
  out.eq9_feasible = oracle.proj_member(x);
  if (auto u = oracle.adjust_action(x, u1, dist)) {
    out.u = std::move(*u);
    out.branch = Branch::Adjusted;
    out.eq8_feasible = true;
    return out;
  }
  if (out.eq9_feasible) {
    if (auto v = oracle.backup_reference(x, u1, dist)) {
      gs.v_hat = *v;
      out.u = oracle.nominal(x, *v);
      out.branch = Branch::BackupFresh;
      return out;
    }
    out.eq9_feasible = false;
  }
  if (!gs.v_hat)
    fail(ErrorKind::UninitializedGovernor,
         "govern: neither adjustment nor backup reference is feasible and no "
         "reference is held");
  out.u = oracle.nominal(x, *gs.v_hat);
  out.branch = Branch::BackupHeld;
  return out;
}

/// Exhaustive argmin over an enumerable candidate list. Ties go to the
/// earliest candidate, so callers pass candidates in ascending order.
template <class Feasible, class Cost>
std::optional<Eigen::VectorXd> exhaustive_argmin(
    std::span<const Eigen::VectorXd> candidates, Feasible&& feasible,
    Cost&& cost) {
  std::optional<Eigen::VectorXd> best;
  double best_cost = 0.0;
  for (const auto& c : candidates) {
    if (!feasible(c)) continue;
    const double v = cost(c);
    if (!best || v < best_cost) {
      best = c;
      best_cost = v;
    }
  }
  return best;
}

/// Oracle backed by the maximal output admissible set of a linear loop.
/// Adjustment solves the reduced (recursively feasible) problem.
class LinearOracle {
 public:
  LinearOracle(const Moas& moas, LinearPlant plant, OutputMap out,
               NominalGain gain)
      : moas_(&moas), plant_(std::move(plant)), out_(std::move(out)),
        gain_(std::move(gain)) {}

  const Moas& moas() const { return *moas_; }
  const LinearPlant& plant() const { return plant_; }
  const OutputMap& output_map() const { return out_; }
  const NominalGain& gain() const { return gain_; }

  bool member(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    Eigen::VectorXd z(x.size() + v.size());
    z << x, v;
    return moas_->set_xv.contains(z);
  }

  bool proj_member(const Eigen::VectorXd& x) const {
    return moas_->proj_x.contains(x);
  }

  Eigen::VectorXd nominal(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& v) const {
    return gain_.action(x, v);
  }

  std::optional<Eigen::VectorXd> adjust_action(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& u1,
                                               const Distance& d) const {
    try {
      return linear_ag_step(*moas_, plant_, out_, x, u1, d.norm).u;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InfeasibleState) return std::nullopt;
      throw;
    }
  }

  /// argmin_v ||u1 - (K x + L v)|| s.t. (x, v) in the set.
  std::optional<Eigen::VectorXd> backup_reference(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& u1,
                                                  const Distance& d) const {
    const HPolytope& S = moas_->set_xv;
    const Eigen::Index n = x.size();
    const Eigen::Index r = S.dim() - n;
    const Eigen::MatrixXd G = S.normals().rightCols(r);
    const Eigen::VectorXd g = S.offsets() - S.normals().leftCols(n) * x;
    return detail::min_distance_lp(G, g, gain_.L, gain_.K * x, u1, d.norm);
  }

 private:
  const Moas* moas_;
  LinearPlant plant_;
  OutputMap out_;
  NominalGain gain_;
};

static_assert(SafeSetOracle<LinearOracle>);

}  // namespace actgov
