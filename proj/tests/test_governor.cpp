#include <gtest/gtest.h>

#include <vector>

#include "actgov/governor.hpp"
#include "actgov/simlab.hpp"

using namespace actgov;

namespace {

Eigen::VectorXd s(double v) { return Eigen::VectorXd::Constant(1, v); }

// Scripted oracle: answers are fixed per test.
struct ScriptedOracle {
  std::optional<Eigen::VectorXd> adjust;
  std::optional<Eigen::VectorXd> backup;
  bool in_projection = true;

  bool member(const Eigen::VectorXd&, const Eigen::VectorXd&) const { return true; }
  bool proj_member(const Eigen::VectorXd&) const { return in_projection; }
  Eigen::VectorXd nominal(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    return s(x(0) + 10.0 * v(0));
  }
  std::optional<Eigen::VectorXd> adjust_action(const Eigen::VectorXd&,
                                               const Eigen::VectorXd&,
                                               const Distance&) const {
    return adjust;
  }
  std::optional<Eigen::VectorXd> backup_reference(const Eigen::VectorXd&,
                                                  const Eigen::VectorXd&,
                                                  const Distance&) const {
    return backup;
  }
};

static_assert(SafeSetOracle<ScriptedOracle>);

}  // namespace

TEST(Govern, AdjustedWhenFeasible) {
  ScriptedOracle o{s(0.5), s(2.0)};
  GovernorState gs;
  const auto out = govern(s(1.0), s(3.0), gs, o);
  EXPECT_EQ(out.branch, Branch::Adjusted);
  EXPECT_DOUBLE_EQ(out.u(0), 0.5);
  EXPECT_TRUE(out.eq8_feasible);
  EXPECT_FALSE(gs.v_hat.has_value());
}

TEST(Govern, FreshBackupUpdatesReference) {
  ScriptedOracle o{std::nullopt, s(2.0)};
  GovernorState gs;
  const auto out = govern(s(1.0), s(3.0), gs, o);
  EXPECT_EQ(out.branch, Branch::BackupFresh);
  EXPECT_DOUBLE_EQ(out.u(0), 21.0);
  ASSERT_TRUE(gs.v_hat);
  EXPECT_DOUBLE_EQ((*gs.v_hat)(0), 2.0);
}

TEST(Govern, HeldBackupOutsideProjection) {
  ScriptedOracle o{std::nullopt, s(2.0), false};
  GovernorState gs{s(-1.0)};
  const auto out = govern(s(1.0), s(3.0), gs, o);
  EXPECT_EQ(out.branch, Branch::BackupHeld);
  EXPECT_DOUBLE_EQ(out.u(0), -9.0);
  EXPECT_DOUBLE_EQ((*gs.v_hat)(0), -1.0);
}

TEST(Govern, UninitializedReferenceIsAnError) {
  ScriptedOracle o{std::nullopt, std::nullopt, false};
  GovernorState gs;
  try {
    govern(s(1.0), s(3.0), gs, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UninitializedGovernor);
  }
}

TEST(ExhaustiveArgmin, FirstCandidateWinsTies) {
  const std::vector<Eigen::VectorXd> c = {s(-1), s(1), s(3)};
  const auto best = exhaustive_argmin(
      std::span<const Eigen::VectorXd>(c), [](const auto&) { return true; },
      [](const Eigen::VectorXd& v) { return std::abs(v(0)); });
  ASSERT_TRUE(best);
  EXPECT_DOUBLE_EQ((*best)(0), -1.0);
  const auto none = exhaustive_argmin(
      std::span<const Eigen::VectorXd>(c), [](const auto&) { return false; },
      [](const Eigen::VectorXd&) { return 0.0; });
  EXPECT_FALSE(none);
}

TEST(LinearOracle, BackupReferenceKeepsPairInSet) {
  ScenarioConfig cfg;
  Workbench wb(cfg);
  const Moas& m = wb.ensure_moas();
  const Eigen::Vector2d x(5, 2);
  const auto v = wb.linear->backup_reference(x, s(4.0), Distance{});
  ASSERT_TRUE(v);
  Eigen::Vector3d z;
  z << x, *v;
  EXPECT_TRUE(m.set_xv.contains(z));
  // Outside the projection nothing can be selected.
  EXPECT_FALSE(wb.linear->backup_reference(Eigen::Vector2d(14, 6), s(0), Distance{}));
}

TEST(LinearOracle, GovernedRunFromInteriorIsSafe) {
  ScenarioConfig cfg;
  Workbench wb(cfg);
  wb.ensure_moas();
  const LinearOracle& o = *wb.linear;
  GovernorState gs;
  Eigen::VectorXd x = Eigen::Vector2d(14, 5);
  for (int t = 0; t < 200; ++t) {
    const auto out = govern(x, s(-10.0 + 20.0 * (t % 2)), gs, o);
    ASSERT_TRUE(wb.sys.out.admissible(x, out.u)) << "t=" << t;
    x = wb.sys.plant.step(x, out.u, s(wb.sys.disturbance(x)));
  }
}
