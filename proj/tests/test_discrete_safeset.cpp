#include <gtest/gtest.h>

#include <random>

#include "actgov/discrete_safeset.hpp"
#include "actgov/simlab.hpp"

using namespace actgov;

namespace {

struct GridFixture {
  ExampleSystem sys = example_system();
  ClosedLoop cl = closed_loop(sys.plant, sys.out, sys.gain);
  GridSpec grid{{-25, 25, 0.5}, {-10, 15, 0.5}, {-25, 25, 0.5}, {-1, 1, 0.1}};
  TransitionTable tt = discretize(cl, grid);
  std::vector<std::uint8_t> seed = build_seed(cl, sys.out, grid, 0.75, tt);
  DiscreteSafeSet dss = compute_safe_set(seed, tt, cl, sys.out, grid);
};

const GridFixture& fx() {
  static const GridFixture f;
  return f;
}

}  // namespace

TEST(Axis, NearestWithLowerTieBreak) {
  const Axis a{0.0, 1.0, 0.5};
  EXPECT_EQ(a.count(), 3);
  EXPECT_EQ(*a.nearest(0.25), 0);
  EXPECT_EQ(*a.nearest(0.26), 1);
  EXPECT_EQ(*a.nearest(0.75), 1);
  EXPECT_EQ(*a.nearest(1.0), 2);
  EXPECT_FALSE(a.nearest(-0.01));
  EXPECT_FALSE(a.nearest(1.2));
  EXPECT_THROW(Axis({1.0, 0.0, 0.5}).validate("x"), Error);
}

TEST(GridSpec, PaperGridSizes) {
  const GridSpec& g = fx().grid;
  EXPECT_EQ(g.x1.count(), 101);
  EXPECT_EQ(g.x2.count(), 51);
  EXPECT_EQ(g.nv(), 101);
  EXPECT_EQ(g.nw(), 21);
  EXPECT_EQ(g.num_pairs(), 520251);
  const int xi = g.x_index(30, 7);
  EXPECT_EQ(*g.snap(g.x_point(xi)), xi);
}

TEST(Discretize, MatchesSnappedSuccessor) {
  const auto& f = fx();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> px(0, f.grid.nx() - 1), pv(0, f.grid.nv() - 1),
      pw(0, f.grid.nw() - 1);
  for (int k = 0; k < 2000; ++k) {
    const int xi = px(rng), vi = pv(rng), wi = pw(rng);
    const Eigen::VectorXd next =
        f.cl.step(f.grid.x_point(xi), Eigen::VectorXd::Constant(1, f.grid.v.value(vi)),
                  Eigen::VectorXd::Constant(1, f.grid.w.value(wi)));
    const auto s = f.grid.snap(next);
    EXPECT_EQ(f.tt.at(xi, vi, wi), s ? *s : kOutOfGrid);
  }
}

TEST(Seed, AdmissibleAndInvariantOnTheGrid) {
  const auto& f = fx();
  std::int64_t n = 0;
  const auto adm = detail::pair_admissible(f.cl, f.sys.out, f.grid);
  for (int xi = 0; xi < f.grid.nx(); ++xi)
    for (int vi = 0; vi < f.grid.nv(); ++vi) {
      const auto p = f.grid.pair_index(xi, vi);
      if (!f.seed[p]) continue;
      ++n;
      ASSERT_TRUE(adm[p]);
      for (int wi = 0; wi < f.grid.nw(); ++wi) {
        const auto s = f.tt.at(xi, vi, wi);
        ASSERT_NE(s, kOutOfGrid);
        ASSERT_TRUE(f.seed[f.grid.pair_index(s, vi)]);
      }
    }
  EXPECT_GT(n, 0);
}

TEST(Seed, RejectsShrunkCandidateRegion) {
  const auto& f = fx();
  EXPECT_THROW(build_seed(f.cl, f.sys.out, f.grid, 0.75, f.tt, 0.5), Error);
}

TEST(ClassificationSweep, PartitionAndMonotonicity) {
  const auto& d = fx().dss;
  ASSERT_FALSE(d.sweeps().empty());
  std::int64_t prev_safe = d.seed_size(), prev_minus = 0;
  for (const auto& s : d.sweeps()) {
    EXPECT_EQ(s.safe + s.minus + s.remain, fx().grid.num_pairs());
    EXPECT_GE(s.safe, prev_safe);
    EXPECT_GE(s.minus, prev_minus);
    prev_safe = s.safe;
    prev_minus = s.minus;
  }
  EXPECT_GT(d.count(PairClass::SafePlus), d.seed_size());
  EXPECT_LE(d.visits(), 50 * fx().grid.num_pairs());
}

TEST(ClassificationSweep, SafePairsAreClosedAndUnsafeHaveWitnesses) {
  const auto& f = fx();
  const auto& d = f.dss;
  const auto adm = detail::pair_admissible(f.cl, f.sys.out, f.grid);
  for (int xi = 0; xi < f.grid.nx(); ++xi)
    for (int vi = 0; vi < f.grid.nv(); ++vi) {
      const auto p = f.grid.pair_index(xi, vi);
      if (d.cls(p) == PairClass::SafePlus) {
        ASSERT_TRUE(adm[p]);
        for (int wi = 0; wi < f.grid.nw(); ++wi) {
          const auto s = f.tt.at(xi, vi, wi);
          ASSERT_NE(s, kOutOfGrid);
          ASSERT_EQ(d.cls(f.grid.pair_index(s, vi)), PairClass::SafePlus);
        }
      } else if (d.cls(p) == PairClass::Minus) {
        const auto w = d.witness(p);
        if (w == kWitnessDirect) {
          ASSERT_FALSE(adm[p]);
        } else {
          ASSERT_GE(w, 0);
          const auto s = f.tt.at(xi, vi, w);
          ASSERT_TRUE(s == kOutOfGrid ||
                      d.cls(f.grid.pair_index(s, vi)) == PairClass::Minus);
        }
      }
    }
}

TEST(ClassificationSweep, RolloutsReachTheSeedSafely) {
  const auto& f = fx();
  std::vector<std::int64_t> safe;
  for (std::int64_t p = 0; p < f.grid.num_pairs(); ++p)
    if (f.dss.cls(p) == PairClass::SafePlus && !f.seed[p]) safe.push_back(p);
  ASSERT_FALSE(safe.empty());
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, safe.size() - 1);
  std::uniform_int_distribution<int> pw(0, f.grid.nw() - 1);
  const auto adm = detail::pair_admissible(f.cl, f.sys.out, f.grid);
  for (int k = 0; k < 300; ++k) {
    const auto p0 = safe[pick(rng)];
    int xi = static_cast<int>(p0 / f.grid.nv());
    const int vi = static_cast<int>(p0 % f.grid.nv());
    bool reached = false;
    for (int t = 0; t < 10000 && !reached; ++t) {
      const auto p = f.grid.pair_index(xi, vi);
      ASSERT_TRUE(adm[p]);
      if (f.seed[p]) reached = true;
      else xi = f.tt.at(xi, vi, pw(rng));
    }
    EXPECT_TRUE(reached);
  }
}

TEST(ClassificationSweep, VisitBudgetLeavesPairsUnresolved) {
  const auto& f = fx();
  const DiscreteSafeSet d = compute_safe_set(f.seed, f.tt, f.cl, f.sys.out, f.grid, 1000);
  EXPECT_EQ(d.visits(), 1000);
  EXPECT_GT(d.count(PairClass::Remain), 0);
}

TEST(ClassificationSweep, AgreesWithContinuousProjection) {
  ScenarioConfig cfg;
  Workbench wb(cfg);
  const SetComparison c = compare_projections(wb.ensure_grid(), wb.ensure_moas());
  EXPECT_GE(c.jaccard, 0.9);
}

TEST(SelectPi, ValidatesSelection) {
  DiscreteSafeSet d = fx().dss;
  std::vector<std::uint8_t> empty(fx().grid.num_pairs(), 0);
  EXPECT_THROW(d.select_pi(empty), Error);
  d.select_pi(fx().seed);
  int proj = 0;
  for (int xi = 0; xi < fx().grid.nx(); ++xi) proj += d.proj_member(xi);
  EXPECT_GT(proj, 0);
}

TEST(DiscreteOracle, AdjustsIntoProjection) {
  const auto& f = fx();
  const DiscreteOracle o = make_oracle(f.dss, f.cl, f.sys.out, Axis{-6, 6, 0.5});
  const Eigen::Vector2d x(0, 0);
  const auto same = o.adjust_action(x, Eigen::VectorXd::Zero(1), Distance{});
  ASSERT_TRUE(same);
  EXPECT_DOUBLE_EQ((*same)(0), 0.0);

  const Eigen::Vector2d edge(14, 5);
  ASSERT_TRUE(o.proj_member(edge));
  const auto u = o.adjust_action(edge, Eigen::VectorXd::Constant(1, 6.0), Distance{});
  ASSERT_TRUE(u);
  EXPECT_TRUE(o.action_feasible(edge, *u));
  const auto v = o.backup_reference(edge, Eigen::VectorXd::Zero(1), Distance{});
  ASSERT_TRUE(v);
  EXPECT_TRUE(o.member(edge, *v));
}
