#pragma once

// Scenario plumbing for the double-integrator example: configuration,
// governed and ungoverned simulation, and the learning environments.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "actgov/control_linalg.hpp"
#include "actgov/convexset.hpp"
#include "actgov/discrete_safeset.hpp"
#include "actgov/error.hpp"
#include "actgov/governor.hpp"
#include "actgov/moas.hpp"
#include "actgov/safe_learning.hpp"
#include "actgov/trajectory.hpp"

namespace actgov {

using Rng = std::mt19937_64;

/// w = sin(10 x1). Bounded by 1, so W = [-1, 1] covers it.
inline double sine_disturbance(const Eigen::VectorXd& x) {
  return std::sin(10.0 * x(0));
}

struct ExampleSystem {
  LinearPlant plant;
  OutputMap out;
  NominalGain gain;
  HPolytope w_set;
  std::function<double(const Eigen::VectorXd&)> disturbance;
};

/// Double integrator with |x1| <= x1_bound, x2 in [x2_lo, x2_hi],
/// |u| <= u_bound, outputs y = (x1, x2, u).
inline ExampleSystem example_system(double x1_bound = 20.0, double x2_lo = -4.0,
                                    double x2_hi = 10.0, double u_bound = 6.0,
                                    double w_bound = 1.0,
                                    std::array<double, 2> K = {-0.2054, -0.7835},
                                    double L = 0.2054) {
  LinearPlant plant{(Eigen::MatrixXd(2, 2) << 1, 1, 0, 1).finished(),
                    (Eigen::MatrixXd(2, 1) << 0, 1).finished(),
                    (Eigen::MatrixXd(2, 1) << 0, 1).finished()};
  Eigen::MatrixXd C(3, 2);
  C << 1, 0, 0, 1, 0, 0;
  Eigen::MatrixXd D(3, 1);
  D << 0, 0, 1;
  OutputMap out{C, D,
                HPolytope::box(Eigen::Vector3d(-x1_bound, x2_lo, -u_bound),
                               Eigen::Vector3d(x1_bound, x2_hi, u_bound))};
  NominalGain gain{(Eigen::MatrixXd(1, 2) << K[0], K[1]).finished(),
                   Eigen::MatrixXd::Constant(1, 1, L)};
  return {plant, out, gain,
          HPolytope::box(Eigen::VectorXd::Constant(1, -w_bound),
                         Eigen::VectorXd::Constant(1, w_bound)),
          sine_disturbance};
}

// ---------------------------------------------------------------------------
// Configuration

struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::string governor = "moas";      // none | moas | grid
  std::string controller = "nominal";  // nominal | q-learning | koopman
  std::string distance_norm = "l1";    // l1 | linf
  int steps = 500;
  int reset_every = 20;
  std::array<double, 2> x0 = {14.0, 6.0};
  double reference = 0.0;

  double x1_bound = 20.0, x2_lower = -4.0, x2_upper = 10.0, u_bound = 6.0;
  double w_bound = 1.0;
  std::array<double, 2> gain_k = {-0.2054, -0.7835};
  double gain_l = 0.2054;

  double moas_epsilon = 0.01;
  int moas_t_cap = 500;
  double v_bound = 25.0;

  std::array<double, 3> grid_x1 = {-25, 25, 0.5};
  std::array<double, 3> grid_x2 = {-10, 15, 0.5};
  std::array<double, 3> grid_v = {-25, 25, 0.5};
  std::array<double, 3> grid_w = {-1, 1, 0.1};
  std::array<double, 3> action_grid = {-6, 6, 0.5};
  double seed_alpha = 0.75;
  double seed_inflation = 1.25;

  double q_gamma = 0.95, q_alpha = 0.5, q_epsilon = 0.1, q_penalty = 100.0;
  int q_t_max = 1;
  int q_steps = 20000;

  std::string koopman_observables = "sine";
  double koopman_delta = 1e3, koopman_lambda = 1.0;
  int koopman_steps = 20000;
  std::array<double, 4> koopman_state_weight = {1, 1, 0, 0};
  double koopman_action_weight = 10.0;
  int koopman_horizon = 50;
  bool koopman_infinite_horizon = true;

  int fig2_steps = 500;
  std::array<double, 2> fig2_ungoverned_x0 = {14.0, 6.0};
  std::array<double, 2> fig2_governed_x0 = {14.0, 5.0};

  std::string out_dir = ".";

  DistanceNorm norm() const {
    return distance_norm == "linf" ? DistanceNorm::Linf : DistanceNorm::L1;
  }
  GridSpec grid() const {
    auto ax = [](const std::array<double, 3>& a) { return Axis{a[0], a[1], a[2]}; };
    return {ax(grid_x1), ax(grid_x2), ax(grid_v), ax(grid_w)};
  }
  Axis actions() const { return {action_grid[0], action_grid[1], action_grid[2]}; }
  ExampleSystem system() const {
    return example_system(x1_bound, x2_lower, x2_upper, u_bound, w_bound, gain_k,
                          gain_l);
  }

  void validate() const {
    auto one_of = [](const std::string& v, std::initializer_list<const char*> ok,
                     const char* key) {
      for (const char* o : ok)
        if (v == o) return;
      fail(ErrorKind::Config, std::string("config key '") + key +
                                  "' has unsupported value '" + v + "'");
    };
    one_of(governor, {"none", "moas", "grid"}, "governor");
    one_of(controller, {"nominal", "q-learning", "koopman"}, "controller");
    one_of(distance_norm, {"l1", "linf"}, "distance_norm");
    if (steps < 1 || fig2_steps < 1 || q_steps < 1 || koopman_steps < 1 ||
        q_t_max < 1 || koopman_horizon < 1 || moas_t_cap < 1)
      fail(ErrorKind::Config, "step counts and horizons must be positive");
    if (!(x1_bound > 0 && x2_lower < x2_upper && u_bound > 0 && w_bound >= 0 &&
          v_bound > 0))
      fail(ErrorKind::Config, "constraint bounds are inconsistent");
  }
};

namespace detail {

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Config, std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Flat JSON object. Unknown keys are rejected; `seed` is required.
inline ScenarioConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  static const std::set<std::string> known = {
      "seed", "governor", "controller", "distance_norm", "steps", "reset_every",
      "x0", "reference", "x1_bound", "x2_lower", "x2_upper", "u_bound", "w_bound",
      "gain_k", "gain_l", "moas_epsilon", "moas_t_cap", "v_bound", "grid_x1",
      "grid_x2", "grid_v", "grid_w", "action_grid", "seed_alpha",
      "seed_inflation", "q_gamma", "q_alpha", "q_epsilon", "q_penalty", "q_t_max",
      "q_steps", "koopman_observables", "koopman_delta", "koopman_lambda",
      "koopman_steps", "koopman_state_weight", "koopman_action_weight",
      "koopman_horizon", "koopman_infinite_horizon", "fig2_steps",
      "fig2_ungoverned_x0", "fig2_governed_x0", "out_dir"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) fail(ErrorKind::Config, "unknown config key '" + k + "'");
  if (!j.contains("seed")) fail(ErrorKind::Config, "config key 'seed' is required");

  ScenarioConfig c;
  using detail::read_key;
  read_key(j, "seed", c.seed);
  read_key(j, "governor", c.governor);
  read_key(j, "controller", c.controller);
  read_key(j, "distance_norm", c.distance_norm);
  read_key(j, "steps", c.steps);
  read_key(j, "reset_every", c.reset_every);
  read_key(j, "x0", c.x0);
  read_key(j, "reference", c.reference);
  read_key(j, "x1_bound", c.x1_bound);
  read_key(j, "x2_lower", c.x2_lower);
  read_key(j, "x2_upper", c.x2_upper);
  read_key(j, "u_bound", c.u_bound);
  read_key(j, "w_bound", c.w_bound);
  read_key(j, "gain_k", c.gain_k);
  read_key(j, "gain_l", c.gain_l);
  read_key(j, "moas_epsilon", c.moas_epsilon);
  read_key(j, "moas_t_cap", c.moas_t_cap);
  read_key(j, "v_bound", c.v_bound);
  read_key(j, "grid_x1", c.grid_x1);
  read_key(j, "grid_x2", c.grid_x2);
  read_key(j, "grid_v", c.grid_v);
  read_key(j, "grid_w", c.grid_w);
  read_key(j, "action_grid", c.action_grid);
  read_key(j, "seed_alpha", c.seed_alpha);
  read_key(j, "seed_inflation", c.seed_inflation);
  read_key(j, "q_gamma", c.q_gamma);
  read_key(j, "q_alpha", c.q_alpha);
  read_key(j, "q_epsilon", c.q_epsilon);
  read_key(j, "q_penalty", c.q_penalty);
  read_key(j, "q_t_max", c.q_t_max);
  read_key(j, "q_steps", c.q_steps);
  read_key(j, "koopman_observables", c.koopman_observables);
  read_key(j, "koopman_delta", c.koopman_delta);
  read_key(j, "koopman_lambda", c.koopman_lambda);
  read_key(j, "koopman_steps", c.koopman_steps);
  read_key(j, "koopman_state_weight", c.koopman_state_weight);
  read_key(j, "koopman_action_weight", c.koopman_action_weight);
  read_key(j, "koopman_horizon", c.koopman_horizon);
  read_key(j, "koopman_infinite_horizon", c.koopman_infinite_horizon);
  read_key(j, "fig2_steps", c.fig2_steps);
  read_key(j, "fig2_ungoverned_x0", c.fig2_ungoverned_x0);
  read_key(j, "fig2_governed_x0", c.fig2_governed_x0);
  read_key(j, "out_dir", c.out_dir);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Safe sets built once per scenario

/// Offline artifacts. Oracles keep pointers into this object, so it is
/// handed around by shared_ptr and never moved.
struct Workbench {
  ScenarioConfig cfg;
  ExampleSystem sys;
  ClosedLoop cl;
  std::optional<Moas> moas;
  std::optional<DiscreteSafeSet> dss;
  std::optional<LinearOracle> linear;
  std::optional<DiscreteOracle> discrete;

  Workbench(const ScenarioConfig& c)
      : cfg(c), sys(c.system()), cl(closed_loop(sys.plant, sys.out, sys.gain)) {}

  const Moas& ensure_moas() {
    if (!moas) {
      MoasOptions opt;
      opt.epsilon = cfg.moas_epsilon;
      opt.t_cap = cfg.moas_t_cap;
      opt.v_bounds = HPolytope::box(Eigen::VectorXd::Constant(1, -cfg.v_bound),
                                    Eigen::VectorXd::Constant(1, cfg.v_bound));
      moas = build_moas(cl, sys.out, sys.w_set, opt);
      linear.emplace(*moas, sys.plant, sys.out, sys.gain);
    }
    return *moas;
  }

  const DiscreteSafeSet& ensure_grid() {
    if (!dss) {
      const GridSpec g = cfg.grid();
      const TransitionTable tt = discretize(cl, g);
      const auto seed = build_seed(cl, sys.out, g, cfg.seed_alpha, tt,
                                   cfg.seed_inflation);
      dss = compute_safe_set(seed, tt, cl, sys.out, g);
      discrete.emplace(make_oracle(*dss, cl, sys.out, cfg.actions()));
    }
    return *dss;
  }
};

inline std::shared_ptr<Workbench> make_workbench(const ScenarioConfig& cfg) {
  return std::make_shared<Workbench>(cfg);
}

using GovernFn = std::function<GovernorOutcome(const Eigen::VectorXd&,
                                               const Eigen::VectorXd&,
                                               GovernorState&)>;

struct GovernorHandle {
  GovernFn govern;  // empty for ungoverned runs
  std::function<bool(const Eigen::VectorXd&)> proj_member;
};

inline GovernorHandle make_governor(Workbench& wb, const std::string& kind) {
  const Distance dist{wb.cfg.norm()};
  if (kind == "none")
    return {{}, [](const Eigen::VectorXd&) { return true; }};
  if (kind == "moas") {
    wb.ensure_moas();
    const LinearOracle* o = &*wb.linear;
    return {[o, dist](const Eigen::VectorXd& x, const Eigen::VectorXd& u1,
                      GovernorState& gs) { return govern(x, u1, gs, *o, dist); },
            [o](const Eigen::VectorXd& x) { return o->proj_member(x); }};
  }
  if (kind == "grid") {
    wb.ensure_grid();
    const DiscreteOracle* o = &*wb.discrete;
    return {[o, dist](const Eigen::VectorXd& x, const Eigen::VectorXd& u1,
                      GovernorState& gs) { return govern(x, u1, gs, *o, dist); },
            [o](const Eigen::VectorXd& x) { return o->proj_member(x); }};
  }
  fail(ErrorKind::Config, "unknown governor '" + kind + "'");
}

/// Uniform draw from the box, rejected until `member` accepts it.
inline Eigen::VectorXd sample_reset(const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi,
                                    const std::function<bool(const Eigen::VectorXd&)>& member,
                                    Rng& rng, int max_tries = 1000000) {
  Eigen::VectorXd x(lo.size());
  for (int k = 0; k < max_tries; ++k) {
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      x(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng);
    if (member(x)) return x;
  }
  fail(ErrorKind::Numerical, "sample_reset: no accepted sample");
}

// ---------------------------------------------------------------------------
// Plant in the loop

/// The true plant driven by the state-dependent disturbance, optionally
/// supervised, recording every step.
class GovernedPlant {
 public:
  GovernedPlant(const ExampleSystem& sys, GovernorHandle gov, Eigen::VectorXd x0,
                double r_weight = 10.0)
      : sys_(&sys), gov_(std::move(gov)), x_(std::move(x0)), r_weight_(r_weight) {}

  const Eigen::VectorXd& state() const { return x_; }
  const Trajectory& trajectory() const { return traj_; }
  Trajectory take_trajectory() { return std::move(traj_); }

  /// Applies the (possibly adjusted) action. Governor errors are rethrown
  /// with the failing step index.
  const StepRecord& step(const Eigen::VectorXd& u1) {
    StepRecord r;
    r.t = static_cast<int>(traj_.size());
    r.x = x_;
    r.u1 = u1;
    if (gov_.govern) {
      GovernorOutcome o;
      try {
        o = gov_.govern(x_, u1, gs_);
      } catch (const Error& e) {
        fail(e.kind(), "step " + std::to_string(r.t) + ": " + e.what());
      }
      r.u = o.u;
      r.branch = to_string(o.branch);
      if (gs_.v_hat) r.v_hat = (*gs_.v_hat)(0);
    } else {
      r.u = u1;
    }
    r.w = sys_->disturbance(x_);
    r.cost = stage_cost(x_, r.u, r_weight_);
    r.violated = !sys_->out.admissible(x_, r.u);
    x_ = sys_->plant.step(x_, r.u, Eigen::VectorXd::Constant(1, r.w));
    traj_.push_back(std::move(r));
    return traj_.back();
  }

  /// Uniform restart inside the state projection of the safe set.
  void reset(Rng& rng) {
    const auto& Y = sys_->out.constraint_set;
    Eigen::VectorXd lo(2), hi(2);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
      e(i) = 1.0;
      hi(i) = support(Y, e);
      lo(i) = -support(Y, -e);
    }
    x_ = sample_reset(lo, hi, gov_.proj_member, rng);
    gs_ = {};
  }

 private:
  const ExampleSystem* sys_;
  GovernorHandle gov_;
  GovernorState gs_;
  Eigen::VectorXd x_;
  double r_weight_;
  Trajectory traj_;
};

static_assert(KoopmanEnvironment<GovernedPlant, Rng>);

/// Gridded plant for tabular learning: the disturbance is rounded to the
/// disturbance grid and the successor to the state grid, so every visited
/// state is a grid point and the grid governor's guarantee applies exactly.
/// Reward is the negative stage cost of the applied action.
class GridQEnvironment {
 public:
  GridQEnvironment(std::shared_ptr<Workbench> wb, int reset_every, Rng& rng)
      : wb_(std::move(wb)), reset_every_(reset_every), rng_(&rng) {
    wb_->ensure_grid();
    oracle_ = &*wb_->discrete;
    grid_ = wb_->dss->grid();
    reset();
  }

  int state() const { return xi_; }
  int num_states() const { return grid_.nx(); }
  int num_actions() const { return static_cast<int>(oracle_->actions().size()); }
  const Trajectory& trajectory() const { return traj_; }

  QStep step(int a) {
    const Eigen::VectorXd x = grid_.x_point(xi_);
    const Eigen::VectorXd u1 = oracle_->actions()[a];
    StepRecord r;
    r.t = static_cast<int>(traj_.size());
    r.x = x;
    r.u1 = u1;
    GovernorOutcome o;
    try {
      o = govern(x, u1, gs_, *oracle_, Distance{wb_->cfg.norm()});
    } catch (const Error& e) {
      fail(e.kind(), "step " + std::to_string(r.t) + ": " + e.what());
    }
    r.u = o.u;
    r.branch = to_string(o.branch);
    if (gs_.v_hat) r.v_hat = (*gs_.v_hat)(0);
    const auto wi = grid_.w.nearest(wb_->sys.disturbance(x));
    if (!wi) fail(ErrorKind::Numerical, "disturbance outside its grid");
    r.w = grid_.w.value(*wi);
    r.cost = stage_cost(x, r.u);
    r.violated = !wb_->sys.out.admissible(x, r.u);
    const auto next = grid_.snap(
        wb_->sys.plant.step(x, r.u, Eigen::VectorXd::Constant(1, r.w)));
    if (!next) fail(ErrorKind::Numerical, "step " + std::to_string(r.t) + ": left the grid");
    QStep out{-r.cost, distance(u1, r.u, wb_->cfg.norm()), *next, r.violated};
    traj_.push_back(std::move(r));
    xi_ = *next;
    if (reset_every_ > 0 && static_cast<int>(traj_.size()) % reset_every_ == 0)
      reset();
    return out;
  }

 private:
  void reset() {
    std::uniform_int_distribution<int> pick(0, grid_.nx() - 1);
    for (int k = 0; k < 1000000; ++k) {
      const int xi = pick(*rng_);
      if (wb_->dss->proj_member(xi)) {
        xi_ = xi;
        gs_ = {};
        return;
      }
    }
    fail(ErrorKind::Numerical, "reset: safe set projection looks empty");
  }

  std::shared_ptr<Workbench> wb_;
  const DiscreteOracle* oracle_ = nullptr;
  GridSpec grid_;
  int reset_every_;
  Rng* rng_;
  int xi_ = 0;
  GovernorState gs_;
  Trajectory traj_;
};

static_assert(QEnvironment<GridQEnvironment>);

// ---------------------------------------------------------------------------
// Scenario runners

using Controller = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Controller nominal_controller(const ExampleSystem& sys, double reference) {
  const NominalGain g = sys.gain;
  return [g, reference](const Eigen::VectorXd& x) {
    return g.action(x, Eigen::VectorXd::Constant(1, reference));
  };
}

inline Trajectory run_closed_loop(Workbench& wb, const std::string& governor,
                                  const Controller& ctrl, Eigen::VectorXd x0,
                                  int steps) {
  GovernedPlant plant(wb.sys, make_governor(wb, governor), std::move(x0));
  for (int t = 0; t < steps; ++t) plant.step(ctrl(plant.state()));
  return plant.take_trajectory();
}

inline KoopmanControlOptions koopman_options(const ScenarioConfig& c, int lifted_dim) {
  if (lifted_dim > static_cast<int>(c.koopman_state_weight.size()))
    fail(ErrorKind::Config, "koopman_state_weight is shorter than the lifting");
  KoopmanControlOptions o;
  o.q_z = Eigen::MatrixXd::Zero(lifted_dim, lifted_dim);
  for (int i = 0; i < lifted_dim; ++i)
    o.q_z(i, i) = c.koopman_state_weight[i];
  o.r_u = Eigen::MatrixXd::Constant(1, 1, c.koopman_action_weight);
  o.q_f = o.q_z;
  o.horizon = c.koopman_horizon;
  o.infinite_horizon = c.koopman_infinite_horizon;
  return o;
}

struct KoopmanLearning {
  KoopmanRun run;
  Trajectory trajectory;
  KoopmanControlOptions options;
};

/// Learning run starting from a uniform draw inside the safe projection.
inline KoopmanLearning learn_koopman(Workbench& wb) {
  const auto& c = wb.cfg;
  Rng rng(c.seed);
  ObservableMap obs = observables_by_name(c.koopman_observables, 2);
  auto [A0, B0] = embed_linear_model(wb.sys.plant.A, wb.sys.plant.B, obs.dim);
  KoopmanControlOptions opt = koopman_options(c, obs.dim);
  KoopmanModel km = make_koopman(std::move(obs), A0, B0, c.koopman_delta,
                                 c.koopman_lambda);
  GovernedPlant plant(wb.sys, make_governor(wb, c.governor), Eigen::Vector2d::Zero());
  plant.reset(rng);
  KoopmanRun run = run_safe_koopman(plant, std::move(km), opt, c.koopman_steps,
                                    c.reset_every, rng);
  return {std::move(run), plant.take_trajectory(), std::move(opt)};
}

struct QLearning {
  QRun run;
  Trajectory trajectory;
};

inline QLearning learn_q(const std::shared_ptr<Workbench>& wb) {
  const auto& c = wb->cfg;
  Rng rng(c.seed);
  GridQEnvironment env(wb, c.reset_every, rng);
  QTable q(env.num_states(), env.num_actions(), c.q_gamma, c.q_alpha, c.q_epsilon,
           c.q_penalty);
  const std::int64_t batches = c.q_steps / c.q_t_max;
  QRun run = run_safe_q(env, std::move(q), c.q_t_max, batches, rng, false);
  return {std::move(run), env.trajectory()};
}

inline Controller koopman_controller(KoopmanModel km, KoopmanControlOptions opt) {
  return [km = std::move(km), opt = std::move(opt)](const Eigen::VectorXd& x) {
    return koopman_control(km, x, opt).u;
  };
}

inline Controller greedy_q_controller(QTable q, const DiscreteOracle& oracle) {
  const GridSpec g = oracle.safe_set().grid();
  std::vector<Eigen::VectorXd> actions(oracle.actions().begin(), oracle.actions().end());
  return [q = std::move(q), g, actions](const Eigen::VectorXd& x) {
    const auto xi = g.snap(x);
    if (!xi) fail(ErrorKind::Numerical, "greedy policy: state outside the grid");
    return actions[q.argmax(*xi)];
  };
}

/// Runs the configured controller (learning it first if needed) from x0.
inline Trajectory simulate(const std::shared_ptr<Workbench>& wb) {
  const auto& c = wb->cfg;
  const Eigen::Vector2d x0(c.x0[0], c.x0[1]);
  Controller ctrl;
  if (c.controller == "nominal") {
    ctrl = nominal_controller(wb->sys, c.reference);
  } else if (c.controller == "koopman") {
    auto learned = learn_koopman(*wb);
    ctrl = koopman_controller(std::move(learned.run.model), learned.options);
  } else {
    auto learned = learn_q(wb);
    wb->ensure_grid();
    ctrl = greedy_q_controller(std::move(learned.run.table), *wb->discrete);
  }
  return run_closed_loop(*wb, c.governor, ctrl, x0, c.steps);
}

/// Grid points of proj(Π) and of the continuous projection, with their
/// Jaccard overlap.
struct SetComparison {
  std::vector<int> grid_points;
  std::vector<int> moas_points;
  double jaccard = 0.0;
};

inline SetComparison compare_projections(const DiscreteSafeSet& dss, const Moas& moas) {
  SetComparison out;
  std::int64_t both = 0;
  for (int xi = 0; xi < dss.grid().nx(); ++xi) {
    const bool a = dss.proj_member(xi);
    const bool b = moas.proj_x.contains(dss.grid().x_point(xi));
    if (a) out.grid_points.push_back(xi);
    if (b) out.moas_points.push_back(xi);
    both += a && b;
  }
  const auto uni = static_cast<std::int64_t>(out.grid_points.size() +
                                             out.moas_points.size()) - both;
  out.jaccard = uni > 0 ? static_cast<double>(both) / static_cast<double>(uni) : 1.0;
  return out;
}

}  // namespace actgov
