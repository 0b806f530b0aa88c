#pragma once

// Learning loops that run underneath an action governor: tabular Q-learning
// with a penalty on governor adjustments, and online identification of a
// lifted linear model by recursive least squares with LQR control on top.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "actgov/control_linalg.hpp"
#include "actgov/error.hpp"

namespace actgov {

// ---------------------------------------------------------------------------
// Tabular Q-learning

struct QTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;  // row-major (state, action)
  double gamma = 0.95;
  double alpha = 0.5;
  double epsilon = 0.1;
  double penalty_m = 100.0;

  QTable() = default;
  QTable(int n_states, int n_actions, double gamma_, double alpha_,
         double epsilon_, double penalty_m_)
      : num_states(n_states), num_actions(n_actions),
        values(static_cast<std::size_t>(n_states) * n_actions, 0.0),
        gamma(gamma_), alpha(alpha_), epsilon(epsilon_), penalty_m(penalty_m_) {
    validate();
  }

  void validate() const {
    if (num_states <= 0 || num_actions <= 0)
      fail(ErrorKind::Argument, "QTable: needs at least one state and action");
    if (values.size() != static_cast<std::size_t>(num_states) * num_actions)
      fail(ErrorKind::Argument, "QTable: value storage has the wrong size");
    if (!(gamma > 0.0 && gamma < 1.0))
      fail(ErrorKind::Argument, "QTable: gamma must lie in (0, 1)");
    if (!(alpha >= 0.0 && alpha <= 1.0))
      fail(ErrorKind::Argument, "QTable: alpha must lie in [0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      fail(ErrorKind::Argument, "QTable: epsilon must lie in [0, 1]");
    if (!(penalty_m >= 0.0))
      fail(ErrorKind::Argument, "QTable: penalty must be nonnegative");
    for (double v : values)
      if (!std::isfinite(v)) fail(ErrorKind::Numerical, "QTable: non-finite value");
  }

  double& at(int s, int a) {
    return values[static_cast<std::size_t>(s) * num_actions + a];
  }
  double at(int s, int a) const {
    return values[static_cast<std::size_t>(s) * num_actions + a];
  }

  /// Greedy action; ties go to the smaller index.
  int argmax(int s) const {
    int best = 0;
    for (int a = 1; a < num_actions; ++a)
      if (at(s, a) > at(s, best)) best = a;
    return best;
  }
  double max(int s) const { return at(s, argmax(s)); }
};

template <class Rng>
int epsilon_greedy(const QTable& q, int s, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (q.epsilon > 0.0 && coin(rng) < q.epsilon) {
    std::uniform_int_distribution<int> pick(0, q.num_actions - 1);
    return pick(rng);
  }
  return q.argmax(s);
}

/// Reward of the applied action minus a penalty on how far the governor
/// moved the proposal.
inline double modified_reward(double r_applied, double adjustment,
                              double penalty_m) {
  return r_applied - penalty_m * adjustment;
}

inline double q_target(const QTable& q, int s, int a, double r_tilde,
                       int s_next) {
  return (1.0 - q.alpha) * q.at(s, a) +
         q.alpha * (r_tilde + q.gamma * q.max(s_next));
}

struct ReplayEntry {
  int state = 0;
  int action = 0;
  double target = 0.0;
};

/// Targets collected within one batch; applied and cleared together.
class ReplayBuffer {
 public:
  void push(ReplayEntry e) { entries_.push_back(e); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void apply(QTable& q) {
    for (const auto& e : entries_) q.at(e.state, e.action) = e.target;
    entries_.clear();
  }

 private:
  std::vector<ReplayEntry> entries_;
};

/// Result of one environment step. `adjustment` is the governor's distance
/// between the proposed and the applied action.
struct QStep {
  double reward = 0.0;
  double adjustment = 0.0;
  int next_state = 0;
  bool violated = false;
};

template <class E>
concept QEnvironment = requires(E& env, const E& cenv, int a) {
  { cenv.state() } -> std::convertible_to<int>;
  { cenv.num_states() } -> std::convertible_to<int>;
  { cenv.num_actions() } -> std::convertible_to<int>;
  { env.step(a) } -> std::same_as<QStep>;
};

struct QTransition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  double r_tilde = 0.0;
  int next_state = 0;
  bool violated = false;
};

struct QRun {
  QTable table;
  std::vector<QTransition> log;
  std::int64_t violations = 0;
  std::int64_t adjusted_steps = 0;
};

/// select -> govern/apply (inside env.step) -> penalized target -> buffer,
/// with the buffer flushed into the table every `t_max` steps.
template <QEnvironment Env, class Rng>
QRun run_safe_q(Env& env, QTable q, int t_max, std::int64_t batches, Rng& rng,
                bool keep_log = true) {
  q.validate();
  if (t_max < 1 || batches < 0)
    fail(ErrorKind::Argument, "run_safe_q: need t_max >= 1 and batches >= 0");
  if (env.num_states() != q.num_states || env.num_actions() != q.num_actions)
    fail(ErrorKind::Argument, "run_safe_q: table shape differs from environment");
  QRun run;
  ReplayBuffer buffer;
  for (std::int64_t b = 0; b < batches; ++b) {
    for (int t = 0; t < t_max; ++t) {
      const int s = env.state();
      const int a = epsilon_greedy(q, s, rng);
      const QStep st = env.step(a);
      const double rt = modified_reward(st.reward, st.adjustment, q.penalty_m);
      buffer.push({s, a, q_target(q, s, a, rt, st.next_state)});
      run.violations += st.violated;
      run.adjusted_steps += st.adjustment > 0.0;
      if (keep_log)
        run.log.push_back({s, a, st.reward, rt, st.next_state, st.violated});
    }
    buffer.apply(q);
  }
  run.table = std::move(q);
  return run;
}

inline void to_json(nlohmann::json& j, const QTable& q) {
  j = nlohmann::json{{"num_states", q.num_states}, {"num_actions", q.num_actions},
                     {"gamma", q.gamma},           {"alpha", q.alpha},
                     {"epsilon", q.epsilon},       {"penalty_m", q.penalty_m},
                     {"values", q.values}};
}

// ---------------------------------------------------------------------------
// Lifted linear models

/// Lifting z = g(x). The first `state_dim` coordinates are x itself.
struct ObservableMap {
  std::string name;
  int state_dim = 0;
  int dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    if (x.size() != state_dim)
      fail(ErrorKind::Argument, "ObservableMap " + name + ": wrong state size");
    Eigen::VectorXd z = fn(x);
    if (z.size() != dim || !z.allFinite())
      fail(ErrorKind::Numerical, "ObservableMap " + name + ": bad lifted value");
    return z;
  }
};

inline ObservableMap identity_observables(int n) {
  return {"identity", n, n, [](const Eigen::VectorXd& x) { return x; }};
}

/// [x1, x2, sin(10 x1), sin(10 x1 + 10 x2)]: the state plus the disturbance
/// at this step and the next nominal one.
inline ObservableMap sine_observables() {
  return {"sine", 2, 4, [](const Eigen::VectorXd& x) {
            Eigen::VectorXd z(4);
            z << x(0), x(1), std::sin(10.0 * x(0)),
                std::sin(10.0 * x(0) + 10.0 * x(1));
            return z;
          }};
}

inline ObservableMap observables_by_name(const std::string& name, int state_dim) {
  if (name == "identity") return identity_observables(state_dim);
  if (name == "sine" && state_dim == 2) return sine_observables();
  fail(ErrorKind::Config, "unknown observables '" + name + "'");
}

struct KoopmanModel {
  Eigen::MatrixXd A;      // n_z x n_z
  Eigen::MatrixXd B;      // n_z x m
  Eigen::MatrixXd Gamma;  // (n_z + m) square, covariance-like gain
  double lambda = 1.0;    // forgetting factor
  ObservableMap observables;

  void validate() const {
    const auto nz = A.rows();
    if (A.cols() != nz || B.rows() != nz || nz != observables.dim)
      fail(ErrorKind::Argument, "KoopmanModel: A/B/observable sizes differ");
    const auto p = nz + B.cols();
    if (Gamma.rows() != p || Gamma.cols() != p)
      fail(ErrorKind::Argument, "KoopmanModel: Gamma has the wrong size");
    if (!(lambda > 0.0 && lambda <= 1.0))
      fail(ErrorKind::Argument, "KoopmanModel: lambda must lie in (0, 1]");
  }

  Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return A * observables(x) + B * u;
  }
};

/// Model with Gamma = delta * I.
inline KoopmanModel make_koopman(ObservableMap obs, Eigen::MatrixXd A0,
                                 Eigen::MatrixXd B0, double delta = 1e3,
                                 double lambda = 1.0) {
  if (!(delta > 0.0)) fail(ErrorKind::Argument, "make_koopman: delta must be > 0");
  const auto p = A0.rows() + B0.cols();
  KoopmanModel km{std::move(A0), std::move(B0),
                  delta * Eigen::MatrixXd::Identity(p, p), lambda, std::move(obs)};
  km.validate();
  return km;
}

/// A0 = blkdiag(A, 0), B0 = [B; 0]: the known linear part of the plant with
/// the extra observables left unmodeled.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> embed_linear_model(
    const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int lifted_dim) {
  const auto n = A.rows();
  if (lifted_dim < n) fail(ErrorKind::Argument, "embed_linear_model: lifted_dim < n");
  Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(lifted_dim, lifted_dim);
  Eigen::MatrixXd B0 = Eigen::MatrixXd::Zero(lifted_dim, B.cols());
  A0.topLeftCorner(n, n) = A;
  B0.topRows(n) = B;
  return {A0, B0};
}

enum class FitMode { PseudoInverse, NormalEquations };

struct FitResult {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double residual = 0.0;  // Frobenius norm of Z+ - A Z - B U
};

/// min ||Z+ - A Z - B U||_F over (A, B). Columns are samples. The default
/// mode returns the minimum-norm solution even on rank-deficient data; the
/// normal-equation mode refuses such data unless a ridge term is given.
inline FitResult batch_fit(const Eigen::MatrixXd& z_plus, const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& u,
                           FitMode mode = FitMode::PseudoInverse,
                           double ridge = 0.0) {
  const auto N = z.cols();
  if (z_plus.cols() != N || u.cols() != N || z_plus.rows() != z.rows())
    fail(ErrorKind::Argument, "batch_fit: inconsistent data dimensions");
  if (N == 0) fail(ErrorKind::Argument, "batch_fit: no samples");
  const auto nz = z.rows();
  const auto m = u.rows();
  Eigen::MatrixXd phi(nz + m, N);
  phi << z, u;

  Eigen::MatrixXd theta;  // [A B]
  if (mode == FitMode::PseudoInverse && ridge == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi.transpose());
    theta = cod.solve(z_plus.transpose()).transpose();
  } else {
    Eigen::MatrixXd G = phi * phi.transpose();
    if (ridge > 0.0) G += ridge * Eigen::MatrixXd::Identity(nz + m, nz + m);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible())
      fail(ErrorKind::Singularity,
           "batch_fit: stacked regressors are rank deficient");
    theta = lu.solve(phi * z_plus.transpose()).transpose();
  }
  FitResult r{theta.leftCols(nz), theta.rightCols(m), 0.0};
  r.residual = (z_plus - r.A * z - r.B * u).norm();
  return r;
}

/// One recursive least-squares step on the sample (g(x_prev), u_prev) ->
/// g(x_now), with exponential forgetting.
inline KoopmanModel rls_update(KoopmanModel km, const Eigen::VectorXd& x_prev,
                               const Eigen::VectorXd& u_prev,
                               const Eigen::VectorXd& x_now) {
  const auto nz = km.A.rows();
  const auto m = km.B.cols();
  if (u_prev.size() != m) fail(ErrorKind::Argument, "rls_update: wrong action size");
  Eigen::VectorXd phi(nz + m);
  phi << km.observables(x_prev), u_prev;
  const Eigen::RowVectorXd phiG = phi.transpose() * km.Gamma;
  const double den = phiG.dot(phi) + km.lambda;
  if (!(std::abs(den) >= 1e-14))
    fail(ErrorKind::Numerical, "rls_update: gain denominator vanished");
  const Eigen::RowVectorXd gain = phiG / den;
  const Eigen::VectorXd err =
      km.observables(x_now) - km.A * phi.head(nz) - km.B * u_prev;
  const Eigen::MatrixXd correction = err * gain;
  km.A += correction.leftCols(nz);
  km.B += correction.rightCols(m);
  const auto p = nz + m;
  Eigen::MatrixXd G =
      km.Gamma * (Eigen::MatrixXd::Identity(p, p) - phi * gain) / km.lambda;
  km.Gamma = 0.5 * (G + G.transpose());
  return km;
}

struct KoopmanControlOptions {
  Eigen::MatrixXd q_z;
  Eigen::MatrixXd r_u;
  Eigen::MatrixXd q_f;  // terminal weight for the finite-horizon mode
  int horizon = 50;
  bool infinite_horizon = true;
  int dare_max_sweeps = 5000;
};

struct KoopmanAction {
  Eigen::VectorXd u;
  bool used_fallback = false;
};

/// First action of the LQR problem on the lifted model from z = g(x). In
/// infinite-horizon mode a Riccati failure falls back to the finite horizon.
inline KoopmanAction koopman_control(const KoopmanModel& km, const Eigen::VectorXd& x,
                                     const KoopmanControlOptions& opt) {
  const Eigen::VectorXd z = km.observables(x);
  if (opt.infinite_horizon) {
    try {
      const auto sol = dare_solve(km.A, km.B, opt.q_z, opt.r_u, 1e-9,
                                  opt.dare_max_sweeps);
      return {sol.K * z, false};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoStabilizingSolution) throw;
    }
  }
  const Eigen::MatrixXd K =
      riccati_finite(km.A, km.B, opt.q_z, opt.r_u, opt.q_f, opt.horizon);
  if (!K.allFinite())
    fail(ErrorKind::Numerical, "koopman_control: non-finite feedback gain");
  return {K * z, opt.infinite_horizon};
}

template <class E, class Rng>
concept KoopmanEnvironment =
    requires(E& env, const E& cenv, const Eigen::VectorXd& u, Rng& rng) {
      { cenv.state() } -> std::convertible_to<Eigen::VectorXd>;
      env.step(u);
      env.reset(rng);
    };

struct KoopmanRun {
  KoopmanModel model;
  std::int64_t fallbacks = 0;
  std::int64_t resets = 0;
};

/// control -> govern/apply (inside env.step) -> observe -> RLS on the
/// proposed action. `reset_every` <= 0 disables resets.
template <class Env, class Rng>
  requires KoopmanEnvironment<Env, Rng>
KoopmanRun run_safe_koopman(Env& env, KoopmanModel km,
                            const KoopmanControlOptions& opt, std::int64_t steps,
                            std::int64_t reset_every, Rng& rng) {
  km.validate();
  KoopmanRun run{std::move(km)};
  for (std::int64_t t = 0; t < steps; ++t) {
    const Eigen::VectorXd x = env.state();
    const KoopmanAction act = koopman_control(run.model, x, opt);
    run.fallbacks += act.used_fallback;
    env.step(act.u);
    run.model = rls_update(std::move(run.model), x, act.u, env.state());
    if (reset_every > 0 && (t + 1) % reset_every == 0 && t + 1 < steps) {
      env.reset(rng);
      ++run.resets;
    }
  }
  return run;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void to_json(nlohmann::json& j, const KoopmanModel& km) {
  j = nlohmann::json{{"observables", km.observables.name},
                     {"A", matrix_to_json(km.A)},
                     {"B", matrix_to_json(km.B)},
                     {"Gamma", matrix_to_json(km.Gamma)},
                     {"lambda", km.lambda}};
}

}  // namespace actgov
