// Command-line front end: builds safe sets, runs governed scenarios and the
// learning loops, and writes CSV/JSON artifacts.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "actgov/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace actgov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

ScenarioConfig load_config(const Options& o) {
  std::ifstream in(o.config);
  if (!in) fail(ErrorKind::Config, "cannot open config file '" + o.config + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c = parse_config(j);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  return c;
}

fs::path out_path(const ScenarioConfig& c, const std::string& name) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + c.out_dir + "'");
  return fs::path(c.out_dir) / name;
}

std::ofstream open_out(const ScenarioConfig& c, const std::string& name) {
  const fs::path p = out_path(c, name);
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  return os;
}

void write_json(const ScenarioConfig& c, const std::string& name, const json& j) {
  auto os = open_out(c, name);
  os << j.dump(2) << '\n';
}

void write_csv(const ScenarioConfig& c, const std::string& name, const Trajectory& t) {
  auto os = open_out(c, name);
  write_trajectory_csv(os, t);
}

json moas_json(const Moas& m) {
  return {{"t_star", m.t_star},
          {"epsilon", m.epsilon},
          {"set_xv", m.set_xv},
          {"proj_x", m.proj_x},
          {"proj_x_shrunk", m.proj_x_shrunk}};
}

json grid_points(const GridSpec& g, const std::vector<int>& idx) {
  json pts = json::array();
  for (int xi : idx) {
    const auto p = g.x_point(xi);
    pts.push_back({p(0), p(1)});
  }
  return pts;
}

int cmd_moas(const ScenarioConfig& c) {
  Workbench wb(c);
  write_json(c, "moas.json", moas_json(wb.ensure_moas()));
  return kExitOk;
}

int cmd_discrete(const ScenarioConfig& c) {
  Workbench wb(c);
  const DiscreteSafeSet& d = wb.ensure_grid();
  const GridSpec& g = d.grid();
  {
    auto os = open_out(c, "safe_set.csv");
    os << "x1,x2,v,class\n";
    for (int xi = 0; xi < g.nx(); ++xi) {
      const auto p = g.x_point(xi);
      for (int vi = 0; vi < g.nv(); ++vi)
        os << format_number(p(0)) << ',' << format_number(p(1)) << ','
           << format_number(g.v.value(vi)) << ','
           << to_string(d.cls(g.pair_index(xi, vi))) << '\n';
    }
  }
  json sweeps = json::array();
  for (const auto& s : d.sweeps())
    sweeps.push_back({{"safe", s.safe}, {"unsafe", s.minus}, {"remain", s.remain}});
  write_json(c, "safe_set_summary.json",
             {{"pairs", g.num_pairs()},
              {"seed", d.seed_size()},
              {"safe", d.count(PairClass::SafePlus)},
              {"unsafe", d.count(PairClass::Minus)},
              {"remain", d.count(PairClass::Remain)},
              {"visits", d.visits()},
              {"sweeps", sweeps}});
  return kExitOk;
}

int cmd_simulate(const ScenarioConfig& c) {
  auto wb = make_workbench(c);
  write_csv(c, "trajectory.csv", simulate(wb));
  return kExitOk;
}

int cmd_learn_q(const ScenarioConfig& c) {
  auto wb = make_workbench(c);
  QLearning q = learn_q(wb);
  write_csv(c, "learn_q.csv", q.trajectory);
  json table = q.run.table;
  table["violations"] = q.run.violations;
  table["adjusted_steps"] = q.run.adjusted_steps;
  write_json(c, "q_table.json", table);
  return kExitOk;
}

int cmd_learn_koopman(const ScenarioConfig& c) {
  Workbench wb(c);
  KoopmanLearning k = learn_koopman(wb);
  write_csv(c, "learn_koopman.csv", k.trajectory);
  json model = k.run.model;
  model["fallbacks"] = k.run.fallbacks;
  model["resets"] = k.run.resets;
  write_json(c, "koopman_model.json", model);
  auto os = open_out(c, "koopman_cost.csv");
  write_cost_csv(os, average_cost(k.trajectory));
  return kExitOk;
}

int cmd_reproduce(const ScenarioConfig& c) {
  ScenarioConfig kc = c;
  kc.governor = "moas";
  auto wb = make_workbench(kc);
  const Controller nominal = nominal_controller(wb->sys, 0.0);
  const Eigen::Vector2d x_ung(c.fig2_ungoverned_x0[0], c.fig2_ungoverned_x0[1]);
  const Eigen::Vector2d x_gov(c.fig2_governed_x0[0], c.fig2_governed_x0[1]);

  write_csv(c, "fig2_ungoverned.csv",
            run_closed_loop(*wb, "none", nominal, x_ung, c.fig2_steps));
  write_csv(c, "fig2_governed.csv",
            run_closed_loop(*wb, "moas", nominal, x_gov, c.fig2_steps));

  KoopmanLearning k = learn_koopman(*wb);
  write_csv(c, "fig2_learned.csv",
            run_closed_loop(*wb, "moas",
                            koopman_controller(k.run.model, k.options), x_gov,
                            c.fig2_steps));
  {
    auto os = open_out(c, "fig4_cost.csv");
    write_cost_csv(os, average_cost(k.trajectory));
  }

  const DiscreteSafeSet& d = wb->ensure_grid();
  const SetComparison cmp = compare_projections(d, *wb->moas);
  std::vector<int> seed_x;
  for (int xi = 0; xi < d.grid().nx(); ++xi)
    for (int vi = 0; vi < d.grid().nv(); ++vi)
      if (d.in_seed(d.grid().pair_index(xi, vi))) {
        seed_x.push_back(xi);
        break;
      }
  write_json(c, "fig3_sets.json",
             {{"moas", moas_json(*wb->moas)},
              {"grid_safe_projection", grid_points(d.grid(), cmp.grid_points)},
              {"grid_seed_projection", grid_points(d.grid(), seed_x)},
              {"moas_grid_points", grid_points(d.grid(), cmp.moas_points)},
              {"jaccard", cmp.jaccard}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action governor toolkit: safe sets, governed simulation, safe learning"};
  app.require_subcommand(1);
  Options opt;
  int (*handler)(const ScenarioConfig&) = nullptr;

  auto add = [&](const char* name, const char* help, int (*fn)(const ScenarioConfig&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "Flat JSON scenario file")->required();
    sub->add_option("--seed", opt.seed, "Overrides the config seed");
    sub->add_option("--out", opt.out, "Output directory (default: config out_dir)");
    sub->callback([&handler, fn] { handler = fn; });
  };
  add("moas", "Build the admissible set and write moas.json", cmd_moas);
  add("discrete-safe-set", "Classify the grid and write safe_set.csv", cmd_discrete);
  add("simulate", "Run the configured scenario and write trajectory.csv", cmd_simulate);
  add("learn-q", "Tabular Q-learning under the grid governor", cmd_learn_q);
  add("learn-koopman", "Online lifted-model learning under the governor",
      cmd_learn_koopman);
  add("reproduce-paper", "Write fig2_*.csv, fig3_sets.json and fig4_cost.csv",
      cmd_reproduce);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    const ScenarioConfig cfg = load_config(opt);
    return handler(cfg);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.kind())), e.what());
    return e.kind() == ErrorKind::Config ? kExitUsage : kExitNumerical;
  } catch (const IoError& e) {
    print_error("io", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitNumerical;
  }
}
