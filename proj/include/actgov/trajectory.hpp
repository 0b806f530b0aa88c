#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "actgov/error.hpp"

namespace actgov {

/// One simulated step. `branch` is "none" for ungoverned runs.
struct StepRecord {
  int t = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd u1;
  Eigen::VectorXd u;
  std::string branch = "none";
  std::optional<double> v_hat;
  double w = 0.0;
  double cost = 0.0;
  bool violated = false;
};

using Trajectory = std::vector<StepRecord>;

/// ||x||^2 + r_weight * ||u||^2.
inline double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double r_weight = 10.0) {
  return x.squaredNorm() + r_weight * u.squaredNorm();
}

/// Running mean of the per-step cost.
inline std::vector<double> average_cost(const Trajectory& traj) {
  if (traj.empty()) fail(ErrorKind::Argument, "average_cost: empty trajectory");
  std::vector<double> out;
  out.reserve(traj.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    sum += traj[i].cost;
    out.push_back(sum / static_cast<double>(i + 1));
  }
  return out;
}

inline std::size_t count_violations(const Trajectory& traj) {
  std::size_t n = 0;
  for (const auto& r : traj) n += r.violated;
  return n;
}

/// 17 significant digits: round-trips every double, byte-stable output.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x1,x2,u1,u,branch,vhat,w,cost,violated\n";
  for (const auto& r : traj) {
    os << r.t << ',' << format_number(r.x(0)) << ',' << format_number(r.x(1))
       << ',' << format_number(r.u1(0)) << ',' << format_number(r.u(0)) << ','
       << r.branch << ',' << (r.v_hat ? format_number(*r.v_hat) : "nan") << ','
       << format_number(r.w) << ',' << format_number(r.cost) << ','
       << (r.violated ? 1 : 0) << '\n';
  }
}

inline void write_cost_csv(std::ostream& os, const std::vector<double>& cbar) {
  os << "t,cbar\n";
  for (std::size_t t = 0; t < cbar.size(); ++t)
    os << t << ',' << format_number(cbar[t]) << '\n';
}

}  // namespace actgov
