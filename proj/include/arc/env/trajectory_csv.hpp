#pragma once

#include <cctype>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/env/continuous.hpp"

namespace arc {

/// CSV with header `episode,t,s0..s{n-1},a0..a{m-1},reward,done`, 17 significant digits.
inline void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajs) {
  if (trajs.empty() || trajs.front().transitions.empty()) {
    os << "episode,t,reward,done\n";
    return;
  }
  const auto& first = trajs.front().transitions.front();
  const std::size_t n = first.state.size(), m = first.action.size();
  os << "episode,t";
  for (std::size_t i = 0; i < n; ++i) os << ",s" << i;
  for (std::size_t i = 0; i < m; ++i) os << ",a" << i;
  os << ",reward,done\n";
  os << std::setprecision(17);
  for (std::size_t e = 0; e < trajs.size(); ++e) {
    const auto& tr = trajs[e].transitions;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      require(tr[t].state.size() == n && tr[t].action.size() == m, "write_trajectories_csv: ragged dimensions");
      os << e << ',' << t;
      for (double v : tr[t].state) os << ',' << v;
      for (double v : tr[t].action) os << ',' << v;
      os << ',' << tr[t].reward_env << ',' << (tr[t].done ? 1 : 0) << '\n';
    }
  }
}

/// Reads the CSV back. next_state is rebuilt from the following row of the
/// same episode; the last row of each episode keeps next_state empty.
inline std::vector<Trajectory> read_trajectories_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ContractViolation("trajectory csv: missing header");
  std::size_t n = 0, m = 0;
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.size() > 1 && col[0] == 's' && std::isdigit(static_cast<unsigned char>(col[1]))) ++n;
      if (col.size() > 1 && col[0] == 'a' && std::isdigit(static_cast<unsigned char>(col[1]))) ++m;
    }
  }
  std::vector<Trajectory> out;
  long current = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 4 + n + m) throw ContractViolation("trajectory csv: wrong column count");
    const long episode = static_cast<long>(vals[0]);
    if (episode != current) {
      out.emplace_back();
      current = episode;
    }
    Transition tr;
    tr.state.assign(vals.begin() + 2, vals.begin() + 2 + static_cast<long>(n));
    tr.action.assign(vals.begin() + 2 + static_cast<long>(n), vals.begin() + 2 + static_cast<long>(n + m));
    tr.reward_env = vals[2 + n + m];
    tr.done = vals[3 + n + m] != 0.0;
    auto& traj = out.back();
    if (!traj.transitions.empty()) traj.transitions.back().next_state = tr.state;
    traj.push(std::move(tr));
  }
  return out;
}

}  // namespace arc
