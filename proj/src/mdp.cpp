#include "esa/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace esa {

namespace {

constexpr double kRowSumTol = 1e-9;

void require_valid(const TabularMDP& mdp) {
  const ValidationReport report = validate_mdp(mdp);
  if (report.ok()) return;
  std::ostringstream msg;
  msg << "invalid MDP:";
  for (const std::string& e : report.errors) msg << "\n  " << e;
  throw std::invalid_argument(msg.str());
}

}  // namespace

void TabularMDP::finalize() {
  const std::size_t rows = static_cast<std::size_t>(H) * S * A;
  cum.assign(rows * static_cast<std::size_t>(S), 0.0);
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t off = row * static_cast<std::size_t>(S);
    double total = 0.0;
    for (int s2 = 0; s2 < S; ++s2) total += P[off + s2];
    double acc = 0.0;
    for (int s2 = 0; s2 < S; ++s2) {
      acc += P[off + s2];
      cum[off + s2] = acc / total;
    }
    cum[off + static_cast<std::size_t>(S) - 1] = 1.0;
  }
}

ValidationReport validate_mdp(const TabularMDP& mdp) {
  ValidationReport report;
  auto add = [&report](const std::string& msg) { report.errors.push_back(msg); };
  if (mdp.S < 1) add("S must be >= 1, got " + std::to_string(mdp.S));
  if (mdp.A < 1) add("A must be >= 1, got " + std::to_string(mdp.A));
  if (mdp.H < 1) add("H must be >= 1, got " + std::to_string(mdp.H));
  if (!report.ok()) return report;

  const std::size_t want_p = static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A * mdp.S;
  const std::size_t want_r = static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A;
  if (mdp.P.size() != want_p) {
    add("P has " + std::to_string(mdp.P.size()) + " entries, expected " +
        std::to_string(want_p));
  }
  if (mdp.r.size() != want_r) {
    add("r has " + std::to_string(mdp.r.size()) + " entries, expected " +
        std::to_string(want_r));
  }
  if (!report.ok()) return report;

  for (int h = 0; h < mdp.H; ++h) {
    for (int s = 0; s < mdp.S; ++s) {
      for (int a = 0; a < mdp.A; ++a) {
        const std::size_t off = mdp.row_offset(h, s, a);
        double sum = 0.0;
        for (int s2 = 0; s2 < mdp.S; ++s2) {
          const double p = mdp.P[off + s2];
          if (p < 0.0 || !std::isfinite(p)) {
            std::ostringstream msg;
            msg << "P entry " << p << " invalid at (h=" << h << ",s=" << s
                << ",a=" << a << ",s'=" << s2 << ")";
            add(msg.str());
          }
          sum += p;
        }
        if (std::fabs(sum - 1.0) > kRowSumTol) {
          std::ostringstream msg;
          msg << "row sum " << sum << " != 1 +- 1e-9 at (h=" << h << ",s=" << s
              << ",a=" << a << ")";
          add(msg.str());
        }
        const double rv = mdp.reward(h, s, a);
        if (!(rv >= 0.0 && rv <= 1.0)) {
          std::ostringstream msg;
          msg << "reward " << rv << " out of [0,1] at (h=" << h << ",s=" << s
              << ",a=" << a << ")";
          add(msg.str());
        }
      }
    }
  }
  return report;
}

ValueTables optimal_values(const TabularMDP& mdp) {
  require_valid(mdp);
  ValueTables vt;
  vt.S = mdp.S;
  vt.A = mdp.A;
  vt.H = mdp.H;
  vt.q.assign(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A, 0.0);
  vt.v.assign(static_cast<std::size_t>(mdp.H + 1) * mdp.S, 0.0);
  for (int h = mdp.H - 1; h >= 0; --h) {
    const double* v_next = vt.v.data() + static_cast<std::size_t>(h + 1) * mdp.S;
    for (int s = 0; s < mdp.S; ++s) {
      double best = 0.0;
      for (int a = 0; a < mdp.A; ++a) {
        const std::size_t off = mdp.row_offset(h, s, a);
        double ev = 0.0;
        for (int s2 = 0; s2 < mdp.S; ++s2) ev += mdp.P[off + s2] * v_next[s2];
        const double q = mdp.reward(h, s, a) + ev;
        vt.q[mdp.sa_index(h, s, a)] = q;
        if (a == 0 || q > best) best = q;
      }
      vt.v[static_cast<std::size_t>(h) * mdp.S + s] = best;
    }
  }
  return vt;
}

ValueTables policy_values(const TabularMDP& mdp, const DeterministicPolicy& policy) {
  require_valid(mdp);
  if (policy.H != mdp.H || policy.S != mdp.S ||
      policy.action.size() != static_cast<std::size_t>(mdp.H) * mdp.S) {
    throw std::invalid_argument("policy_values: policy shape does not match MDP");
  }
  for (int idx : policy.action) {
    if (idx < 0 || idx >= mdp.A)
      throw std::invalid_argument("policy_values: action index " + std::to_string(idx) +
                                  " out of [0," + std::to_string(mdp.A) + ")");
  }
  ValueTables vt;
  vt.S = mdp.S;
  vt.A = mdp.A;
  vt.H = mdp.H;
  vt.q.assign(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A, 0.0);
  vt.v.assign(static_cast<std::size_t>(mdp.H + 1) * mdp.S, 0.0);
  for (int h = mdp.H - 1; h >= 0; --h) {
    const double* v_next = vt.v.data() + static_cast<std::size_t>(h + 1) * mdp.S;
    for (int s = 0; s < mdp.S; ++s) {
      for (int a = 0; a < mdp.A; ++a) {
        const std::size_t off = mdp.row_offset(h, s, a);
        double ev = 0.0;
        for (int s2 = 0; s2 < mdp.S; ++s2) ev += mdp.P[off + s2] * v_next[s2];
        vt.q[mdp.sa_index(h, s, a)] = mdp.reward(h, s, a) + ev;
      }
      vt.v[static_cast<std::size_t>(h) * mdp.S + s] =
          vt.q_at(h, s, policy.at(h, s));
    }
  }
  return vt;
}

DeterministicPolicy greedy_policy(const TabularMDP& mdp, const std::vector<double>& q) {
  if (q.size() != static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A)
    throw std::invalid_argument("greedy_policy: Q table shape does not match MDP");
  DeterministicPolicy policy;
  policy.S = mdp.S;
  policy.A = mdp.A;
  policy.H = mdp.H;
  policy.action.assign(static_cast<std::size_t>(mdp.H) * mdp.S, 0);
  for (int h = 0; h < mdp.H; ++h) {
    for (int s = 0; s < mdp.S; ++s) {
      const std::size_t base = mdp.sa_index(h, s, 0);
      int best_a = 0;
      double best = q[base];
      for (int a = 1; a < mdp.A; ++a) {
        if (q[base + a] > best) {
          best = q[base + a];
          best_a = a;
        }
      }
      policy.action[static_cast<std::size_t>(h) * mdp.S + s] = best_a;
    }
  }
  return policy;
}

int sample_transition(const TabularMDP& mdp, int h, int s, int a, Pcg32& rng) {
  const std::size_t off = mdp.row_offset(h, s, a);
  const std::span<const double> row(mdp.cum.data() + off, static_cast<std::size_t>(mdp.S));
  return static_cast<int>(categorical_index(row, rng.next_double()));
}

std::vector<Transition> run_episode(const TabularMDP& mdp, const ActFn& act,
                                    const ObserveFn& observe, int s1, Pcg32& rng) {
  if (s1 < 0 || s1 >= mdp.S)
    throw std::invalid_argument("run_episode: s1 out of range");
  std::vector<Transition> trajectory;
  trajectory.reserve(static_cast<std::size_t>(mdp.H));
  int s = s1;
  for (int h = 0; h < mdp.H; ++h) {
    const int a = act(h, s);
    const int s_next = sample_transition(mdp, h, s, a, rng);
    const Transition t{h, s, a, mdp.reward(h, s, a), s_next};
    if (observe) observe(t);
    trajectory.push_back(t);
    s = s_next;
  }
  return trajectory;
}

TabularMDP load_mdp_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MDP file: " + path);
  nlohmann::json j;
  in >> j;

  TabularMDP mdp;
  mdp.S = j.at("S").get<int>();
  mdp.A = j.at("A").get<int>();
  mdp.H = j.at("H").get<int>();
  if (mdp.S < 1 || mdp.A < 1 || mdp.H < 1)
    throw std::runtime_error("MDP file " + path + ": S, A, H must all be >= 1");

  mdp.P.reserve(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A * mdp.S);
  mdp.r.reserve(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A);
  const auto& jp = j.at("P");
  const auto& jr = j.at("r");
  if (jp.size() != static_cast<std::size_t>(mdp.H) ||
      jr.size() != static_cast<std::size_t>(mdp.H))
    throw std::runtime_error("MDP file " + path + ": P and r must have H outer entries");
  for (int h = 0; h < mdp.H; ++h) {
    const auto& ps = jp.at(h);
    const auto& rs = jr.at(h);
    if (ps.size() != static_cast<std::size_t>(mdp.S) ||
        rs.size() != static_cast<std::size_t>(mdp.S))
      throw std::runtime_error("MDP file " + path + ": state dimension mismatch");
    for (int s = 0; s < mdp.S; ++s) {
      const auto& pa = ps.at(s);
      const auto& ra = rs.at(s);
      if (pa.size() != static_cast<std::size_t>(mdp.A) ||
          ra.size() != static_cast<std::size_t>(mdp.A))
        throw std::runtime_error("MDP file " + path + ": action dimension mismatch");
      for (int a = 0; a < mdp.A; ++a) {
        const auto& row = pa.at(a);
        if (row.size() != static_cast<std::size_t>(mdp.S))
          throw std::runtime_error("MDP file " + path + ": P row length mismatch");
        for (int s2 = 0; s2 < mdp.S; ++s2) mdp.P.push_back(row.at(s2).get<double>());
        mdp.r.push_back(ra.at(a).get<double>());
      }
    }
  }

  const ValidationReport report = validate_mdp(mdp);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "MDP file " << path << " failed validation:";
    for (const std::string& e : report.errors) msg << "\n  " << e;
    throw std::runtime_error(msg.str());
  }
  mdp.finalize();
  return mdp;
}

void save_mdp_json(const TabularMDP& mdp, const std::string& path) {
  nlohmann::json jp = nlohmann::json::array();
  nlohmann::json jr = nlohmann::json::array();
  for (int h = 0; h < mdp.H; ++h) {
    nlohmann::json ps = nlohmann::json::array();
    nlohmann::json rs = nlohmann::json::array();
    for (int s = 0; s < mdp.S; ++s) {
      nlohmann::json pa = nlohmann::json::array();
      nlohmann::json ra = nlohmann::json::array();
      for (int a = 0; a < mdp.A; ++a) {
        const std::size_t off = mdp.row_offset(h, s, a);
        nlohmann::json row = nlohmann::json::array();
        for (int s2 = 0; s2 < mdp.S; ++s2) row.push_back(mdp.P[off + s2]);
        pa.push_back(std::move(row));
        ra.push_back(mdp.reward(h, s, a));
      }
      ps.push_back(std::move(pa));
      rs.push_back(std::move(ra));
    }
    jp.push_back(std::move(ps));
    jr.push_back(std::move(rs));
  }
  nlohmann::json j{{"S", mdp.S}, {"A", mdp.A}, {"H", mdp.H},
                   {"P", std::move(jp)}, {"r", std::move(jr)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write MDP file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace esa
