#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "esa/rng.hpp"

namespace esa {

/// Finite-horizon tabular MDP with time-dependent transitions and rewards.
/// All indices are 0-based: h in [0, H), s in [0, S), a in [0, A).
/// Tables are flat row-major vectors; use the index helpers.
struct TabularMDP {
  int S = 0;
  int A = 0;
  int H = 0;
  std::vector<double> P;    // H*S*A*S, row P[row_offset(h,s,a) + s2]
  std::vector<double> r;    // H*S*A, rewards in [0, 1]
  std::vector<double> cum;  // cumulative P rows for sampling; built by finalize()

  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * S + s) * static_cast<std::size_t>(A) + a;
  }
  std::size_t row_offset(int h, int s, int a) const {
    return sa_index(h, s, a) * static_cast<std::size_t>(S);
  }
  double prob(int h, int s, int a, int s2) const { return P[row_offset(h, s, a) + s2]; }
  double reward(int h, int s, int a) const { return r[sa_index(h, s, a)]; }

  /// Builds the cumulative sampling table. Each row is normalized by its own
  /// sum and its last entry is pinned to exactly 1.0, so inverse-CDF lookups
  /// cannot fall off the end. P itself is left untouched (round-trips byte
  /// for byte). Call after the model passes validate_mdp.
  void finalize();
};

struct ValidationReport {
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

/// Checks shapes, row sums (tolerance 1e-9), nonnegativity, and reward range.
/// Every violation is reported with its indices.
ValidationReport validate_mdp(const TabularMDP& mdp);

/// Time-dependent deterministic policy: action(h*S + s).
struct DeterministicPolicy {
  int S = 0;
  int A = 0;
  int H = 0;
  std::vector<int> action;  // H*S
  int at(int h, int s) const { return action[static_cast<std::size_t>(h) * S + s]; }
};

/// Q over H*S*A and V over (H+1)*S; the extra V row is the zero boundary.
struct ValueTables {
  int S = 0;
  int A = 0;
  int H = 0;
  std::vector<double> q;  // H*S*A
  std::vector<double> v;  // (H+1)*S

  double q_at(int h, int s, int a) const {
    return q[(static_cast<std::size_t>(h) * S + s) * static_cast<std::size_t>(A) + a];
  }
  double v_at(int h, int s) const { return v[static_cast<std::size_t>(h) * S + s]; }
};

/// Exact optimal values by backward induction:
/// Q[h][s][a] = r + sum_s2 P * V[h+1][s2], V[h][s] = max_a Q[h][s][a].
/// Throws std::invalid_argument when the model fails validation.
ValueTables optimal_values(const TabularMDP& mdp);

/// Exact values of a fixed policy by backward induction:
/// V[h][s] = Q[h][s][policy(h,s)]. Throws on invalid model or policy.
ValueTables policy_values(const TabularMDP& mdp, const DeterministicPolicy& policy);

/// Greedy policy of a Q table (H*S*A flat); ties go to the lowest action index.
DeterministicPolicy greedy_policy(const TabularMDP& mdp, const std::vector<double>& q);

/// Draws s' from P[h][s][a] by inverse CDF with a single uniform draw.
int sample_transition(const TabularMDP& mdp, int h, int s, int a, Pcg32& rng);

/// One environment step as seen by a learner.
struct Transition {
  int h = 0;
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

using ActFn = std::function<int(int h, int s)>;
using ObserveFn = std::function<void(const Transition&)>;

/// Rolls one episode from s1. For each h: a = act(h, s), s' is sampled, and
/// observe sees the transition before the next step runs, so online updates
/// happen in trajectory order. Returns the H transitions.
std::vector<Transition> run_episode(const TabularMDP& mdp, const ActFn& act,
                                    const ObserveFn& observe, int s1, Pcg32& rng);

/// JSON model file: {"S": int, "A": int, "H": int,
///   "P": [H][S][A][S] doubles, "r": [H][S][A] doubles}, all 0-based.
/// Loader validates and finalizes; throws std::runtime_error with the
/// validation report on bad input.
TabularMDP load_mdp_json(const std::string& path);
void save_mdp_json(const TabularMDP& mdp, const std::string& path);

}  // namespace esa
