#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "esa/mdp.hpp"

namespace esa {

/// Shared run parameters. iota is the log term ln(S*A*T/delta) with T = K*H
/// (T clamped to 1 so a zero-episode budget stays well defined).
struct Hyperparams {
  int S = 0;
  int A = 0;
  int H = 0;
  long long K = 0;
  double c_b = 2.0;
  double delta = 0.05;
  double iota = 0.0;

  /// Validated construction: requires dims >= 1, K >= 0, c_b > 0,
  /// delta in (0,1). Derives iota. Throws std::invalid_argument.
  static Hyperparams make(int S, int A, int H, long long K, double c_b = 2.0,
                          double delta = 0.05);
};

/// Learner state for the variance-reduced optimistic Q agent. One entry per
/// (h,s,a) in the flat tables below, layout (h*S + s)*A + a, matching
/// TabularMDP. Per-(h,s) tables use h*S + s.
///
/// q is the acting table (greedy argmax); q_ucb is the plain optimistic
/// estimate; q_lcb the pessimistic one; q_ref the reference-advantage
/// estimate. v / v_lcb / v_ref cache the state values, with an implicit zero
/// row at h == H. mu_ref / sigma_ref hold the running mean / second moment of
/// the next-step reference value, mu_adv / sigma_adv the stepsize-weighted
/// mean / second moment of the advantage (v - v_ref) at the next step.
/// bonus_ref is the current variance-aware bonus and bonus_delta its change
/// at the last visit. ref_open(h,s) is true while the reference value is
/// still allowed to move (it latches false once the value gap settles).
struct EsaAgentState {
  int S = 0;
  int A = 0;
  int H = 0;
  std::vector<double> q, q_ucb, q_lcb, q_ref;            // H*S*A each
  std::vector<double> mu_ref, sigma_ref, mu_adv, sigma_adv;
  std::vector<double> bonus_delta, bonus_ref;            // H*S*A each
  std::vector<long long> visits;                         // H*S*A
  std::vector<double> v, v_lcb, v_ref;                   // H*S each
  std::vector<std::uint8_t> ref_open;                    // H*S

  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * S + s) * static_cast<std::size_t>(A) + a;
  }
  std::size_t hs_index(int h, int s) const {
    return static_cast<std::size_t>(h) * S + s;
  }
  double v_at(int h, int s) const { return h >= H ? 0.0 : v[hs_index(h, s)]; }
  double v_lcb_at(int h, int s) const { return h >= H ? 0.0 : v_lcb[hs_index(h, s)]; }
  double v_ref_at(int h, int s) const { return h >= H ? 0.0 : v_ref[hs_index(h, s)]; }
};

/// Fresh state: q = q_ucb = q_ref = H, v = v_ref = H, q_lcb = v_lcb = 0,
/// counts and moment tables 0, every ref_open flag true.
/// Requires dims >= 1, delta in (0,1), c_b >= 0, finite nonnegative iota.
EsaAgentState new_esa_agent(const Hyperparams& hp);

/// Greedy action on q[h][s][.], ties to the lowest index. Pure read.
int act(const EsaAgentState& st, int h, int s);

/// The five per-visit table updates. n is the visit count AFTER increment,
/// eta_n the stepsize for that count. Each mutates exactly its own tables at
/// (t.h, t.s, t.a) and returns the new entry where one exists. esa_step is
/// the usual entry point; these are exposed for direct arithmetic checks.
double update_ucb_q(EsaAgentState& st, const Transition& t, long long n,
                    double eta_n, const Hyperparams& hp);
double update_lcb_q(EsaAgentState& st, const Transition& t, long long n,
                    double eta_n, const Hyperparams& hp);
void update_moments(EsaAgentState& st, const Transition& t, long long n, double eta_n);
void update_bonus(EsaAgentState& st, int h, int s, int a, long long n,
                  const Hyperparams& hp);
double update_ucb_q_advantage(EsaAgentState& st, const Transition& t, long long n,
                              double eta_n, const Hyperparams& hp);

/// One online update, in the fixed order: count increment; optimistic and
/// pessimistic table updates; moment, bonus, and reference-advantage updates;
/// q <- min{q_ref, q_ucb, q}; v <- max_a q; v_lcb <- max{max_a q_lcb, v_lcb};
/// then the reference move: while the optimistic/pessimistic gap exceeds 1
/// the reference tracks v with ref_open staying true, and the first update
/// with gap <= 1 writes v one last time and latches ref_open false.
/// Reads of level h+1 tables see values from before this episode because an
/// episode touches each level exactly once, in increasing h.
void esa_step(EsaAgentState& st, const Transition& t, const Hyperparams& hp);

/// Actual table allocation sizes, for the space audit.
struct StorageAudit {
  std::size_t value_entries = 0;    // doubles across the ten per-(h,s,a) tables
  std::size_t state_entries = 0;    // per-(h,s) entries, settle flags included
  std::size_t counter_entries = 0;  // visit counters
};
StorageAudit storage_audit(const EsaAgentState& st);

/// Hoeffding-bonus optimistic Q baseline: a single q table updated with the
/// same stepsize and a fixed c_b*sqrt(H^3*iota/n) bonus. `monotone` keeps the
/// standard min with the previous entry; disabling it is an ablation knob.
struct UcbqAgentState {
  int S = 0;
  int A = 0;
  int H = 0;
  bool monotone = true;
  std::vector<double> q;           // H*S*A
  std::vector<long long> visits;   // H*S*A
  std::vector<double> v;           // H*S

  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * S + s) * static_cast<std::size_t>(A) + a;
  }
  std::size_t hs_index(int h, int s) const {
    return static_cast<std::size_t>(h) * S + s;
  }
  double v_at(int h, int s) const { return h >= H ? 0.0 : v[hs_index(h, s)]; }
};

UcbqAgentState new_ucbq_agent(const Hyperparams& hp, bool monotone = true);
int act(const UcbqAgentState& st, int h, int s);
void ucbq_step(UcbqAgentState& st, const Transition& t, const Hyperparams& hp);

/// Pre-episode greedy policy, by value: later updates never change it.
DeterministicPolicy greedy_policy_snapshot(const EsaAgentState& st);
DeterministicPolicy greedy_policy_snapshot(const UcbqAgentState& st);

}  // namespace esa
