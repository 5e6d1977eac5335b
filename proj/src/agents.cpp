#include "esa/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "esa/rates.hpp"

namespace esa {

namespace {

void check_agent_params(const Hyperparams& hp) {
  if (hp.S < 1 || hp.A < 1 || hp.H < 1)
    throw std::invalid_argument("agent: S, A, H must all be >= 1");
  if (hp.K < 0) throw std::invalid_argument("agent: K must be >= 0");
  if (!(hp.delta > 0.0 && hp.delta < 1.0))
    throw std::invalid_argument("agent: delta must be in (0,1)");
  if (!(hp.c_b >= 0.0) || !std::isfinite(hp.c_b))
    throw std::invalid_argument("agent: c_b must be finite and >= 0");
  if (!(hp.iota >= 0.0) || !std::isfinite(hp.iota))
    throw std::invalid_argument("agent: iota must be finite and >= 0");
}

int argmax_row(const std::vector<double>& table, std::size_t base, int A) {
  int best_a = 0;
  double best = table[base];
  for (int a = 1; a < A; ++a) {
    if (table[base + a] > best) {
      best = table[base + a];
      best_a = a;
    }
  }
  return best_a;
}

double row_max(const std::vector<double>& table, std::size_t base, int A) {
  double best = table[base];
  for (int a = 1; a < A; ++a) best = std::max(best, table[base + a]);
  return best;
}

}  // namespace

Hyperparams Hyperparams::make(int S, int A, int H, long long K, double c_b,
                              double delta) {
  if (S < 1 || A < 1 || H < 1)
    throw std::invalid_argument("Hyperparams: S, A, H must all be >= 1");
  if (K < 0) throw std::invalid_argument("Hyperparams: K must be >= 0");
  if (!(c_b > 0.0) || !std::isfinite(c_b))
    throw std::invalid_argument("Hyperparams: c_b must be finite and > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("Hyperparams: delta must be in (0,1)");
  Hyperparams hp;
  hp.S = S;
  hp.A = A;
  hp.H = H;
  hp.K = K;
  hp.c_b = c_b;
  hp.delta = delta;
  const double T = static_cast<double>(std::max<long long>(K, 1)) * H;
  hp.iota = std::log(static_cast<double>(S) * A * T / delta);
  return hp;
}

EsaAgentState new_esa_agent(const Hyperparams& hp) {
  check_agent_params(hp);
  EsaAgentState st;
  st.S = hp.S;
  st.A = hp.A;
  st.H = hp.H;
  const std::size_t hsa = static_cast<std::size_t>(hp.H) * hp.S * hp.A;
  const std::size_t hs = static_cast<std::size_t>(hp.H) * hp.S;
  const double h0 = static_cast<double>(hp.H);
  st.q.assign(hsa, h0);
  st.q_ucb.assign(hsa, h0);
  st.q_lcb.assign(hsa, 0.0);
  st.q_ref.assign(hsa, h0);
  st.mu_ref.assign(hsa, 0.0);
  st.sigma_ref.assign(hsa, 0.0);
  st.mu_adv.assign(hsa, 0.0);
  st.sigma_adv.assign(hsa, 0.0);
  st.bonus_delta.assign(hsa, 0.0);
  st.bonus_ref.assign(hsa, 0.0);
  st.visits.assign(hsa, 0);
  st.v.assign(hs, h0);
  st.v_lcb.assign(hs, 0.0);
  st.v_ref.assign(hs, h0);
  st.ref_open.assign(hs, 1);
  return st;
}

int act(const EsaAgentState& st, int h, int s) {
  return argmax_row(st.q, st.sa_index(h, s, 0), st.A);
}

double update_ucb_q(EsaAgentState& st, const Transition& t, long long n,
                    double eta_n, const Hyperparams& hp) {
  const double Hd = static_cast<double>(st.H);
  const double bonus = hp.c_b * std::sqrt(Hd * Hd * Hd * hp.iota / static_cast<double>(n));
  const double target = t.r + st.v_at(t.h + 1, t.s_next) + bonus;
  const std::size_t i = st.sa_index(t.h, t.s, t.a);
  st.q_ucb[i] = (1.0 - eta_n) * st.q_ucb[i] + eta_n * target;
  return st.q_ucb[i];
}

double update_lcb_q(EsaAgentState& st, const Transition& t, long long n,
                    double eta_n, const Hyperparams& hp) {
  const double Hd = static_cast<double>(st.H);
  const double bonus = hp.c_b * std::sqrt(Hd * Hd * Hd * hp.iota / static_cast<double>(n));
  const double target = t.r + st.v_lcb_at(t.h + 1, t.s_next) - bonus;
  const std::size_t i = st.sa_index(t.h, t.s, t.a);
  st.q_lcb[i] = (1.0 - eta_n) * st.q_lcb[i] + eta_n * target;
  return st.q_lcb[i];
}

void update_moments(EsaAgentState& st, const Transition& t, long long n, double eta_n) {
  const double v_ref_next = st.v_ref_at(t.h + 1, t.s_next);
  const double adv = st.v_at(t.h + 1, t.s_next) - v_ref_next;
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t i = st.sa_index(t.h, t.s, t.a);
  st.mu_ref[i] = (1.0 - inv_n) * st.mu_ref[i] + inv_n * v_ref_next;
  st.sigma_ref[i] = (1.0 - inv_n) * st.sigma_ref[i] + inv_n * v_ref_next * v_ref_next;
  st.mu_adv[i] = (1.0 - eta_n) * st.mu_adv[i] + eta_n * adv;
  st.sigma_adv[i] = (1.0 - eta_n) * st.sigma_adv[i] + eta_n * adv * adv;
}

void update_bonus(EsaAgentState& st, int h, int s, int a, long long n,
                  const Hyperparams& hp) {
  const std::size_t i = st.sa_index(h, s, a);
  // Running-moment variances can dip a hair below 0 from rounding; clamp
  // before the square roots.
  const double var_ref = std::max(0.0, st.sigma_ref[i] - st.mu_ref[i] * st.mu_ref[i]);
  const double var_adv = std::max(0.0, st.sigma_adv[i] - st.mu_adv[i] * st.mu_adv[i]);
  const double b_next = hp.c_b * std::sqrt(hp.iota / static_cast<double>(n)) *
                        (std::sqrt(var_ref) +
                         std::sqrt(static_cast<double>(st.H)) * std::sqrt(var_adv));
  st.bonus_delta[i] = b_next - st.bonus_ref[i];
  st.bonus_ref[i] = b_next;
}

double update_ucb_q_advantage(EsaAgentState& st, const Transition& t, long long n,
                              double eta_n, const Hyperparams& hp) {
  const std::size_t i = st.sa_index(t.h, t.s, t.a);
  const double Hd = static_cast<double>(st.H);
  const double b_ref = st.bonus_ref[i] + (1.0 - eta_n) * st.bonus_delta[i] / eta_n +
                       hp.c_b * Hd * Hd * hp.iota / std::pow(static_cast<double>(n), 0.75);
  const double target = t.r + st.v_at(t.h + 1, t.s_next) -
                        st.v_ref_at(t.h + 1, t.s_next) + st.mu_ref[i] + b_ref;
  st.q_ref[i] = (1.0 - eta_n) * st.q_ref[i] + eta_n * target;
  return st.q_ref[i];
}

void esa_step(EsaAgentState& st, const Transition& t, const Hyperparams& hp) {
  const std::size_t i = st.sa_index(t.h, t.s, t.a);
  const long long n = ++st.visits[i];
  const double eta_n = eta(n, st.H);

  update_ucb_q(st, t, n, eta_n, hp);
  update_lcb_q(st, t, n, eta_n, hp);
  update_moments(st, t, n, eta_n);
  update_bonus(st, t.h, t.s, t.a, n, hp);
  update_ucb_q_advantage(st, t, n, eta_n, hp);

  st.q[i] = std::min({st.q_ref[i], st.q_ucb[i], st.q[i]});

  const std::size_t hs = st.hs_index(t.h, t.s);
  const std::size_t base = st.sa_index(t.h, t.s, 0);
  st.v[hs] = row_max(st.q, base, st.A);
  st.v_lcb[hs] = std::max(row_max(st.q_lcb, base, st.A), st.v_lcb[hs]);

  if (st.v[hs] - st.v_lcb[hs] > 1.0) {
    st.v_ref[hs] = st.v[hs];
    st.ref_open[hs] = 1;
  } else if (st.ref_open[hs]) {
    st.v_ref[hs] = st.v[hs];
    st.ref_open[hs] = 0;
  }
}

StorageAudit storage_audit(const EsaAgentState& st) {
  StorageAudit audit;
  audit.value_entries = st.q.size() + st.q_ucb.size() + st.q_lcb.size() +
                        st.q_ref.size() + st.mu_ref.size() + st.sigma_ref.size() +
                        st.mu_adv.size() + st.sigma_adv.size() +
                        st.bonus_delta.size() + st.bonus_ref.size();
  audit.state_entries = st.v.size() + st.v_lcb.size() + st.v_ref.size() +
                        st.ref_open.size();
  audit.counter_entries = st.visits.size();
  return audit;
}

UcbqAgentState new_ucbq_agent(const Hyperparams& hp, bool monotone) {
  check_agent_params(hp);
  UcbqAgentState st;
  st.S = hp.S;
  st.A = hp.A;
  st.H = hp.H;
  st.monotone = monotone;
  const std::size_t hsa = static_cast<std::size_t>(hp.H) * hp.S * hp.A;
  const std::size_t hs = static_cast<std::size_t>(hp.H) * hp.S;
  st.q.assign(hsa, static_cast<double>(hp.H));
  st.visits.assign(hsa, 0);
  st.v.assign(hs, static_cast<double>(hp.H));
  return st;
}

int act(const UcbqAgentState& st, int h, int s) {
  return argmax_row(st.q, st.sa_index(h, s, 0), st.A);
}

void ucbq_step(UcbqAgentState& st, const Transition& t, const Hyperparams& hp) {
  const std::size_t i = st.sa_index(t.h, t.s, t.a);
  const long long n = ++st.visits[i];
  const double eta_n = eta(n, st.H);
  const double Hd = static_cast<double>(st.H);
  const double bonus = hp.c_b * std::sqrt(Hd * Hd * Hd * hp.iota / static_cast<double>(n));
  const double target = t.r + st.v_at(t.h + 1, t.s_next) + bonus;
  const double fresh = (1.0 - eta_n) * st.q[i] + eta_n * target;
  st.q[i] = st.monotone ? std::min(fresh, st.q[i]) : fresh;
  st.v[st.hs_index(t.h, t.s)] = row_max(st.q, st.sa_index(t.h, t.s, 0), st.A);
}

namespace {

template <typename State>
DeterministicPolicy snapshot_of(const State& st) {
  DeterministicPolicy policy;
  policy.S = st.S;
  policy.A = st.A;
  policy.H = st.H;
  policy.action.resize(static_cast<std::size_t>(st.H) * st.S);
  for (int h = 0; h < st.H; ++h)
    for (int s = 0; s < st.S; ++s)
      policy.action[st.hs_index(h, s)] = act(st, h, s);
  return policy;
}

}  // namespace

DeterministicPolicy greedy_policy_snapshot(const EsaAgentState& st) {
  return snapshot_of(st);
}

DeterministicPolicy greedy_policy_snapshot(const UcbqAgentState& st) {
  return snapshot_of(st);
}

}  // namespace esa
