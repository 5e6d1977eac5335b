#include "esa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace esa {

namespace {

constexpr double kTol = 1e-9;

[[noreturn]] void bad_name(const char* what, const std::string& got,
                           const char* valid) {
  throw std::invalid_argument(std::string("unknown ") + what + " \"" + got +
                              "\" (valid: " + valid + ")");
}

}  // namespace

const char* algo_name(Algo algo) {
  switch (algo) {
    case Algo::Esa: return "esa";
    case Algo::UcbQ: return "ucb-q";
  }
  return "?";
}

const char* env_kind_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::Random: return "random";
    case EnvKind::Chain: return "chain";
    case EnvKind::Needle: return "needle";
    case EnvKind::File: return "file";
  }
  return "?";
}

const char* schedule_name(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::Fixed: return "fixed";
    case ScheduleMode::RoundRobin: return "round-robin";
    case ScheduleMode::SeededRandom: return "seeded-random";
  }
  return "?";
}

const char* check_level_name(CheckLevel level) {
  switch (level) {
    case CheckLevel::Off: return "off";
    case CheckLevel::Cheap: return "cheap";
    case CheckLevel::Full: return "full";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  if (name == "esa") return Algo::Esa;
  if (name == "ucb-q") return Algo::UcbQ;
  bad_name("algorithm", name, "esa, ucb-q");
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "random") return EnvKind::Random;
  if (name == "chain") return EnvKind::Chain;
  if (name == "needle") return EnvKind::Needle;
  if (name == "file") return EnvKind::File;
  bad_name("environment", name, "random, chain, needle, file");
}

ScheduleMode parse_schedule(const std::string& name) {
  if (name == "fixed") return ScheduleMode::Fixed;
  if (name == "round-robin") return ScheduleMode::RoundRobin;
  if (name == "seeded-random") return ScheduleMode::SeededRandom;
  bad_name("schedule", name, "fixed, round-robin, seeded-random");
}

CheckLevel parse_check_level(const std::string& name) {
  if (name == "off") return CheckLevel::Off;
  if (name == "cheap") return CheckLevel::Cheap;
  if (name == "full") return CheckLevel::Full;
  bad_name("check level", name, "off, cheap, full");
}

InvariantChecker::InvariantChecker(ValueTables oracle, CheckLevel level)
    : oracle_(std::move(oracle)), level_(level) {}

void InvariantChecker::bump(const char* key, long long dn) { counts_[key] += dn; }

void InvariantChecker::ensure_keys(const char* const* keys, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) counts_.try_emplace(keys[i], 0);
}

bool InvariantChecker::is_deterministic_key(const std::string& key) {
  return key != "optimism" && key != "pessimism_q" && key != "pessimism_v" &&
         key != "ref_closeness";
}

long long InvariantChecker::deterministic_total() const {
  long long total = 0;
  for (const auto& [key, count] : counts_)
    if (is_deterministic_key(key)) total += count;
  return total;
}

void InvariantChecker::observe(const EsaAgentState& st,
                               const std::vector<Transition>& visited) {
  if (level_ == CheckLevel::Off) return;
  static const char* kCheap[] = {"q_monotone", "v_monotone", "v_lcb_monotone",
                                 "ref_closeness"};
  static const char* kFull[] = {"q_ref_ge_q", "jensen_ref",  "jensen_adv",
                                "settle_once", "q_range",    "v_range",
                                "v_lcb_range", "optimism",   "pessimism_q",
                                "pessimism_v"};
  ensure_keys(kCheap, std::size(kCheap));
  const double Hd = static_cast<double>(st.H);

  if (level_ == CheckLevel::Cheap) {
    for (const Transition& t : visited) {
      const std::size_t i = st.sa_index(t.h, t.s, t.a);
      const std::size_t hs = st.hs_index(t.h, t.s);
      if (has_prev_) {
        if (st.q[i] > prev_q_[i]) bump("q_monotone", 1);
        if (st.v[hs] > prev_v_[hs]) bump("v_monotone", 1);
        if (st.v_lcb[hs] < prev_v_lcb_[hs]) bump("v_lcb_monotone", 1);
      }
      if (std::fabs(st.v[hs] - st.v_ref[hs]) > 2.0 + kTol) bump("ref_closeness", 1);
    }
  } else {
    ensure_keys(kFull, std::size(kFull));
    for (std::size_t i = 0; i < st.q.size(); ++i) {
      if (has_prev_ && st.q[i] > prev_q_[i]) bump("q_monotone", 1);
      if (st.q_ref[i] < st.q[i]) bump("q_ref_ge_q", 1);
      if (st.sigma_ref[i] - st.mu_ref[i] * st.mu_ref[i] < -kTol) bump("jensen_ref", 1);
      if (st.sigma_adv[i] - st.mu_adv[i] * st.mu_adv[i] < -kTol) bump("jensen_adv", 1);
      if (st.q[i] < 0.0 || st.q[i] > Hd) bump("q_range", 1);
      if (st.q[i] < oracle_.q[i] - kTol) bump("optimism", 1);
      if (st.q_lcb[i] > oracle_.q[i] + kTol) bump("pessimism_q", 1);
    }
    if (settle_count_.empty()) settle_count_.assign(st.v.size(), 0);
    for (std::size_t hs = 0; hs < st.v.size(); ++hs) {
      if (has_prev_) {
        if (st.v[hs] > prev_v_[hs]) bump("v_monotone", 1);
        if (st.v_lcb[hs] < prev_v_lcb_[hs]) bump("v_lcb_monotone", 1);
        if (prev_ref_open_[hs] && !st.ref_open[hs] && ++settle_count_[hs] > 1)
          bump("settle_once", 1);
      }
      if (st.v[hs] < 0.0 || st.v[hs] > Hd) bump("v_range", 1);
      if (st.v_lcb[hs] < 0.0 || st.v_lcb[hs] > Hd) bump("v_lcb_range", 1);
      if (st.v_lcb[hs] > oracle_.v[hs] + kTol) bump("pessimism_v", 1);
      if (std::fabs(st.v[hs] - st.v_ref[hs]) > 2.0 + kTol) bump("ref_closeness", 1);
    }
  }

  prev_q_ = st.q;
  prev_v_ = st.v;
  prev_v_lcb_ = st.v_lcb;
  prev_ref_open_ = st.ref_open;
  has_prev_ = true;
}

void InvariantChecker::observe(const UcbqAgentState& st,
                               const std::vector<Transition>& visited) {
  if (level_ == CheckLevel::Off) return;
  const double Hd = static_cast<double>(st.H);
  if (st.monotone) {
    static const char* kMono[] = {"q_monotone", "v_monotone"};
    ensure_keys(kMono, std::size(kMono));
  }

  if (level_ == CheckLevel::Cheap) {
    if (has_prev_ && st.monotone) {
      for (const Transition& t : visited) {
        const std::size_t i = st.sa_index(t.h, t.s, t.a);
        const std::size_t hs = st.hs_index(t.h, t.s);
        if (st.q[i] > prev_q_[i]) bump("q_monotone", 1);
        if (st.v[hs] > prev_v_[hs]) bump("v_monotone", 1);
      }
    }
  } else {
    static const char* kFull[] = {"optimism"};
    ensure_keys(kFull, std::size(kFull));
    if (st.monotone) {
      static const char* kRange[] = {"q_range", "v_range"};
      ensure_keys(kRange, std::size(kRange));
    }
    for (std::size_t i = 0; i < st.q.size(); ++i) {
      if (has_prev_ && st.monotone && st.q[i] > prev_q_[i]) bump("q_monotone", 1);
      if (st.monotone && (st.q[i] < 0.0 || st.q[i] > Hd)) bump("q_range", 1);
      if (st.q[i] < oracle_.q[i] - kTol) bump("optimism", 1);
    }
    for (std::size_t hs = 0; hs < st.v.size(); ++hs) {
      if (has_prev_ && st.monotone && st.v[hs] > prev_v_[hs]) bump("v_monotone", 1);
      if (st.monotone && (st.v[hs] < 0.0 || st.v[hs] > Hd)) bump("v_range", 1);
    }
  }

  prev_q_ = st.q;
  prev_v_ = st.v;
  has_prev_ = true;
}

std::map<std::string, long long> check_invariants(const EsaAgentState& st,
                                                  const ValueTables& oracle,
                                                  CheckLevel level) {
  InvariantChecker checker(oracle, level);
  checker.observe(st, {});
  return checker.counts();
}

namespace {

// v rows as the per-(h,s) maxima of a seeded q table.
void refresh_v_rows(std::vector<double>& v, const std::vector<double>& q, int H,
                    int S, int A) {
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      const std::size_t base = (static_cast<std::size_t>(h) * S + s) * A;
      double best = q[base];
      for (int a = 1; a < A; ++a) best = std::max(best, q[base + a]);
      v[static_cast<std::size_t>(h) * S + s] = best;
    }
  }
}

}  // namespace

RegretRecord run_experiment(const TabularMDP& mdp, Algo algo, const Hyperparams& hp,
                            const InitStateSchedule& schedule, std::uint64_t seed,
                            CheckLevel check_level, const ExperimentOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (hp.S != mdp.S || hp.A != mdp.A || hp.H != mdp.H)
    throw std::invalid_argument("run_experiment: hyperparams do not match MDP dims");
  if (schedule.mode == ScheduleMode::Fixed &&
      (schedule.fixed_state < 0 || schedule.fixed_state >= mdp.S))
    throw std::invalid_argument("run_experiment: fixed initial state out of range");

  const ValueTables oracle = optimal_values(mdp);

  RegretRecord rec;
  rec.config.algo = algo;
  rec.config.episodes = hp.K;
  rec.config.seed = seed;
  rec.config.c_b = hp.c_b;
  rec.config.delta = hp.delta;
  rec.config.schedule = schedule;
  rec.config.check_level = check_level;
  rec.config.ucbq_monotone = opts.ucbq_monotone;
  rec.episode_regret.reserve(static_cast<std::size_t>(hp.K));
  rec.cum_regret.reserve(static_cast<std::size_t>(hp.K));

  EsaAgentState esa_st;
  UcbqAgentState ucb_st;
  ActFn act_fn;
  ObserveFn observe_fn;
  if (algo == Algo::Esa) {
    esa_st = new_esa_agent(hp);
    act_fn = [&esa_st](int h, int s) { return act(esa_st, h, s); };
    observe_fn = [&esa_st, &hp](const Transition& t) { esa_step(esa_st, t, hp); };
  } else {
    ucb_st = new_ucbq_agent(hp, opts.ucbq_monotone);
    act_fn = [&ucb_st](int h, int s) { return act(ucb_st, h, s); };
    observe_fn = [&ucb_st, &hp](const Transition& t) { ucbq_step(ucb_st, t, hp); };
  }
  if (opts.initial_q) {
    const std::vector<double>& q0 = *opts.initial_q;
    if (q0.size() != static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A)
      throw std::invalid_argument("run_experiment: initial_q shape does not match MDP");
    if (algo == Algo::Esa) {
      esa_st.q = q0;
      refresh_v_rows(esa_st.v, esa_st.q, mdp.H, mdp.S, mdp.A);
      esa_st.v_ref = esa_st.v;
    } else {
      ucb_st.q = q0;
      refresh_v_rows(ucb_st.v, ucb_st.q, mdp.H, mdp.S, mdp.A);
    }
  }

  Pcg32 env_rng(seed, kStreamEnv);
  Pcg32 sched_rng(seed, kStreamSchedule);
  InvariantChecker checker(oracle, check_level);

  DeterministicPolicy policy_cache;
  ValueTables policy_vals;
  bool have_policy = false;
  double cum = 0.0;
  for (long long k = 0; k < hp.K; ++k) {
    int s1 = 0;
    switch (schedule.mode) {
      case ScheduleMode::Fixed: s1 = schedule.fixed_state; break;
      case ScheduleMode::RoundRobin: s1 = static_cast<int>(k % mdp.S); break;
      case ScheduleMode::SeededRandom:
        s1 = static_cast<int>(sched_rng.next_below(static_cast<std::uint32_t>(mdp.S)));
        break;
    }

    DeterministicPolicy policy = algo == Algo::Esa ? greedy_policy_snapshot(esa_st)
                                                   : greedy_policy_snapshot(ucb_st);
    if (!have_policy || policy.action != policy_cache.action) {
      policy_vals = policy_values(mdp, policy);
      policy_cache = std::move(policy);
      have_policy = true;
    }
    const double regret = oracle.v_at(0, s1) - policy_vals.v_at(0, s1);
    cum += regret;
    rec.episode_regret.push_back(regret);
    rec.cum_regret.push_back(cum);

    const std::vector<Transition> traj = run_episode(mdp, act_fn, observe_fn, s1, env_rng);
    if (algo == Algo::Esa) {
      checker.observe(esa_st, traj);
    } else {
      checker.observe(ucb_st, traj);
    }
  }

  rec.violations = checker.counts();
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RegretRecord run_from_setup(const RunSetup& setup) {
  const TabularMDP mdp = make_env(setup.env);
  const Hyperparams hp = Hyperparams::make(mdp.S, mdp.A, mdp.H, setup.episodes,
                                           setup.c_b, setup.delta);
  ExperimentOptions opts;
  opts.ucbq_monotone = setup.ucbq_monotone;
  RegretRecord rec = run_experiment(mdp, setup.algo, hp, setup.schedule, setup.seed,
                                    setup.check_level, opts);
  rec.config = setup;
  return rec;
}

std::vector<RunSetup> make_grid(const std::vector<GeneratorSpec>& envs,
                                const std::vector<Algo>& algos,
                                const std::vector<double>& cbs,
                                const std::vector<std::uint64_t>& seeds,
                                const RunSetup& base) {
  std::vector<RunSetup> cells;
  cells.reserve(envs.size() * algos.size() * cbs.size() * seeds.size());
  for (const GeneratorSpec& env : envs) {
    for (Algo algo : algos) {
      for (double cb : cbs) {
        for (std::uint64_t seed : seeds) {
          RunSetup cell = base;
          cell.env = env;
          cell.algo = algo;
          cell.c_b = cb;
          cell.seed = seed;
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

int default_thread_cap() {
  if (const char* env = std::getenv("ESA_RL_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) return static_cast<int>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<SweepResult> sweep(const std::vector<RunSetup>& cells, int max_threads) {
  std::vector<SweepResult> results(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) results[i].setup = cells[i];
  if (cells.empty()) return results;

  const int cap = std::max(1, std::min<int>(max_threads > 0 ? max_threads
                                                            : default_thread_cap(),
                                            static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&cells, &results, &next] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        results[i].record = run_from_setup(cells[i]);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  if (cap == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(cap));
    for (int i = 0; i < cap; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return results;
}

std::optional<double> fit_regret_exponent(const RegretRecord& record,
                                          double window_fraction) {
  const std::size_t K = record.cum_regret.size();
  if (K < 100)
    throw std::invalid_argument("fit_regret_exponent: need at least 100 episodes");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw std::invalid_argument("fit_regret_exponent: window_fraction must be in (0,1]");
  std::size_t count = static_cast<std::size_t>(
      std::llround(window_fraction * static_cast<double>(K)));
  count = std::clamp<std::size_t>(count, 2, K);
  const std::size_t start = K - count;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = start; k < K; ++k) {
    const double c = record.cum_regret[k];
    if (!(c > 0.0)) return std::nullopt;
    const double x = std::log(static_cast<double>(k + 1));
    const double y = std::log(c);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(count);
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

void write_regret_csv(const RegretRecord& record, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fputs("episode,episode_regret,cum_regret\n", f);
  for (std::size_t k = 0; k < record.episode_regret.size(); ++k) {
    std::fprintf(f, "%zu,%.17g,%.17g\n", k, record.episode_regret[k],
                 record.cum_regret[k]);
  }
  std::fclose(f);
}

namespace {

nlohmann::json setup_to_json(const RunSetup& s) {
  return nlohmann::json{{"algo", algo_name(s.algo)},
                        {"env", env_kind_name(s.env.kind)},
                        {"S", s.env.S},
                        {"A", s.env.A},
                        {"H", s.env.H},
                        {"env_seed", s.env.seed},
                        {"slip", s.env.slip},
                        {"gap", s.env.gap},
                        {"perturb", s.env.perturb},
                        {"mdp_file", s.env.mdp_file},
                        {"episodes", s.episodes},
                        {"seed", s.seed},
                        {"cb", s.c_b},
                        {"delta", s.delta},
                        {"schedule", schedule_name(s.schedule.mode)},
                        {"s1", s.schedule.fixed_state},
                        {"check_level", check_level_name(s.check_level)},
                        {"ucbq_monotone", s.ucbq_monotone}};
}

RunSetup setup_from_json(const nlohmann::json& j) {
  RunSetup s;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const nlohmann::json& value = item.value();
    if (key == "algo") s.algo = parse_algo(value.get<std::string>());
    else if (key == "env") s.env.kind = parse_env_kind(value.get<std::string>());
    else if (key == "S") s.env.S = value.get<int>();
    else if (key == "A") s.env.A = value.get<int>();
    else if (key == "H") s.env.H = value.get<int>();
    else if (key == "env_seed") s.env.seed = value.get<std::uint64_t>();
    else if (key == "slip") s.env.slip = value.get<double>();
    else if (key == "gap") s.env.gap = value.get<double>();
    else if (key == "perturb") s.env.perturb = value.get<double>();
    else if (key == "mdp_file") s.env.mdp_file = value.get<std::string>();
    else if (key == "episodes") s.episodes = value.get<long long>();
    else if (key == "seed") s.seed = value.get<std::uint64_t>();
    else if (key == "cb") s.c_b = value.get<double>();
    else if (key == "delta") s.delta = value.get<double>();
    else if (key == "schedule") s.schedule.mode = parse_schedule(value.get<std::string>());
    else if (key == "s1") s.schedule.fixed_state = value.get<int>();
    else if (key == "check_level") s.check_level = parse_check_level(value.get<std::string>());
    else if (key == "ucbq_monotone") s.ucbq_monotone = value.get<bool>();
    else throw std::runtime_error("config: unknown key \"" + key + "\"");
  }
  return s;
}

}  // namespace

void write_summary_json(const RegretRecord& record, const std::string& path) {
  nlohmann::json j;
  j["config"] = setup_to_json(record.config);
  j["episodes_run"] = record.episode_regret.size();
  j["final_cum_regret"] = record.cum_regret.empty() ? 0.0 : record.cum_regret.back();
  j["regret_slope_last_half"] = nullptr;
  if (record.cum_regret.size() >= 100) {
    if (const std::optional<double> slope = fit_regret_exponent(record, 0.5))
      j["regret_slope_last_half"] = *slope;
  }
  j["violations"] = record.violations;
  j["runtime_seconds"] = record.wall_seconds;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

RunSetup load_run_setup(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file " + path + ": " + e.what());
  }
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw std::runtime_error("config file " + path + ": not a JSON object");
  try {
    return setup_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error("config file " + path + ": " + e.what());
  }
}

}  // namespace esa
