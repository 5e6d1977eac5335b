#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esa/agents.hpp"
#include "esa/env_gen.hpp"
#include "esa/mdp.hpp"

namespace esa {

enum class Algo { Esa, UcbQ };
enum class CheckLevel { Off, Cheap, Full };
enum class ScheduleMode { Fixed, RoundRobin, SeededRandom };

const char* algo_name(Algo algo);
const char* env_kind_name(EnvKind kind);
const char* schedule_name(ScheduleMode mode);
const char* check_level_name(CheckLevel level);
Algo parse_algo(const std::string& name);
EnvKind parse_env_kind(const std::string& name);
ScheduleMode parse_schedule(const std::string& name);
CheckLevel parse_check_level(const std::string& name);

/// How each episode's initial state is assigned.
struct InitStateSchedule {
  ScheduleMode mode = ScheduleMode::Fixed;
  int fixed_state = 0;
};

/// Complete description of one run; the summary JSON echoes it verbatim so a
/// run can be replayed from its own output.
struct RunSetup {
  Algo algo = Algo::Esa;
  GeneratorSpec env;
  long long episodes = 1000;
  std::uint64_t seed = 0;
  double c_b = 2.0;
  double delta = 0.05;
  InitStateSchedule schedule;
  CheckLevel check_level = CheckLevel::Cheap;
  bool ucbq_monotone = true;
};

/// Result of one run. cum_regret is the running sum of episode_regret.
/// violations holds one counter per invariant name; deterministic invariant
/// keys are hard failures when check_level is Full, statistical ones
/// (optimism / pessimism / reference closeness) are tallied for cross-seed
/// aggregation. wall_seconds is the only field not reproducible bit for bit.
struct RegretRecord {
  std::vector<double> episode_regret;
  std::vector<double> cum_regret;
  std::map<std::string, long long> violations;
  double wall_seconds = 0.0;
  RunSetup config;
};

/// Per-episode invariant checks against the previous episode-boundary
/// snapshot and the exact oracle. Cheap checks only the entries the episode
/// visited (monotonicity and reference closeness); Full scans every entry
/// and adds range, Jensen-gap, settle-once, and the statistical
/// optimism/pessimism counters. Counter keys: q_monotone, v_monotone,
/// v_lcb_monotone, q_ref_ge_q, jensen_ref, jensen_adv, settle_once, q_range,
/// v_range, v_lcb_range, optimism, pessimism_q, pessimism_v, ref_closeness.
class InvariantChecker {
 public:
  InvariantChecker(ValueTables oracle, CheckLevel level);

  /// Call once per episode, after its updates. visited is the episode's
  /// transition list; only Cheap uses it.
  void observe(const EsaAgentState& st, const std::vector<Transition>& visited);
  void observe(const UcbqAgentState& st, const std::vector<Transition>& visited);

  const std::map<std::string, long long>& counts() const { return counts_; }
  /// Sum over the keys that are hard failures (everything except the
  /// statistical optimism/pessimism/closeness counters).
  long long deterministic_total() const;
  static bool is_deterministic_key(const std::string& key);

 private:
  void bump(const char* key, long long dn);
  void ensure_keys(const char* const* keys, std::size_t count);

  ValueTables oracle_;
  CheckLevel level_;
  bool has_prev_ = false;
  std::vector<double> prev_q_, prev_v_, prev_v_lcb_;
  std::vector<std::uint8_t> prev_ref_open_;
  std::vector<int> settle_count_;
  std::map<std::string, long long> counts_;
};

/// One-shot, history-free variant: range/Jensen/statistical checks on a
/// single snapshot (monotonicity needs history, so it never fires here).
std::map<std::string, long long> check_invariants(const EsaAgentState& st,
                                                  const ValueTables& oracle,
                                                  CheckLevel level);

/// Test hooks for run_experiment.
struct ExperimentOptions {
  /// Pre-seeds the agent's acting Q table (and its V row maxima) before the
  /// first episode. Size must be H*S*A.
  const std::vector<double>* initial_q = nullptr;
  bool ucbq_monotone = true;
};

/// Runs hp.K episodes of the chosen learner on mdp. Per episode: initial
/// state from the schedule, greedy policy snapshot, exact per-episode regret
/// V*(s1) - V^policy(s1) via one-time optimal_values and (cached) exact
/// policy evaluation, then the episode's online updates and invariant checks.
/// The returned config echo carries everything except the environment spec,
/// which only run_from_setup knows.
RegretRecord run_experiment(const TabularMDP& mdp, Algo algo, const Hyperparams& hp,
                            const InitStateSchedule& schedule, std::uint64_t seed,
                            CheckLevel check_level, const ExperimentOptions& opts = {});

/// Builds the environment and hyperparameters from the setup, runs, and
/// returns a record whose config echo is the setup itself.
RegretRecord run_from_setup(const RunSetup& setup);

/// Sweep cell outcome: either a record or the error that killed the cell.
struct SweepResult {
  RunSetup setup;
  std::optional<RegretRecord> record;
  std::string error;
};

/// Cartesian product env x algo x c_b x seed over the base setup, in that
/// nesting order (seeds innermost).
std::vector<RunSetup> make_grid(const std::vector<GeneratorSpec>& envs,
                                const std::vector<Algo>& algos,
                                const std::vector<double>& cbs,
                                const std::vector<std::uint64_t>& seeds,
                                const RunSetup& base);

/// Runs every cell, up to max_threads at a time (<= 0 means default_thread_cap).
/// Results keep the input order no matter how execution interleaves; a
/// failing cell reports its error without stopping the others.
std::vector<SweepResult> sweep(const std::vector<RunSetup>& cells, int max_threads = 0);

/// ESA_RL_THREADS when set (clamped to >= 1), else hardware concurrency.
int default_thread_cap();

/// Least-squares slope of log(cum_regret) vs log(episode number, 1-based)
/// over the last window_fraction of episodes. Needs at least 100 episodes
/// and window_fraction in (0, 1]. Returns nullopt when the window touches a
/// nonpositive cumulative value (a learner that was exact from the start has
/// no finite log-log slope).
std::optional<double> fit_regret_exponent(const RegretRecord& record,
                                          double window_fraction);

/// CSV with header `episode,episode_regret,cum_regret`, one row per episode,
/// 0-based indices, 17-significant-digit reals.
void write_regret_csv(const RegretRecord& record, const std::string& path);

/// Summary JSON: config echo, final cumulative regret, fitted slope over the
/// last half (null when undefined or K < 100), violation counters, runtime.
void write_summary_json(const RegretRecord& record, const std::string& path);

/// Reads a RunSetup back from JSON: either a bare config object or a summary
/// file (its "config" member is used). Missing keys keep their defaults;
/// unknown keys are an error. Throws std::runtime_error on bad input.
RunSetup load_run_setup(const std::string& path);

}  // namespace esa
