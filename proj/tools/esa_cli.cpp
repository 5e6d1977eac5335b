// Command-line front end: run experiments and sweeps, verify numeric
// properties, generate benchmark MDP files, and plot regret CSVs.
// Exit codes: 0 success, 1 config/usage error, 2 verify hard-failure.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esa/env_gen.hpp"
#include "esa/harness.hpp"
#include "esa/mdp.hpp"
#include "esa/plot.hpp"
#include "esa/rates.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct EnvFlags {
  std::string env = "random";
  std::string mdp_file;
  int S = 5, A = 2, H = 5;
  std::uint64_t env_seed = 0;
  double slip = 0.1, gap = 0.2, perturb = 0.0;
};

struct EnvOptions {
  CLI::Option* env = nullptr;
  CLI::Option* mdp_file = nullptr;
  CLI::Option* S = nullptr;
  CLI::Option* A = nullptr;
  CLI::Option* H = nullptr;
  CLI::Option* env_seed = nullptr;
  CLI::Option* slip = nullptr;
  CLI::Option* gap = nullptr;
  CLI::Option* perturb = nullptr;
};

EnvOptions add_env_flags(CLI::App* cmd, EnvFlags& f) {
  EnvOptions o;
  o.env = cmd->add_option("--env", f.env, "Environment kind: random, chain, needle, file");
  o.mdp_file = cmd->add_option("--mdp-file", f.mdp_file,
                               "MDP JSON file to load (implies --env file)");
  o.S = cmd->add_option("--S", f.S, "State count");
  o.A = cmd->add_option("--A", f.A, "Action count (chain always uses 2)");
  o.H = cmd->add_option("--H", f.H, "Horizon");
  o.env_seed = cmd->add_option("--env-seed", f.env_seed, "Generator seed");
  o.slip = cmd->add_option("--slip", f.slip, "Chain: right-move failure probability");
  o.gap = cmd->add_option("--gap", f.gap, "Needle: reward lift of the special entry");
  o.perturb = cmd->add_option("--perturb", f.perturb,
                              "Mix each step's kernel with this much fresh noise");
  return o;
}

// Flag values override whatever the config file provided.
void merge_env(esa::GeneratorSpec& env, const EnvFlags& f, const EnvOptions& o) {
  if (o.env->count() > 0) env.kind = esa::parse_env_kind(f.env);
  if (o.mdp_file->count() > 0) {
    env.kind = esa::EnvKind::File;
    env.mdp_file = f.mdp_file;
  }
  if (o.S->count() > 0) env.S = f.S;
  if (o.A->count() > 0) env.A = f.A;
  if (o.H->count() > 0) env.H = f.H;
  if (o.env_seed->count() > 0) env.seed = f.env_seed;
  if (o.slip->count() > 0) env.slip = f.slip;
  if (o.gap->count() > 0) env.gap = f.gap;
  if (o.perturb->count() > 0) env.perturb = f.perturb;
}

void require_env_complete(const esa::GeneratorSpec& env) {
  if (env.kind == esa::EnvKind::File && env.mdp_file.empty())
    throw std::invalid_argument("--env file requires --mdp-file");
}

std::string num_token(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void report_record(const esa::RegretRecord& rec, const std::string& csv_path) {
  const double final_cum = rec.cum_regret.empty() ? 0.0 : rec.cum_regret.back();
  long long det = 0, stat = 0;
  for (const auto& [key, count] : rec.violations)
    (esa::InvariantChecker::is_deterministic_key(key) ? det : stat) += count;
  std::printf("%s: algo=%s episodes=%zu final_cum_regret=%.6g", csv_path.c_str(),
              esa::algo_name(rec.config.algo), rec.episode_regret.size(), final_cum);
  if (rec.config.check_level != esa::CheckLevel::Off)
    std::printf(" violations(det=%lld stat=%lld)", det, stat);
  std::printf(" wall=%.2fs\n", rec.wall_seconds);
}

int run_cmd(esa::RunSetup setup, const std::vector<std::uint64_t>& seeds,
            const std::string& out_dir) {
  require_env_complete(setup.env);
  fs::create_directories(out_dir);
  const bool single = seeds.size() == 1;
  for (std::uint64_t seed : seeds) {
    setup.seed = seed;
    const esa::RegretRecord rec = esa::run_from_setup(setup);
    const std::string stem = single ? "" : "_seed" + std::to_string(seed);
    const std::string csv = (fs::path(out_dir) / ("regret" + stem + ".csv")).string();
    const std::string json = (fs::path(out_dir) / ("summary" + stem + ".json")).string();
    esa::write_regret_csv(rec, csv);
    esa::write_summary_json(rec, json);
    report_record(rec, csv);
  }
  return 0;
}

int sweep_cmd(const esa::RunSetup& base, const std::vector<std::string>& algo_names,
              const std::vector<double>& cbs, const std::vector<std::uint64_t>& seeds,
              const std::string& out_dir) {
  require_env_complete(base.env);
  std::vector<esa::Algo> algos;
  algos.reserve(algo_names.size());
  for (const std::string& name : algo_names) algos.push_back(esa::parse_algo(name));

  const std::vector<esa::RunSetup> cells =
      esa::make_grid({base.env}, algos, cbs, seeds, base);
  const std::vector<esa::SweepResult> results = esa::sweep(cells);

  fs::create_directories(out_dir);
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const esa::SweepResult& cell = results[i];
    char stem[128];
    std::snprintf(stem, sizeof(stem), "cell_%03zu_%s_cb%s_seed%" PRIu64, i,
                  esa::algo_name(cell.setup.algo), num_token(cell.setup.c_b).c_str(),
                  cell.setup.seed);
    nlohmann::json entry{{"cell", i},
                         {"algo", esa::algo_name(cell.setup.algo)},
                         {"cb", cell.setup.c_b},
                         {"seed", cell.setup.seed}};
    if (cell.record) {
      const std::string csv = (fs::path(out_dir) / (std::string(stem) + ".csv")).string();
      const std::string json = (fs::path(out_dir) / (std::string(stem) + ".json")).string();
      esa::write_regret_csv(*cell.record, csv);
      esa::write_summary_json(*cell.record, json);
      report_record(*cell.record, csv);
      entry["status"] = "ok";
      entry["regret_csv"] = csv;
      entry["summary_json"] = json;
      entry["final_cum_regret"] =
          cell.record->cum_regret.empty() ? 0.0 : cell.record->cum_regret.back();
    } else {
      std::fprintf(stderr, "cell %zu failed: %s\n", i, cell.error.c_str());
      entry["status"] = "error";
      entry["error"] = cell.error;
    }
    index.push_back(std::move(entry));
  }
  const std::string index_path = (fs::path(out_dir) / "sweep_index.json").string();
  std::ofstream out(index_path);
  if (!out) throw std::runtime_error("cannot write " + index_path);
  out << index.dump(2) << '\n';
  std::printf("wrote %s (%zu cells)\n", index_path.c_str(), results.size());
  return 0;
}

int verify_rates(long long n_max) {
  const std::vector<int> horizons{1, 2, 5, 10};
  const std::vector<esa::RateViolation> violations =
      esa::check_rate_properties(horizons, n_max, 1e-9);
  if (violations.empty()) {
    std::printf("PASS rate-suite: H in {1,2,5,10}, N up to %lld, tolerance 1e-9\n",
                n_max);
    return 0;
  }
  for (const esa::RateViolation& v : violations) {
    std::printf("FAIL rate-suite: %s H=%d n=%lld N=%lld value=%.12g bound=%.12g\n",
                v.property.c_str(), v.H, v.n, v.N, v.value, v.bound);
  }
  return 2;
}

int verify_fuzz(int count) {
  esa::Pcg32 rng(12345, esa::kStreamGenerator);
  int bad_instances = 0;
  for (int i = 0; i < count; ++i) {
    esa::GeneratorSpec spec;
    spec.seed = rng.next_u64();
    spec.H = 1 + static_cast<int>(rng.next_below(4));
    spec.A = 1 + static_cast<int>(rng.next_below(3));
    switch (i % 3) {
      case 0:
        spec.kind = esa::EnvKind::Random;
        spec.S = 1 + static_cast<int>(rng.next_below(4));
        break;
      case 1:
        spec.kind = esa::EnvKind::Chain;
        spec.S = 2 + static_cast<int>(rng.next_below(3));
        spec.slip = 0.5 * rng.next_double();
        break;
      case 2:
        spec.kind = esa::EnvKind::Needle;
        spec.S = 1 + static_cast<int>(rng.next_below(4));
        spec.gap = 0.01 + 0.49 * rng.next_double();
        break;
    }
    if (i % 5 == 0) spec.perturb = 0.5 * rng.next_double();
    const esa::TabularMDP mdp = esa::make_env(spec);
    if (!esa::validate_mdp(mdp).ok()) ++bad_instances;
  }
  if (bad_instances > 0) {
    std::printf("FAIL generator-fuzz: %d of %d instances failed validation\n",
                bad_instances, count);
  } else {
    std::printf("PASS generator-fuzz: %d instances validate clean\n", count);
  }

  // Short full-check runs; any deterministic invariant violation is a hard
  // failure.
  long long det_violations = 0;
  const int runs = 6;
  for (int i = 0; i < runs; ++i) {
    esa::RunSetup setup;
    setup.algo = i % 3 == 2 ? esa::Algo::UcbQ : esa::Algo::Esa;
    setup.env.kind = esa::EnvKind::Random;
    setup.env.S = 2 + static_cast<int>(rng.next_below(3));
    setup.env.A = 2 + static_cast<int>(rng.next_below(2));
    setup.env.H = 2 + static_cast<int>(rng.next_below(3));
    setup.env.seed = rng.next_u64();
    setup.episodes = 1000;
    setup.seed = rng.next_u64();
    setup.check_level = esa::CheckLevel::Full;
    const esa::RegretRecord rec = esa::run_from_setup(setup);
    for (const auto& [key, value] : rec.violations)
      if (esa::InvariantChecker::is_deterministic_key(key)) det_violations += value;
  }
  if (det_violations > 0) {
    std::printf("FAIL invariant-fuzz: %lld deterministic violations across %d runs\n",
                det_violations, runs);
  } else {
    std::printf("PASS invariant-fuzz: %d full-check runs, zero deterministic "
                "violations\n", runs);
  }
  return bad_instances > 0 || det_violations > 0 ? 2 : 0;
}

int gen_cmd(const esa::GeneratorSpec& env, const std::string& out_path) {
  require_env_complete(env);
  const esa::TabularMDP mdp = esa::make_env(env);
  esa::save_mdp_json(mdp, out_path);
  std::printf("wrote %s (S=%d A=%d H=%d)\n", out_path.c_str(), mdp.S, mdp.A, mdp.H);
  return 0;
}

int plot_cmd(const std::vector<std::string>& inputs, const std::string& out_path,
             bool loglog) {
  std::vector<esa::RegretCurve> curves;
  curves.reserve(inputs.size());
  for (const std::string& input : inputs) curves.push_back(esa::load_regret_csv(input));
  esa::write_regret_svg(curves, out_path, loglog);
  std::printf("wrote %s (%zu curves)\n", out_path.c_str(), curves.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular episodic RL benchmark: optimistic Q-learning with a "
               "variance-reduced, early-settled reference value, a Hoeffding-bonus "
               "baseline, and an exact-oracle regret harness"};
  app.require_subcommand(1);

  // --- run ---
  CLI::App* run = app.add_subcommand("run", "Run one experiment and write CSV/JSON");
  EnvFlags run_env;
  const EnvOptions run_env_opts = add_env_flags(run, run_env);
  std::string run_algo = "esa", run_schedule = "fixed", run_check = "cheap";
  std::string run_out = ".", run_config;
  long long run_episodes = 1000;
  std::vector<std::uint64_t> run_seeds;
  int run_s1 = 0;
  double run_cb = 2.0, run_delta = 0.05;
  bool run_no_monotone = false;
  CLI::Option* o_algo = run->add_option("--algo", run_algo, "Learner: esa, ucb-q");
  CLI::Option* o_episodes = run->add_option("--episodes", run_episodes, "Episode count");
  run->add_option("--seed", run_seeds, "Run seed (repeat for several runs)");
  CLI::Option* o_cb = run->add_option("--cb", run_cb, "Exploration bonus constant");
  CLI::Option* o_delta = run->add_option("--delta", run_delta, "Failure probability");
  CLI::Option* o_schedule = run->add_option(
      "--schedule", run_schedule, "Initial states: fixed, round-robin, seeded-random");
  CLI::Option* o_s1 = run->add_option("--s1", run_s1, "Fixed initial state");
  CLI::Option* o_check = run->add_option("--check-level", run_check,
                                         "Invariant checks: off, cheap, full");
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--config", run_config,
                  "JSON config (or summary.json) to start from; flags override");
  CLI::Option* o_no_monotone = run->add_flag(
      "--no-monotone", run_no_monotone, "ucb-q: drop the monotone min with the old entry");

  // --- sweep ---
  CLI::App* sweepc = app.add_subcommand("sweep", "Run an algo x cb x seed grid");
  EnvFlags sw_env;
  const EnvOptions sw_env_opts = add_env_flags(sweepc, sw_env);
  std::vector<std::string> sw_algos{"esa"};
  std::vector<double> sw_cbs{2.0};
  std::vector<std::uint64_t> sw_seeds{0};
  std::string sw_schedule = "fixed", sw_check = "cheap", sw_out = ".";
  long long sw_episodes = 1000;
  int sw_s1 = 0;
  double sw_delta = 0.05;
  bool sw_no_monotone = false;
  sweepc->add_option("--algo", sw_algos, "Learners (repeatable): esa, ucb-q");
  sweepc->add_option("--cb", sw_cbs, "Bonus constants (repeatable)");
  sweepc->add_option("--seed", sw_seeds, "Run seeds (repeatable)");
  sweepc->add_option("--episodes", sw_episodes, "Episode count per cell");
  sweepc->add_option("--delta", sw_delta, "Failure probability");
  sweepc->add_option("--schedule", sw_schedule,
                     "Initial states: fixed, round-robin, seeded-random");
  sweepc->add_option("--s1", sw_s1, "Fixed initial state");
  sweepc->add_option("--check-level", sw_check, "Invariant checks: off, cheap, full");
  sweepc->add_option("--out", sw_out, "Output directory");
  sweepc->add_flag("--no-monotone", sw_no_monotone,
                   "ucb-q: drop the monotone min with the old entry");

  // --- verify ---
  CLI::App* verifyc = app.add_subcommand(
      "verify", "Check stepsize-weight properties and fuzz the invariants");
  bool vf_rates = false;
  int vf_fuzz = 0;
  long long vf_nmax = 1000;
  CLI::Option* o_vf_rates =
      verifyc->add_flag("--rate-suite", vf_rates, "Run only the stepsize-weight suite");
  CLI::Option* o_vf_fuzz = verifyc->add_option(
      "--fuzz", vf_fuzz, "Run only the generator/invariant fuzz with this many instances");
  verifyc->add_option("--Nmax", vf_nmax, "Largest update count for the rate suite");

  // --- gen ---
  CLI::App* genc = app.add_subcommand("gen", "Write a generated MDP to a JSON file");
  EnvFlags gen_env;
  const EnvOptions gen_env_opts = add_env_flags(genc, gen_env);
  std::string gen_out = "mdp.json";
  genc->add_option("--out", gen_out, "Output file path");

  // --- plot ---
  CLI::App* plotc = app.add_subcommand("plot", "Render regret CSVs as an SVG chart");
  std::vector<std::string> plot_inputs;
  std::string plot_out = "regret.svg";
  bool plot_loglog = false;
  plotc->add_option("inputs", plot_inputs, "Regret CSV files")->required();
  plotc->add_option("--out", plot_out, "Output SVG path");
  plotc->add_flag("--loglog", plot_loglog, "Log-scale both axes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      esa::RunSetup setup;
      if (!run_config.empty()) setup = esa::load_run_setup(run_config);
      merge_env(setup.env, run_env, run_env_opts);
      if (o_algo->count() > 0) setup.algo = esa::parse_algo(run_algo);
      if (o_episodes->count() > 0) setup.episodes = run_episodes;
      if (o_cb->count() > 0) setup.c_b = run_cb;
      if (o_delta->count() > 0) setup.delta = run_delta;
      if (o_schedule->count() > 0) setup.schedule.mode = esa::parse_schedule(run_schedule);
      if (o_s1->count() > 0) setup.schedule.fixed_state = run_s1;
      if (o_check->count() > 0) setup.check_level = esa::parse_check_level(run_check);
      if (o_no_monotone->count() > 0) setup.ucbq_monotone = !run_no_monotone;
      const std::vector<std::uint64_t> seeds =
          run_seeds.empty() ? std::vector<std::uint64_t>{setup.seed} : run_seeds;
      return run_cmd(setup, seeds, run_out);
    }
    if (*sweepc) {
      esa::RunSetup base;
      merge_env(base.env, sw_env, sw_env_opts);
      base.episodes = sw_episodes;
      base.delta = sw_delta;
      base.schedule.mode = esa::parse_schedule(sw_schedule);
      base.schedule.fixed_state = sw_s1;
      base.check_level = esa::parse_check_level(sw_check);
      base.ucbq_monotone = !sw_no_monotone;
      return sweep_cmd(base, sw_algos, sw_cbs, sw_seeds, sw_out);
    }
    if (*verifyc) {
      const bool rates_only = o_vf_rates->count() > 0 && o_vf_fuzz->count() == 0;
      const bool fuzz_only = o_vf_fuzz->count() > 0 && o_vf_rates->count() == 0;
      int status = 0;
      if (!fuzz_only) status = std::max(status, verify_rates(vf_nmax));
      if (!rates_only) status = std::max(status, verify_fuzz(vf_fuzz > 0 ? vf_fuzz : 200));
      return status;
    }
    if (*genc) {
      esa::GeneratorSpec env;
      merge_env(env, gen_env, gen_env_opts);
      return gen_cmd(env, gen_out);
    }
    if (*plotc) return plot_cmd(plot_inputs, plot_out, plot_loglog);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
