#pragma once

#include <cstdint>
#include <string>

#include "esa/mdp.hpp"
#include "esa/rng.hpp"

namespace esa {

enum class EnvKind { Random, Chain, Needle, File };

/// Everything needed to rebuild a benchmark instance deterministically.
struct GeneratorSpec {
  EnvKind kind = EnvKind::Random;
  int S = 5;
  int A = 2;
  int H = 5;
  std::uint64_t seed = 0;  // generator seed (random / needle / perturbation)
  double slip = 0.1;       // chain: chance the right move stays put, in [0, 0.5]
  double gap = 0.2;        // needle: reward lift of the one special entry, in (0, 0.5]
  double perturb = 0.0;    // per-step kernel noise weight, in [0, 1]
  std::string mdp_file;    // kind == File: path to an MDP JSON file
};

/// Dense random instance: per (s,a) one transition row of normalized uniform
/// draws and one uniform reward, replicated across all steps h. Pure function
/// of (S, A, H, seed); always validate_mdp-clean.
TabularMDP random_mdp(int S, int A, int H, std::uint64_t seed);

/// Hard-exploration chain with A=2, stationary across h. Action 0 steps left
/// (stop at state 0) and pays 0.05 only when taken at state 0; action 1 steps
/// right with probability 1-slip (else stays) and pays 1 only when taken at
/// the rightmost state. Requires S >= 2, slip in [0, 0.5].
TabularMDP chain_mdp(int S, int H, double slip);

/// Flat-reward instance with a single raised entry: every reward is 0.5
/// except one seed-chosen (h, s, a), which pays 0.5 + gap. Transition rows
/// are random (as in random_mdp) and replicated across h. gap in (0, 0.5].
TabularMDP needle_mdp(int S, int A, int H, double gap, std::uint64_t seed);

/// Makes a replicated kernel genuinely step-dependent: each (h,s,a) row
/// becomes (1-weight) * row + weight * fresh random row (a convex mix of
/// distributions, so rows stay stochastic without renormalizing). Rebuilds
/// the sampling table. weight in [0, 1].
void apply_perturbation(TabularMDP& mdp, double weight, Pcg32& rng);

/// Builds the instance a spec describes: dispatches on kind (File loads
/// mdp_file), applies the perturbation when weight > 0, and returns a
/// finalized model. No spec field is silently ignored.
TabularMDP make_env(const GeneratorSpec& spec);

}  // namespace esa
