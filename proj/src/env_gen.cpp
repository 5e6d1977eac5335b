#include "esa/env_gen.hpp"

#include <stdexcept>

namespace esa {

namespace {

void check_dims(int S, int A, int H) {
  if (S < 1 || A < 1 || H < 1)
    throw std::invalid_argument("generator: S, A, H must all be >= 1");
}

// One normalized row of uniform draws, written to out[0..S).
void draw_simplex_row(double* out, int S, Pcg32& rng) {
  double sum = 0.0;
  for (int s2 = 0; s2 < S; ++s2) {
    out[s2] = rng.next_double();
    sum += out[s2];
  }
  if (sum <= 0.0) {  // all draws exactly 0: vanishing chance, fall back to uniform
    for (int s2 = 0; s2 < S; ++s2) out[s2] = 1.0 / S;
    return;
  }
  for (int s2 = 0; s2 < S; ++s2) out[s2] /= sum;
}

// Stationary per-(s,a) kernel and rewards, replicated across all h.
TabularMDP replicated_random(int S, int A, int H, Pcg32& rng) {
  std::vector<double> base_p(static_cast<std::size_t>(S) * A * S);
  std::vector<double> base_r(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      draw_simplex_row(base_p.data() + (static_cast<std::size_t>(s) * A + a) * S, S, rng);
      base_r[static_cast<std::size_t>(s) * A + a] = rng.next_double();
    }
  }
  TabularMDP mdp;
  mdp.S = S;
  mdp.A = A;
  mdp.H = H;
  mdp.P.reserve(static_cast<std::size_t>(H) * base_p.size());
  mdp.r.reserve(static_cast<std::size_t>(H) * base_r.size());
  for (int h = 0; h < H; ++h) {
    mdp.P.insert(mdp.P.end(), base_p.begin(), base_p.end());
    mdp.r.insert(mdp.r.end(), base_r.begin(), base_r.end());
  }
  return mdp;
}

}  // namespace

TabularMDP random_mdp(int S, int A, int H, std::uint64_t seed) {
  check_dims(S, A, H);
  Pcg32 rng(seed, kStreamGenerator);
  TabularMDP mdp = replicated_random(S, A, H, rng);
  mdp.finalize();
  return mdp;
}

TabularMDP chain_mdp(int S, int H, double slip) {
  if (S < 2) throw std::invalid_argument("chain_mdp: S must be >= 2");
  if (H < 1) throw std::invalid_argument("chain_mdp: H must be >= 1");
  if (!(slip >= 0.0 && slip <= 0.5))
    throw std::invalid_argument("chain_mdp: slip must be in [0, 0.5]");
  TabularMDP mdp;
  mdp.S = S;
  mdp.A = 2;
  mdp.H = H;
  mdp.P.assign(static_cast<std::size_t>(H) * S * 2 * S, 0.0);
  mdp.r.assign(static_cast<std::size_t>(H) * S * 2, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      const int left = s > 0 ? s - 1 : 0;
      const int right = s < S - 1 ? s + 1 : S - 1;
      mdp.P[mdp.row_offset(h, s, 0) + left] = 1.0;
      mdp.P[mdp.row_offset(h, s, 1) + right] += 1.0 - slip;
      mdp.P[mdp.row_offset(h, s, 1) + s] += slip;
      if (s == 0) mdp.r[mdp.sa_index(h, s, 0)] = 0.05;
      if (s == S - 1) mdp.r[mdp.sa_index(h, s, 1)] = 1.0;
    }
  }
  mdp.finalize();
  return mdp;
}

TabularMDP needle_mdp(int S, int A, int H, double gap, std::uint64_t seed) {
  check_dims(S, A, H);
  if (!(gap > 0.0 && gap <= 0.5))
    throw std::invalid_argument("needle_mdp: gap must be in (0, 0.5]");
  Pcg32 rng(seed, kStreamGenerator);
  const int needle_h = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(H)));
  const int needle_s = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(S)));
  const int needle_a = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(A)));
  TabularMDP mdp = replicated_random(S, A, H, rng);
  for (double& rv : mdp.r) rv = 0.5;
  mdp.r[mdp.sa_index(needle_h, needle_s, needle_a)] = 0.5 + gap;
  mdp.finalize();
  return mdp;
}

void apply_perturbation(TabularMDP& mdp, double weight, Pcg32& rng) {
  if (!(weight >= 0.0 && weight <= 1.0))
    throw std::invalid_argument("apply_perturbation: weight must be in [0, 1]");
  if (weight == 0.0) return;
  std::vector<double> fresh(static_cast<std::size_t>(mdp.S));
  for (int h = 0; h < mdp.H; ++h) {
    for (int s = 0; s < mdp.S; ++s) {
      for (int a = 0; a < mdp.A; ++a) {
        draw_simplex_row(fresh.data(), mdp.S, rng);
        const std::size_t off = mdp.row_offset(h, s, a);
        for (int s2 = 0; s2 < mdp.S; ++s2)
          mdp.P[off + s2] = (1.0 - weight) * mdp.P[off + s2] + weight * fresh[s2];
      }
    }
  }
  mdp.finalize();
}

TabularMDP make_env(const GeneratorSpec& spec) {
  TabularMDP mdp;
  switch (spec.kind) {
    case EnvKind::Random:
      mdp = random_mdp(spec.S, spec.A, spec.H, spec.seed);
      break;
    case EnvKind::Chain:
      mdp = chain_mdp(spec.S, spec.H, spec.slip);
      break;
    case EnvKind::Needle:
      mdp = needle_mdp(spec.S, spec.A, spec.H, spec.gap, spec.seed);
      break;
    case EnvKind::File:
      mdp = load_mdp_json(spec.mdp_file);
      break;
  }
  if (spec.perturb > 0.0) {
    Pcg32 rng(spec.seed, kStreamPerturb);
    apply_perturbation(mdp, spec.perturb, rng);
  }
  return mdp;
}

}  // namespace esa
