#pragma once

#include <string>
#include <vector>

namespace esa {

/// Step size used by every incremental Q update: eta_n = (H+1)/(H+n), n >= 1.
double eta(long long n, int H);

/// Weight that the n-th update contributes to the estimate after N updates:
///   eta_n^N = eta_n * prod_{i=n+1..N} (1 - eta_i),  with the conventions
///   eta_0^N = [N == 0] and eta_n^N = 0 for n > N.
double eta_seq(long long n, long long N, int H);

/// Full weight row [eta_1^N, ..., eta_N^N] in O(N) via the backward
/// recurrence eta_{n-1}^N = eta_n^N * eta_{n-1} (1 - eta_n) / eta_n.
std::vector<double> eta_seq_row(long long N, int H);

/// One failed rate-schedule property.
struct RateViolation {
  std::string property;
  int H = 0;
  long long n = 0;
  long long N = 0;
  double value = 0.0;
  double bound = 0.0;
};

/// Checks the facts the regret analysis leans on, for each horizon in
/// `horizons` and each N in 1..n_max:
///   sum_n eta_n^N == 1
///   1/N^a <= sum_n eta_n^N / n^a <= 2/N^a   for a in {1/2, 3/4, 1}
///   max_n eta_n^N <= 2H/N and sum_n (eta_n^N)^2 <= 2H/N
///   sum_{N=n..n_max} eta_n^N <= 1 + 1/H     for n in {1, 2, 10}
/// Returns every violation found (empty means all hold within tol).
std::vector<RateViolation> check_rate_properties(const std::vector<int>& horizons,
                                                 long long n_max, double tol);

}  // namespace esa
