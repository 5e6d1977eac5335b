#include "esa/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esa {

double eta(long long n, int H) {
  if (n < 1) throw std::invalid_argument("eta: n must be >= 1");
  if (H < 1) throw std::invalid_argument("eta: H must be >= 1");
  return static_cast<double>(H + 1) / static_cast<double>(H + n);
}

double eta_seq(long long n, long long N, int H) {
  if (n < 0 || N < 0) throw std::invalid_argument("eta_seq: n, N must be >= 0");
  if (n == 0) return N == 0 ? 1.0 : 0.0;
  if (n > N) return 0.0;
  double w = eta(n, H);
  for (long long i = n + 1; i <= N; ++i) w *= 1.0 - eta(i, H);
  return w;
}

std::vector<double> eta_seq_row(long long N, int H) {
  if (N < 0) throw std::invalid_argument("eta_seq_row: N must be >= 0");
  std::vector<double> row(static_cast<std::size_t>(N));
  if (N == 0) return row;
  row[static_cast<std::size_t>(N - 1)] = eta(N, H);
  for (long long n = N - 1; n >= 1; --n) {
    const double e_n = eta(n, H);
    const double e_n1 = eta(n + 1, H);
    row[static_cast<std::size_t>(n - 1)] =
        row[static_cast<std::size_t>(n)] * e_n * (1.0 - e_n1) / e_n1;
  }
  return row;
}

std::vector<RateViolation> check_rate_properties(const std::vector<int>& horizons,
                                                 long long n_max, double tol) {
  std::vector<RateViolation> out;
  const auto flag = [&out](std::string property, int H, long long n, long long N,
                           double value, double bound) {
    out.push_back({std::move(property), H, n, N, value, bound});
  };
  for (int H : horizons) {
    for (long long N = 1; N <= n_max; ++N) {
      const std::vector<double> row = eta_seq_row(N, H);
      double sum = 0.0, sum_sq = 0.0, max_w = 0.0;
      double sum_half = 0.0, sum_34 = 0.0, sum_inv = 0.0;
      for (long long n = 1; n <= N; ++n) {
        const double w = row[static_cast<std::size_t>(n - 1)];
        sum += w;
        sum_sq += w * w;
        max_w = std::max(max_w, w);
        const double nd = static_cast<double>(n);
        sum_half += w / std::sqrt(nd);
        sum_34 += w / std::pow(nd, 0.75);
        sum_inv += w / nd;
      }
      if (std::fabs(sum - 1.0) > tol) flag("sum_to_one", H, 0, N, sum, 1.0);
      const double Nd = static_cast<double>(N);
      const struct {
        const char* lo_name;
        const char* hi_name;
        double value;
        double scale;
      } ratios[] = {
          {"inv_sqrt_lower", "inv_sqrt_upper", sum_half, 1.0 / std::sqrt(Nd)},
          {"inv_34_lower", "inv_34_upper", sum_34, 1.0 / std::pow(Nd, 0.75)},
          {"inv_lower", "inv_upper", sum_inv, 1.0 / Nd},
      };
      for (const auto& r : ratios) {
        if (r.value < r.scale - tol) flag(r.lo_name, H, 0, N, r.value, r.scale);
        if (r.value > 2.0 * r.scale + tol) flag(r.hi_name, H, 0, N, r.value, 2.0 * r.scale);
      }
      const double cap = 2.0 * static_cast<double>(H) / Nd;
      if (max_w > cap + tol) flag("max_weight", H, 0, N, max_w, cap);
      if (sum_sq > cap + tol) flag("sum_sq", H, 0, N, sum_sq, cap);
    }

    // Partial-sum check of the infinite-sum bound: sum over N >= n of the
    // n-th weight stays below 1 + 1/H. Incremental: the weight picks up a
    // factor (1 - eta_N) each time N grows.
    const long long col_limit = std::max<long long>(n_max, 5000);
    const double col_cap = 1.0 + 1.0 / static_cast<double>(H);
    for (long long n : {1LL, 2LL, 10LL}) {
      if (n > col_limit) continue;
      double w = eta(n, H);
      double total = w;
      for (long long N = n + 1; N <= col_limit; ++N) {
        w *= 1.0 - eta(N, H);
        total += w;
      }
      if (total > col_cap + tol)
        flag("column_sum", H, n, col_limit, total, col_cap);
    }
  }
  return out;
}

}  // namespace esa
