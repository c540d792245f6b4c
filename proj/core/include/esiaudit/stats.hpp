#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace esiaudit::stats {

struct Ci {
  double lo = 0;
  double hi = 0;
};

struct BootstrapSpec {
  int iterations = 10000;
  uint64_t seed = 42;
  double lo_pct = 2.5;
  double hi_pct = 97.5;
  // 0 = use hardware concurrency. Results are bit-identical for any value:
  // each iteration derives its random stream from (seed, iteration index).
  int threads = 0;
};

struct BootstrapResult {
  double lo = 0;
  double hi = 0;
  int undefined_skipped = 0;
  int used = 0;
};

// statistic_fn receives the resampled pair indices for one iteration and
// returns the statistic, or nullopt when it is undefined for that resample
// (e.g. a 0/0 ratio). Undefined iterations are skipped and counted.
using BootstrapStat =
    std::function<std::optional<double>(const std::vector<uint32_t>&)>;

// Percentile bootstrap over pair indices [0, n_pairs). Throws
// std::invalid_argument when n_pairs < 2 and std::runtime_error when more
// than half of the iterations are undefined.
BootstrapResult bootstrap_ci(size_t n_pairs, const BootstrapStat& statistic_fn,
                             const BootstrapSpec& spec = {});

struct PairedTestResult {
  double statistic = 0;
  double p = 1;
  // Discordant counts for McNemar; the full table for chi2_2x2 lives in
  // `table` as {f1, m1, f2, m2}.
  long b = 0;
  long c = 0;
  std::vector<long> table;
  std::vector<std::string> significant_at;  // subset of {"0.05","0.01","0.001","bonferroni"}
};

// Continuity-corrected McNemar test on discordant pair counts.
// chi2 = (max(|b - c| - 1, 0))^2 / (b + c). Throws when b + c = 0.
PairedTestResult mcnemar(long b, long c, double bonferroni_alpha = 0.0025);

// Pearson chi-square (no continuity correction by default) on the 2x2 table
//   row 1: (f1, m1)   row 2: (f2, m2)
// Throws when any marginal is zero.
PairedTestResult chi2_2x2(long f1, long m1, long f2, long m2,
                          double bonferroni_alpha = 0.0025,
                          bool yates = false);

Ci wilson_ci(long k, long n, double confidence = 0.95);
Ci clopper_pearson_ci(long k, long n, double confidence = 0.95);

inline double bonferroni(double alpha, int m) { return alpha / m; }

// Upper tail of the 1-df chi-square distribution: erfc(sqrt(x/2)).
double chi2_sf_1df(double x);

// Support functions, exposed for tests.
double normal_quantile(double p);
double regularized_incomplete_beta(double x, double a, double b);

}  // namespace esiaudit::stats
