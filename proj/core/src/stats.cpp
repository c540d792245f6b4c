#include "esiaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "esiaudit/rng.hpp"

namespace esiaudit::stats {

double chi2_sf_1df(double x) {
  if (x < 0) throw std::invalid_argument("chi2_sf_1df: x must be >= 0");
  return std::erfc(std::sqrt(x / 2.0));
}

// Inverse normal CDF. Acklam's rational approximation followed by one Halley
// step against erfc, which brings the result to near machine precision.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must be in (0, 1)");

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }

  // Halley refinement: cdf(x) via erfc, density in closed form.
  static const double sqrt2pi = 2.506628274631000502;
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * sqrt2pi * std::exp(x * x / 2.0);
  x = x - u / (1 + x * u / 2);
  return x;
}

// Continued fraction for the incomplete beta function (Lentz's method).
static double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 3e-16;
  double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0 && b > 0))
    throw std::invalid_argument("regularized_incomplete_beta: a, b must be > 0");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  if (x < (a + 1) / (a + b + 2)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1 - x) / b;
}

// Inverse of the regularized incomplete beta in x, by bisection. Monotone,
// so plain bisection is robust; 200 halvings exhaust double precision.
static double beta_inv(double p, double a, double b) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(mid, a, b) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-17) break;
  }
  return 0.5 * (lo + hi);
}

Ci wilson_ci(long k, long n, double confidence) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("wilson_ci: need 0 <= k <= n, n >= 1");
  double z = normal_quantile(1 - (1 - confidence) / 2);
  double nn = static_cast<double>(n);
  double p = static_cast<double>(k) / nn;
  double z2 = z * z;
  double denom = 1 + z2 / nn;
  double center = p + z2 / (2 * nn);
  double rad = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  Ci ci{(center - rad) / denom, (center + rad) / denom};
  if (k == 0) ci.lo = 0.0;
  if (k == n) ci.hi = 1.0;
  return ci;
}

Ci clopper_pearson_ci(long k, long n, double confidence) {
  if (n < 1 || k < 0 || k > n)
    throw std::invalid_argument("clopper_pearson_ci: need 0 <= k <= n, n >= 1");
  double alpha2 = (1 - confidence) / 2;
  Ci ci;
  ci.lo = (k == 0) ? 0.0 : beta_inv(alpha2, static_cast<double>(k), static_cast<double>(n - k + 1));
  ci.hi = (k == n) ? 1.0 : beta_inv(1 - alpha2, static_cast<double>(k + 1), static_cast<double>(n - k));
  return ci;
}

static std::vector<std::string> significance_labels(double p, double bonferroni_alpha) {
  std::vector<std::string> out;
  if (p < 0.05) out.push_back("0.05");
  if (p < 0.01) out.push_back("0.01");
  if (p < 0.001) out.push_back("0.001");
  if (p < bonferroni_alpha) out.push_back("bonferroni");
  return out;
}

PairedTestResult mcnemar(long b, long c, double bonferroni_alpha) {
  if (b < 0 || c < 0) throw std::invalid_argument("mcnemar: counts must be >= 0");
  if (b + c == 0) throw std::invalid_argument("mcnemar: undefined test, b + c = 0");
  double diff = std::max(std::fabs(static_cast<double>(b - c)) - 1.0, 0.0);
  PairedTestResult r;
  r.b = b;
  r.c = c;
  r.statistic = diff * diff / static_cast<double>(b + c);
  r.p = chi2_sf_1df(r.statistic);
  r.significant_at = significance_labels(r.p, bonferroni_alpha);
  return r;
}

PairedTestResult chi2_2x2(long f1, long m1, long f2, long m2,
                          double bonferroni_alpha, bool yates) {
  if (f1 < 0 || m1 < 0 || f2 < 0 || m2 < 0)
    throw std::invalid_argument("chi2_2x2: counts must be >= 0");
  double a = static_cast<double>(f1), b = static_cast<double>(m1);
  double c = static_cast<double>(f2), d = static_cast<double>(m2);
  double n = a + b + c + d;
  double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0)
    throw std::invalid_argument("chi2_2x2: undefined test, zero marginal");
  double det = std::fabs(a * d - b * c);
  if (yates) det = std::max(det - n / 2, 0.0);
  PairedTestResult r;
  r.table = {f1, m1, f2, m2};
  r.statistic = n * det * det / (r1 * r2 * c1 * c2);
  r.p = chi2_sf_1df(r.statistic);
  r.significant_at = significance_labels(r.p, bonferroni_alpha);
  return r;
}

static double percentile(const std::vector<double>& sorted, double pct) {
  double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(rank);
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

BootstrapResult bootstrap_ci(size_t n_pairs, const BootstrapStat& statistic_fn,
                             const BootstrapSpec& spec) {
  if (n_pairs < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 pairs");
  if (spec.iterations < 1) throw std::invalid_argument("bootstrap_ci: iterations must be >= 1");

  std::vector<std::optional<double>> results(spec.iterations);
  auto run_range = [&](int begin, int end) {
    std::vector<uint32_t> idx(n_pairs);
    for (int it = begin; it < end; ++it) {
      Rng rng(mix64(spec.seed, static_cast<uint64_t>(it)));
      for (size_t j = 0; j < n_pairs; ++j)
        idx[j] = static_cast<uint32_t>(rng.uniform_int(n_pairs));
      results[it] = statistic_fn(idx);
    }
  };

  int n_threads = spec.threads > 0
                      ? spec.threads
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, spec.iterations);
  if (n_threads <= 1) {
    run_range(0, spec.iterations);
  } else {
    std::vector<std::thread> pool;
    int chunk = (spec.iterations + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      int begin = t * chunk;
      int end = std::min(spec.iterations, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<double> values;
  values.reserve(results.size());
  int skipped = 0;
  for (const auto& r : results) {
    if (r)
      values.push_back(*r);
    else
      ++skipped;
  }
  if (skipped * 2 > spec.iterations)
    throw std::runtime_error("bootstrap_ci: unstable statistic, " +
                             std::to_string(skipped) + "/" +
                             std::to_string(spec.iterations) +
                             " iterations undefined");

  std::sort(values.begin(), values.end());
  BootstrapResult out;
  out.lo = percentile(values, spec.lo_pct);
  out.hi = percentile(values, spec.hi_pct);
  out.undefined_skipped = skipped;
  out.used = static_cast<int>(values.size());
  return out;
}

}  // namespace esiaudit::stats
