#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "tamakkon/error.hpp"

namespace tamakkon::statkit {

struct KsResult {
  double d = 0.0;   // ECDF supremum distance, in [0,1]
  double p = 1.0;   // asymptotic p-value, in [0,1]
  std::size_t n = 0;
  std::size_t m = 0;
};

struct Assessment {
  double rrmse_percent = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
  std::vector<std::pair<double, double>> per_fold;  // (rrmse, mse)
};

namespace detail {

inline void require_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::NonFiniteValue, "non-finite value in sample");
    }
  }
}

// Survival function of the Kolmogorov distribution, Q(lambda) = 2*sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    if (term < 1e-16 && k > 3) break;
    sum += sign * term;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Exact conditional permutation p-value: the share of all C(n+m, n) splits of
// the pooled sample whose d reaches the observed one. Only used when the
// enumeration is small; handles ties exactly where the asymptotic series
// cannot.
inline double exact_permutation_p(const std::vector<double>& a, const std::vector<double>& b,
                                  double d_obs) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const std::size_t n = a.size(), total = pooled.size();
  const double na = static_cast<double>(n);
  const double nb = static_cast<double>(total - n);

  // d over a split of the (sorted) pool: walk runs of tied values and track
  // both ECDFs together.
  auto split_d = [&](const std::vector<char>& mask) {
    double d = 0.0;
    std::size_t i = 0, ca = 0, cb = 0;
    while (i < total) {
      const double v = pooled[i];
      while (i < total && pooled[i] == v) {
        (mask[i] ? ca : cb)++;
        ++i;
      }
      d = std::max(d, std::abs(static_cast<double>(ca) / na - static_cast<double>(cb) / nb));
    }
    return d;
  };

  std::vector<char> mask(total, 0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n), 1);
  std::sort(mask.begin(), mask.end(), std::greater<char>());
  std::size_t hits = 0, count = 0;
  do {
    if (split_d(mask) >= d_obs - 1e-12) ++hits;
    ++count;
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return static_cast<double>(hits) / static_cast<double>(count);
}

}  // namespace detail

// ECDF supremum distance evaluated at the sorted union of both samples.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Remaining tail of either sample only shrinks toward 0/1 together; the
  // supremum over union points has already been reached once one side is done.
  d = std::max(d, std::abs(1.0 - static_cast<double>(j) / nb));
  d = std::max(d, std::abs(static_cast<double>(i) / na - 1.0));
  return std::min(d, 1.0);
}

inline KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::EmptyVector, "ks_two_sample: empty sample");
  }
  detail::require_finite(a);
  detail::require_finite(b);
  KsResult r;
  r.n = a.size();
  r.m = b.size();
  r.d = ks_statistic(a, b);
  if (r.d == 0.0) {
    r.p = 1.0;
  } else if (r.n + r.m <= 16) {
    // Tiny samples: the asymptotic series is unreliable; enumerate instead.
    r.p = detail::exact_permutation_p(a, b, r.d);
  } else {
    const double ne = static_cast<double>(r.n) * static_cast<double>(r.m) /
                      static_cast<double>(r.n + r.m);
    const double sqrt_ne = std::sqrt(ne);
    const double lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * r.d;
    r.p = detail::kolmogorov_q(lambda);
  }
  return r;
}

enum class RrmseDenominator { Actual, ActualSquared };

// Relative root-mean-squared error in percent:
// sqrt( (1/N) * sum (pred_i - act_i)^2 / act_i ) * 100 for the default denominator.
inline double rrmse(const std::vector<double>& predicted, const std::vector<double>& actual,
                    RrmseDenominator denom = RrmseDenominator::Actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, "rrmse: length mismatch");
  }
  if (predicted.empty()) {
    throw Error(ErrorCode::LengthMismatch, "rrmse: empty vectors");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (actual[i] <= 0.0) {
      throw Error(ErrorCode::NonPositiveActual, "rrmse: actual value must be > 0");
    }
    const double r = predicted[i] - actual[i];
    const double den = denom == RrmseDenominator::Actual ? actual[i] : actual[i] * actual[i];
    acc += r * r / den;
  }
  return std::sqrt(acc / static_cast<double>(predicted.size())) * 100.0;
}

inline double mse(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, "mse: length mismatch");
  }
  if (predicted.empty()) {
    throw Error(ErrorCode::LengthMismatch, "mse: empty vectors");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double r = predicted[i] - actual[i];
    acc += r * r;
  }
  return acc / static_cast<double>(predicted.size());
}

// Disjoint covering folds with sizes differing by at most one.
// Deterministic for a fixed (n, k, seed).
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                         std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw Error(ErrorCode::KTooLarge, "kfold_split: need 2 <= k <= n");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    folds[i % k].push_back(idx[i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace tamakkon::statkit
