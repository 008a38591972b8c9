#pragma once
// Estimators over simulated trials. Every accumulation that crosses trials is
// cut into fixed blocks (parallel.hpp) and folded in block order, and the
// per-trial sums that decide results are integers, so outputs are
// bit-identical for any worker count.
//
// Hot loops use the algebraic short forms of the per-trial products; every
// trial in debug builds, and one in 1024 in release builds, is revalidated
// through the full geometric-product route.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hopfsim/epr.hpp"
#include "hopfsim/multivector.hpp"
#include "hopfsim/parallel.hpp"
#include "hopfsim/rng.hpp"

namespace hopfsim {

#ifdef NDEBUG
inline constexpr std::uint64_t kValidateStride = 1024;
#else
inline constexpr std::uint64_t kValidateStride = 1;
#endif

inline std::vector<Orientation> sample_orientations(std::uint64_t n, RngStream source) {
  if (n == 0) throw std::domain_error("sample_orientations: n must be >= 1");
  std::vector<Orientation> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(Orientation(source.sign(i)));
  return out;
}

inline Multivector mean_mv(std::span<const Multivector> xs) {
  if (xs.empty()) throw std::domain_error("mean_mv: empty sample");
  Multivector s;
  for (const auto& x : xs) s = s + x;
  return s * (1.0 / static_cast<double>(xs.size()));
}

// Population spread: sqrt of the mean squared distance from the mean, distance
// being the algebra norm. Computed from single-pass sufficient statistics;
// always a plain scalar regardless of the sample's grades.
inline double std_mv(std::span<const Multivector> xs) {
  if (xs.empty()) throw std::domain_error("std_mv: empty sample");
  double sum_n2 = 0.0;
  Multivector sum;
  for (const auto& x : xs) {
    sum = sum + x;
    sum_n2 += norm_squared(x);
  }
  const double n = static_cast<double>(xs.size());
  const Multivector mean = sum * (1.0 / n);
  const double var = sum_n2 / n - norm_squared(mean);
  return std::sqrt(var > 0.0 ? var : 0.0);
}

// Standardization by left division: sigma^-1 (raw - mean).
inline Multivector zscore(const Multivector& raw, const Multivector& mean,
                          const Multivector& sigma) {
  return gp(inverse(sigma), raw - mean);
}

struct CorrelationEstimate {
  double scalar_part = 0.0;
  Bivector bivector_residual;
  std::uint64_t n = 0;
  double standard_error = 0.0;

  double residual_norm() const { return bivector_residual.norm(); }
};

// Mean raw score of one station over n trials: +lambda at station A. With the
// integer accumulation the result is the exact count ratio.
inline double expectation_single(double angle, std::uint64_t n, RngStream source) {
  if (n == 0) throw std::domain_error("expectation_single: n must be >= 1");
  std::vector<std::int64_t> partial(block_count(n), 0);
  for_each_block(n, [&](std::uint64_t blk, std::uint64_t begin, std::uint64_t end) {
    std::int64_t s = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      const int lam = source.sign(i);
      if (i % kValidateStride == 0) {
        if (raw_score_A(angle, Orientation(lam)) != lam)
          throw std::logic_error("expectation_single: raw score validation failed");
      }
      s += lam;
    }
    partial[blk] = s;
  });
  std::int64_t total = 0;
  for (const auto p : partial) total += p;
  return static_cast<double>(total) / static_cast<double>(n);
}

inline double expectation_single(double angle, std::span<const Orientation> sample) {
  if (sample.empty()) throw std::domain_error("expectation_single: empty sample");
  std::int64_t total = 0;
  for (const auto o : sample) {
    const int lam = o.lambda();
    if (raw_score_A(angle, o) != lam)
      throw std::logic_error("expectation_single: raw score validation failed");
    total += lam;
  }
  return static_cast<double>(total) / static_cast<double>(sample.size());
}

// Mean of the standard-score products over n trials. A trial's product is
//   s + lambda_i * b,  s = -cos 2(alpha-beta),  b = sin 2(alpha-beta) e12,
// so the sample mean is s + mean(lambda) * b: the scalar part reproduces the
// correlation exactly at any n and the bivector residual shrinks with the
// orientation imbalance.
inline CorrelationEstimate correlate_standard(double alpha, double beta, std::uint64_t n,
                                              RngStream source) {
  if (n == 0) throw std::domain_error("correlate_standard: n must be >= 1");
  const ScoreProductParts parts = score_product_parts(alpha, beta);

  std::vector<std::int64_t> partial(block_count(n), 0);
  for_each_block(n, [&](std::uint64_t blk, std::uint64_t begin, std::uint64_t end) {
    std::int64_t s = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      const int lam = source.sign(i);
      if (i % kValidateStride == 0) {
        const Quaternion q = score_product(alpha, beta, Orientation(lam));
        const Multivector rebuilt =
            scalar_mv(parts.scalar) + (parts.bivector_at_plus * static_cast<double>(lam)).mv();
        if (max_abs_diff(q.mv(), rebuilt) > kIdentityTol)
          throw std::logic_error("correlate_standard: product validation failed");
      }
      s += lam;
    }
    partial[blk] = s;
  });
  std::int64_t total = 0;
  for (const auto p : partial) total += p;

  const double lam_mean = static_cast<double>(total) / static_cast<double>(n);
  CorrelationEstimate est;
  est.scalar_part = parts.scalar;
  est.bivector_residual = parts.bivector_at_plus * lam_mean;
  est.n = n;
  const double lam_var = 1.0 - lam_mean * lam_mean;
  est.standard_error = parts.bivector_at_plus.norm() *
                       std::sqrt(lam_var > 0.0 ? lam_var : 0.0) /
                       std::sqrt(static_cast<double>(n));
  return est;
}

// Same estimate from an explicit orientation sample; every trial is validated
// through the full product form.
inline CorrelationEstimate correlate_standard(double alpha, double beta,
                                              std::span<const Orientation> sample) {
  if (sample.empty()) throw std::domain_error("correlate_standard: empty sample");
  const ScoreProductParts parts = score_product_parts(alpha, beta);
  std::int64_t total = 0;
  for (const auto o : sample) {
    const Quaternion q = score_product(alpha, beta, o);
    const Multivector rebuilt =
        scalar_mv(parts.scalar) + (parts.bivector_at_plus * static_cast<double>(o.lambda())).mv();
    if (max_abs_diff(q.mv(), rebuilt) > kIdentityTol)
      throw std::logic_error("correlate_standard: product validation failed");
    total += o.lambda();
  }
  const double lam_mean = static_cast<double>(total) / static_cast<double>(sample.size());
  CorrelationEstimate est;
  est.scalar_part = parts.scalar;
  est.bivector_residual = parts.bivector_at_plus * lam_mean;
  est.n = sample.size();
  const double lam_var = 1.0 - lam_mean * lam_mean;
  est.standard_error = parts.bivector_at_plus.norm() * std::sqrt(lam_var > 0.0 ? lam_var : 0.0) /
                       std::sqrt(static_cast<double>(sample.size()));
  return est;
}

// Covariance of the raw scores left-divided by the product of their
// standard-deviation bivectors, sigma_A(alpha) sigma_B(beta) = a~ b~. The raw
// product is identically -1, so the covariance is -1 - mean_A * mean_B and
// the estimator's spread comes only from the single-station means.
inline CorrelationEstimate correlate_raw_normalized(double alpha, double beta, std::uint64_t n,
                                                    RngStream source) {
  if (n == 0) throw std::domain_error("correlate_raw_normalized: n must be >= 1");

  std::vector<std::int64_t> partial(block_count(n), 0);
  for_each_block(n, [&](std::uint64_t blk, std::uint64_t begin, std::uint64_t end) {
    std::int64_t s = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      const int lam = source.sign(i);
      if (i % kValidateStride == 0) {
        const Orientation o(lam);
        if (raw_score_A(alpha, o) * raw_score_B(beta, o) != -1)
          throw std::logic_error("correlate_raw_normalized: raw product validation failed");
      }
      s += lam;
    }
    partial[blk] = s;
  });
  std::int64_t total = 0;
  for (const auto p : partial) total += p;

  const double lam_mean = static_cast<double>(total) / static_cast<double>(n);
  const double mean_a = lam_mean;    // raw A = lambda
  const double mean_b = -lam_mean;   // raw B = -lambda
  const double cov = -1.0 - mean_a * mean_b;

  const Multivector sigma_prod = gp(sigma_raw_A(alpha).mv(), sigma_raw_B(beta).mv());
  const Multivector q = gp(inverse(sigma_prod), scalar_mv(cov));

  CorrelationEstimate est;
  est.scalar_part = q.c[0];
  est.bivector_residual = as_pure_bivector(q - scalar_mv(q.c[0]));
  est.n = n;
  est.standard_error = 0.0;  // per-trial raw products are constant
  return est;
}

struct CoincidenceCounts {
  std::uint64_t pp = 0, pm = 0, mp = 0, mm = 0;

  std::uint64_t total() const { return pp + pm + mp + mm; }
};

inline CoincidenceCounts coincidence_counts(std::span<const TrialOutcome> records) {
  CoincidenceCounts c;
  for (const auto& r : records) {
    if (r.raw_a == +1 && r.raw_b == +1) ++c.pp;
    else if (r.raw_a == +1 && r.raw_b == -1) ++c.pm;
    else if (r.raw_a == -1 && r.raw_b == +1) ++c.mp;
    else if (r.raw_a == -1 && r.raw_b == -1) ++c.mm;
    else throw std::domain_error("coincidence_counts: outcome is not +-1");
  }
  return c;
}

// Count-based coincidence estimator: (C++ + C-- - C+- - C-+) / total.
inline double coincidence_correlate(std::span<const TrialOutcome> records) {
  if (records.empty()) throw std::domain_error("coincidence_correlate: empty record set");
  const CoincidenceCounts c = coincidence_counts(records);
  const std::int64_t num = static_cast<std::int64_t>(c.pp) + static_cast<std::int64_t>(c.mm) -
                           static_cast<std::int64_t>(c.pm) - static_cast<std::int64_t>(c.mp);
  return static_cast<double>(num) / static_cast<double>(c.total());
}

// Per-trial records at fixed settings, for the count-based estimator.
inline std::vector<TrialOutcome> sample_trial_records(double alpha, double beta, std::uint64_t n,
                                                      const RngStream& source) {
  if (n == 0) throw std::domain_error("sample_trial_records: need at least one trial");
  std::vector<TrialOutcome> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const int lam = source.sign(i);
    TrialOutcome t;
    t.lambda = static_cast<std::int8_t>(lam);
    t.alpha = alpha;
    t.beta = beta;
    t.raw_a = static_cast<std::int8_t>(lam);
    t.raw_b = static_cast<std::int8_t>(-lam);
    if (i % kValidateStride == 0) {
      const Orientation o(lam);
      if (raw_score_A(alpha, o) != t.raw_a || raw_score_B(beta, o) != t.raw_b)
        throw std::logic_error("sample_trial_records: outcome validation failed");
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace hopfsim
