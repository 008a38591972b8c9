#pragma once
// Four-setting string expectations, their variance-chain ceiling, and an
// exhaustive grid scan for the maximizing setting quad.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hopfsim/epr.hpp"
#include "hopfsim/multivector.hpp"
#include "hopfsim/parallel.hpp"
#include "hopfsim/rng.hpp"
#include "hopfsim/stats.hpp"

namespace hopfsim {

inline const double kQuantumLimit = 2.0 * std::sqrt(2.0);

struct AngleQuad {
  double alpha, alpha_p, beta, beta_p;  // radians
};

using Correlator = std::function<double(double, double)>;

// Closed-form correlation the standard-score estimator reproduces at any n.
inline double analytic_correlation(double alpha, double beta) {
  return -std::cos(2.0 * (alpha - beta));
}

// S = E(a,b) + E(a,b') + E(a',b) - E(a',b').
inline double chsh_string(const Correlator& corr, const AngleQuad& q) {
  return corr(q.alpha, q.beta) + corr(q.alpha, q.beta_p) + corr(q.alpha_p, q.beta) -
         corr(q.alpha_p, q.beta_p);
}

// Variance-chain ceiling in its sine form. The sine product enters through
// its magnitude: that is the envelope the string value actually respects
// (the signed form dips below 2 and under |S| on half the quads).
inline double chsh_bound_sine(const AngleQuad& q) {
  const double s1 = std::sin(2.0 * (q.alpha - q.alpha_p));
  const double s2 = std::sin(2.0 * (q.beta - q.beta_p));
  return 2.0 * std::sqrt(1.0 + std::abs(s1 * s2));
}

// Same ceiling from the setting-vector cross products.
inline double chsh_bound_cross(const AngleQuad& q) {
  const Vector3 a = setting_vector(q.alpha);
  const Vector3 ap = setting_vector(q.alpha_p);
  const Vector3 b = setting_vector(q.beta);
  const Vector3 bp = setting_vector(q.beta_p);
  return 2.0 * std::sqrt(1.0 + std::abs(dot(cross(a, ap), cross(bp, b))));
}

struct ChshReport {
  double string_value = 0.0;
  double bound_sine = 0.0;
  double bound_cross = 0.0;
  double qm_limit = kQuantumLimit;
  std::array<double, 2> commutator_norms{0.0, 0.0};
};

// Evaluates the string value from standard-score correlations over one shared
// orientation sample, rebuilds the ceiling from the per-trial commutators of
// the standard scores, and cross-checks it against the closed sine and
// cross-product forms.
inline ChshReport variance_inequality_report(const AngleQuad& q, std::uint64_t trials,
                                             RngStream source) {
  if (trials == 0) throw std::domain_error("variance_inequality_report: trials must be >= 1");

  ChshReport rep;
  const Correlator mc = [&](double a, double b) {
    return correlate_standard(a, b, trials, source).scalar_part;
  };
  rep.string_value = chsh_string(mc, q);
  rep.bound_sine = chsh_bound_sine(q);
  rep.bound_cross = chsh_bound_cross(q);

  // Per-trial commutators of the standard scores, multiplied in the trial's
  // oriented basis. Their product is a pure scalar (both commutator planes
  // are dual to e3), and its magnitude feeds the ceiling.
  std::vector<double> partial(block_count(trials), 0.0);
  std::vector<double> norm_a(block_count(trials), 0.0);
  std::vector<double> norm_b(block_count(trials), 0.0);
  for_each_block(trials, [&](std::uint64_t blk, std::uint64_t begin, std::uint64_t end) {
    double acc = 0.0, na = 0.0, nb = 0.0;
    for (std::uint64_t i = begin; i < end; ++i) {
      const Orientation o(source.sign(i));
      const Multivector a1 = standard_score_A(q.alpha, o).mv();
      const Multivector a2 = standard_score_A(q.alpha_p, o).mv();
      const Multivector b2 = standard_score_B(q.beta_p, o).mv();
      const Multivector b1 = standard_score_B(q.beta, o).mv();
      const Multivector ca =
          gp_oriented(a1, a2, o.lambda()) - gp_oriented(a2, a1, o.lambda());
      const Multivector cb =
          gp_oriented(b2, b1, o.lambda()) - gp_oriented(b1, b2, o.lambda());
      const Multivector prod = gp_oriented(ca, cb, o.lambda());
      Multivector offscalar = prod;
      offscalar.c[0] = 0.0;
      if (max_abs_coeff(offscalar) > kIdentityTol)
        throw std::logic_error("variance_inequality_report: commutator product not scalar");
      acc += std::abs(prod.c[0]);
      na = norm(ca);
      nb = norm(cb);
    }
    partial[blk] = acc;
    norm_a[blk] = na;
    norm_b[blk] = nb;
  });
  double sum = 0.0;
  for (const auto p : partial) sum += p;
  const double mean_abs = sum / static_cast<double>(trials);
  const double rhs = std::sqrt(4.0 + mean_abs);
  rep.commutator_norms = {norm_a.back(), norm_b.back()};

  if (std::abs(rhs - rep.bound_cross) > 1e-9)
    throw std::logic_error("variance_inequality_report: commutator ceiling mismatch");
  if (std::abs(rep.string_value) > rhs + kIdentityTol)
    throw std::logic_error("variance_inequality_report: string value exceeds ceiling");
  return rep;
}

// Same report without sampling: string value from the closed-form correlation
// and commutator norms from their closed forms 2|sin 2(θ − θ')|.
inline ChshReport analytic_chsh_report(const AngleQuad& q) {
  ChshReport rep;
  rep.string_value = chsh_string(analytic_correlation, q);
  rep.bound_sine = chsh_bound_sine(q);
  rep.bound_cross = chsh_bound_cross(q);
  rep.commutator_norms = {2.0 * std::abs(std::sin(2.0 * (q.alpha - q.alpha_p))),
                          2.0 * std::abs(std::sin(2.0 * (q.beta_p - q.beta)))};
  return rep;
}

struct ScanResult {
  AngleQuad quad{};       // radians
  double value = 0.0;     // |S| at the maximizer
};

// Exhaustive scan of all setting quads on a uniform grid. Ties resolve to the
// lexicographically smallest quad regardless of worker count.
inline ScanResult scan_max(double grid_step_deg, const Correlator& corr) {
  if (!(grid_step_deg > 0.0)) throw std::domain_error("scan_max: grid step must be positive");
  const double ratio = 360.0 / grid_step_deg;
  const auto n = static_cast<std::uint64_t>(std::llround(ratio));
  if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9)
    throw std::domain_error("scan_max: grid step must divide 360 degrees");
  if (n > 1024) throw std::domain_error("scan_max: grid step too fine");

  std::vector<double> angle(n);
  for (std::uint64_t i = 0; i < n; ++i) angle[i] = deg_to_rad(grid_step_deg * static_cast<double>(i));

  // Correlations are a function of the (station A, station B) angle pair only.
  std::vector<double> e(n * n);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < n; ++j) e[i * n + j] = corr(angle[i], angle[j]);

  struct Best {
    double value = -1.0;
    std::array<std::uint64_t, 4> idx{0, 0, 0, 0};
  };
  std::vector<Best> best_per_a(n);

  for_each_block(n, 1, [&](std::uint64_t blk, std::uint64_t begin, std::uint64_t end) {
    (void)blk;
    for (std::uint64_t i = begin; i < end; ++i) {
      Best local;
      const double* ei = &e[i * n];
      for (std::uint64_t ip = 0; ip < n; ++ip) {
        const double* eip = &e[ip * n];
        for (std::uint64_t j = 0; j < n; ++j) {
          const double part = ei[j];
          for (std::uint64_t jp = 0; jp < n; ++jp) {
            const double s = std::abs(part + ei[jp] + eip[j] - eip[jp]);
            if (s > local.value) local = {s, {i, ip, j, jp}};
          }
        }
      }
      best_per_a[i] = local;
    }
  });

  Best best;
  for (const auto& b : best_per_a)
    if (b.value > best.value) best = b;

  return {AngleQuad{angle[best.idx[0]], angle[best.idx[1]], angle[best.idx[2]],
                    angle[best.idx[3]]},
          best.value};
}

}  // namespace hopfsim
