#pragma once
// First-order error propagation through the detector map f(w) = v w, for a
// random bivector w = p * lambda * (e123 . n_hat). The map is linear, so the
// first-order rule is exact: the mean maps through f and the spread scales by
// the unit versor v. The mean of w is a bivector and its spread is a plain
// scalar; both facts are asserted on every run.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hopfsim/epr.hpp"
#include "hopfsim/multivector.hpp"
#include "hopfsim/rng.hpp"
#include "hopfsim/stats.hpp"

namespace hopfsim {

// Spread model around a quaternion center m with scalar spread sigma. The
// normalization constant is the one-dimensional one: it integrates to 1 along
// any straight slice through m, which is how it is used here. sigma is a
// scalar by construction; density evaluation rejects anything else.
inline double gaussian_density(const Quaternion& q, const Quaternion& m, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("gaussian_density: sigma must be positive");
  const Multivector d = q.mv() - m.mv();
  return std::exp(-norm_squared(d) / (2.0 * sigma * sigma)) /
         std::sqrt(2.0 * kPi * sigma * sigma);
}

struct RandomBivectorSpec {
  double p = 1.0;     // magnitude in [0,1]
  Vector3 n_hat;      // unit axis

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("RandomBivectorSpec: p must be in [0,1]");
    if (std::abs(n_hat.norm() - 1.0) > 1e-9)
      throw std::domain_error("RandomBivectorSpec: n_hat must be a unit vector");
  }
};

// Draws w_i = p * lambda_i * (e123 . n_hat); every sample has norm p exactly.
inline std::vector<Bivector> sample_w(const RandomBivectorSpec& spec, std::uint64_t n,
                                      RngStream source) {
  spec.validate();
  if (n == 0) throw std::domain_error("sample_w: n must be >= 1");
  const Bivector base = dual(spec.n_hat) * spec.p;
  std::vector<Bivector> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    out.push_back(base * static_cast<double>(source.sign(i)));
  return out;
}

struct PropagationResult {
  Bivector m_w;                        // sample mean of w (grade 2 by assertion)
  double sigma_w = 0.0;                // sample spread of w (a scalar)
  Quaternion mean_A;                   // sample mean of f(w)
  double m_A = 0.0;                    // scalar part of mean_A
  Bivector sigma_A;                    // propagated spread: v * sigma_w
  Quaternion q_minus, q_plus;          // f(m_w -+ sigma_w) = mean_A -+ sigma_A
  double fraction_within_sigma = 0.0;  // fraction of samples with ||A - mean|| <= spread
  std::uint64_t n = 0;
};

inline PropagationResult propagate_samples(const Bivector& v, std::span<const Bivector> w) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::domain_error("propagate_samples: v must be a unit bivector");
  if (w.empty()) throw std::domain_error("propagate_samples: empty sample");
  const std::uint64_t n = w.size();

  std::vector<Multivector> w_mv;
  w_mv.reserve(n);
  for (const auto& wi : w) w_mv.push_back(wi.mv());

  const Multivector m_w_mv = mean_mv(w_mv);
  PropagationResult r;
  r.n = n;
  r.m_w = as_pure_bivector(m_w_mv);  // grade-2 assertion of the w mean
  r.sigma_w = std_mv(w_mv);

  const Multivector v_mv = v.mv();
  std::vector<Multivector> a_mv;
  a_mv.reserve(n);
  for (const auto& wi : w_mv) a_mv.push_back(gp(v_mv, wi));

  const Multivector mean_a_mv = mean_mv(a_mv);
  r.mean_A = as_quaternion(mean_a_mv);
  r.m_A = r.mean_A.s;
  r.sigma_A = v * r.sigma_w;

  // Propagated vs. empirical spread: f is a fixed unit versor, so the two
  // agree to sampling accuracy, and here to round-off.
  const double empirical = std_mv(a_mv);
  if (std::abs(empirical - r.sigma_A.norm()) > 5.0 / std::sqrt(static_cast<double>(n)))
    throw std::logic_error("propagate_samples: propagated spread disagrees with sample spread");

  // Change of perspective: the w-side interval endpoints map through f onto
  // the A-side endpoints.
  const Multivector lo = gp(v_mv, m_w_mv - scalar_mv(r.sigma_w));
  const Multivector hi = gp(v_mv, m_w_mv + scalar_mv(r.sigma_w));
  const Multivector lo_direct = mean_a_mv - r.sigma_A.mv();
  const Multivector hi_direct = mean_a_mv + r.sigma_A.mv();
  if (max_abs_diff(lo, lo_direct) > kIdentityTol || max_abs_diff(hi, hi_direct) > kIdentityTol)
    throw std::logic_error("propagate_samples: interval endpoints disagree across perspectives");
  r.q_minus = as_quaternion(lo);
  r.q_plus = as_quaternion(hi);

  // Exact coverage of the one-spread interval; no normality assumed. The
  // boundary is inclusive with a round-off allowance, since the two-point
  // distribution puts samples exactly on it.
  std::uint64_t within = 0;
  const double edge = empirical * (1.0 + 1e-12) + 1e-15;
  for (const auto& ai : a_mv)
    if (norm(ai - mean_a_mv) <= edge) ++within;
  r.fraction_within_sigma = static_cast<double>(within) / static_cast<double>(n);
  return r;
}

inline PropagationResult propagate(const Bivector& v, const RandomBivectorSpec& spec,
                                   std::uint64_t n, RngStream source) {
  const std::vector<Bivector> w = sample_w(spec, n, source);
  return propagate_samples(v, std::span<const Bivector>(w));
}

// Largest deviation between f and its first-order expansion around the sample
// mean. f is linear, so this is pure round-off.
inline double taylor_linear_check(const Bivector& v, std::span<const Bivector> w) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::domain_error("taylor_linear_check: v must be a unit bivector");
  if (w.empty()) throw std::domain_error("taylor_linear_check: empty sample");

  std::vector<Multivector> w_mv;
  w_mv.reserve(w.size());
  for (const auto& wi : w) w_mv.push_back(wi.mv());
  const Multivector m = mean_mv(w_mv);
  const Multivector v_mv = v.mv();
  const Multivector f_m = gp(v_mv, m);

  double worst = 0.0;
  for (const auto& wi : w_mv) {
    const Multivector linear = f_m + gp(v_mv, wi - m);
    worst = std::max(worst, max_abs_diff(linear, gp(v_mv, wi)));
  }
  return worst;
}

inline double taylor_linear_check(const Bivector& v, const RandomBivectorSpec& spec,
                                  std::uint64_t n, RngStream source) {
  const std::vector<Bivector> w = sample_w(spec, n, source);
  return taylor_linear_check(v, std::span<const Bivector>(w));
}

}  // namespace hopfsim
