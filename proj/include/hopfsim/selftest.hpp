#pragma once
// Runtime identity suite behind the `verify` subcommand. Each family checks a
// defining property of the algebra or the model from first principles, so a
// miscompiled table or a bad platform surface fails loudly before any longer
// run is trusted.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hopfsim/chsh.hpp"
#include "hopfsim/epr.hpp"
#include "hopfsim/error_prop.hpp"
#include "hopfsim/multivector.hpp"
#include "hopfsim/rng.hpp"
#include "hopfsim/stats.hpp"

namespace hopfsim::selftest {

struct SelfCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline Multivector random_mv(const RngStream& s, std::uint64_t& counter) {
  Multivector m;
  for (auto& c : m.c) c = 2.0 * s.u01(counter++) - 1.0;
  return m;
}

inline Multivector basis_blade(int slot) {
  Multivector m;
  m.c[static_cast<std::size_t>(slot)] = 1.0;
  return m;
}

inline SelfCheck clifford_relations() {
  double worst = 0.0;
  // Vector anticommutators and the central, square -1 pseudoscalar.
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      const Multivector anti =
          gp(basis_vector_mv(j), basis_vector_mv(k)) + gp(basis_vector_mv(k), basis_vector_mv(j));
      const Multivector want = scalar_mv(j == k ? 2.0 : 0.0);
      worst = std::max(worst, max_abs_diff(anti, want));
    }
  }
  const Multivector i2 = gp(pseudoscalar_mv(), pseudoscalar_mv());
  worst = std::max(worst, max_abs_diff(i2, scalar_mv(-1.0)));
  for (int s = 0; s < 8; ++s) {
    const Multivector b = basis_blade(s);
    worst = std::max(worst,
                     max_abs_diff(gp(pseudoscalar_mv(), b), gp(b, pseudoscalar_mv())));
  }
  // Associativity over every basis triple pins the product table down.
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      for (int c = 0; c < 8; ++c) {
        const Multivector lhs = gp(gp(basis_blade(a), basis_blade(b)), basis_blade(c));
        const Multivector rhs = gp(basis_blade(a), gp(basis_blade(b), basis_blade(c)));
        worst = std::max(worst, max_abs_diff(lhs, rhs));
      }
  return {"clifford-relations", worst <= 1e-12, "max deviation " + std::to_string(worst)};
}

inline SelfCheck fuzzed_algebra() {
  const RngStream s{0xC0FFEE, 0};
  std::uint64_t ctr = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Multivector a = random_mv(s, ctr);
    const Multivector b = random_mv(s, ctr);
    const Multivector c = random_mv(s, ctr);
    worst = std::max(worst, max_abs_diff(gp(gp(a, b), c), gp(a, gp(b, c))));
    worst = std::max(worst, max_abs_diff(gp(a, b + c), gp(a, b) + gp(a, c)));
    worst = std::max(worst, max_abs_diff(gp(reverse(b), reverse(a)), reverse(gp(a, b))));
    Multivector parts;
    for (int g = 0; g <= 3; ++g) parts = parts + grade(a, g);
    worst = std::max(worst, max_abs_diff(parts, a));
  }
  return {"fuzzed-algebra", worst <= 1e-12, "max deviation " + std::to_string(worst)};
}

inline SelfCheck orientation_table() {
  double worst = 0.0;
  for (const int lam : {+1, -1}) {
    const Orientation o(lam);
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        const Multivector lhs = gp_oriented(gp(o.mu(), basis_vector_mv(j)),
                                            gp(o.mu(), basis_vector_mv(k)), lam);
        Multivector want = scalar_mv(j == k ? -1.0 : 0.0);
        const int l = 3 - j - k;
        if (j != k) {
          const double eps = (k == (j + 1) % 3) ? 1.0 : -1.0;
          want = want - gp(o.mu(), basis_vector_mv(l)) * eps;
        }
        worst = std::max(worst, max_abs_diff(lhs, want));
      }
    }
  }
  return {"orientation-table", worst <= 1e-12, "max deviation " + std::to_string(worst)};
}

inline SelfCheck outcome_scores() {
  for (int deg = 0; deg < 360; ++deg) {
    const double ang = deg_to_rad(static_cast<double>(deg));
    for (const int lam : {+1, -1}) {
      const Orientation o(lam);
      if (raw_score_A(ang, o) != lam) return {"outcome-scores", false, "A != lambda"};
      if (raw_score_B(ang, o) != -lam) return {"outcome-scores", false, "B != -lambda"};
    }
  }
  return {"outcome-scores", true, "360-angle grid, both orientations"};
}

inline SelfCheck standard_scores() {
  double worst = 0.0;
  for (int deg = 0; deg < 360; deg += 5) {
    const double ang = deg_to_rad(static_cast<double>(deg));
    for (const int lam : {+1, -1}) {
      const Orientation o(lam);
      const Multivector direct = gp(o.mu(), setting_vector(ang).mv());
      worst = std::max(worst, max_abs_diff(standard_score_A(ang, o).mv(), direct));
      const Quaternion q = score_product(ang, ang + 0.3, o);
      worst = std::max(worst, std::abs(q.norm() - 1.0));
    }
  }
  return {"standard-scores", worst <= 1e-12, "max deviation " + std::to_string(worst)};
}

inline SelfCheck correlation_exactness() {
  const RngStream source{99, kStreamSource};
  double worst = 0.0;
  for (const double pair : {0.0, 10.0, 22.5, 45.0, 67.5, 90.0}) {
    const double beta = deg_to_rad(pair);
    const auto est = correlate_standard(0.0, beta, 7, source);
    worst = std::max(worst, std::abs(est.scalar_part + std::cos(2.0 * beta)));
  }
  // Balanced orientations kill the residual outright.
  const std::vector<Orientation> balanced{Orientation(+1), Orientation(-1)};
  const auto est = correlate_standard(0.0, deg_to_rad(22.5), balanced);
  worst = std::max(worst, est.residual_norm());
  return {"correlation-exactness", worst <= 1e-12, "max deviation " + std::to_string(worst)};
}

inline SelfCheck chsh_bounds() {
  const RngStream s{0xB0B, 0};
  double worst = 0.0;
  bool range_ok = true;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const AngleQuad q{s.u01(4 * i) * 2.0 * kPi, s.u01(4 * i + 1) * 2.0 * kPi,
                      s.u01(4 * i + 2) * 2.0 * kPi, s.u01(4 * i + 3) * 2.0 * kPi};
    const double bs = chsh_bound_sine(q);
    const double bc = chsh_bound_cross(q);
    worst = std::max(worst, std::abs(bs - bc));
    if (bs < 2.0 - 1e-12 || bs > kQuantumLimit + 1e-12) range_ok = false;
  }
  return {"chsh-bounds", worst <= 1e-12 && range_ok,
          "max sine/cross gap " + std::to_string(worst)};
}

inline SelfCheck propagation_linearity() {
  const RngStream source{5, kStreamSource};
  const RandomBivectorSpec spec{1.0, Vector3{0.0, 0.0, 1.0}};
  const double dev = taylor_linear_check(dual(spec.n_hat), spec, 1000, source);
  const PropagationResult res = propagate(dual(spec.n_hat), spec, 1000, source);
  const bool frac_ok = res.fraction_within_sigma >= 0.45 && res.fraction_within_sigma <= 1.0;
  return {"propagation-linearity", dev <= 1e-12 && frac_ok,
          "taylor deviation " + std::to_string(dev)};
}

inline SelfCheck rng_goldens() {
  // Frozen outputs of the counter mix; a platform that disagrees here cannot
  // reproduce any published run.
  const bool ok = rng_word(42, 0, 0) == 0xb29ed950786f5ae3ull &&
                  rng_word(42, 0, 1) == 0x57e1faba65107204ull &&
                  rng_word(42, 0, 2) == 0xf4abd143feb24055ull &&
                  rng_word(42, 0, 1000000) == 0xeb875d5a6b5c7be4ull &&
                  rng_word(42, 1, 0) == 0x761a44e8f7283712ull &&
                  rng_word(7, 4, 3) == 0x212a1de1dc606df9ull;
  return {"rng-goldens", ok, "six frozen 64-bit words"};
}

}  // namespace detail

inline std::vector<SelfCheck> run_self_checks() {
  return {detail::clifford_relations(),  detail::fuzzed_algebra(),
          detail::orientation_table(),   detail::outcome_scores(),
          detail::standard_scores(),     detail::correlation_exactness(),
          detail::chsh_bounds(),         detail::propagation_linearity(),
          detail::rng_goldens()};
}

}  // namespace hopfsim::selftest
