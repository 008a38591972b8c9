#pragma once
// Two-station outcome model on the unit quaternions.
//
// The shared random state of a trial is the handedness of space, lambda in
// {-1,+1}; mu = lambda * e123 is the trial's volume element. A station with
// polarizer angle alpha acts along the doubled-angle direction
//   a~ = e1 cos(2 alpha) + e2 sin(2 alpha),
// and its detector events are values of bivector products in the subalgebra
// whose basis mu fixes. Products of subalgebra elements are therefore taken
// with gp_oriented(..., lambda): the handedness of the trial decides the
// handedness of the product table.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "hopfsim/multivector.hpp"

namespace hopfsim {

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double d) { return d * (kPi / 180.0); }
inline double rad_to_deg(double r) { return r * (180.0 / kPi); }

// Trial handedness. Not part of Multivector: it parameterizes call sites.
class Orientation {
 public:
  explicit constexpr Orientation(int lambda) : lambda_(static_cast<std::int8_t>(lambda)) {
    if (lambda != -1 && lambda != +1)
      throw std::domain_error("Orientation: lambda must be -1 or +1");
  }
  static constexpr Orientation right() { return Orientation(+1); }
  static constexpr Orientation left() { return Orientation(-1); }

  constexpr int lambda() const { return lambda_; }
  Multivector mu() const { return pseudoscalar_mv() * static_cast<double>(lambda_); }

 private:
  std::int8_t lambda_;
};

// Doubled-angle setting direction in the e1-e2 plane.
inline Vector3 setting_vector(double angle_rad) {
  if (!std::isfinite(angle_rad)) throw std::domain_error("setting_vector: non-finite angle");
  return {std::cos(2.0 * angle_rad), std::sin(2.0 * angle_rad), 0.0};
}

// Dual plane of the setting direction: the detector bivector mu . a~ at
// lambda = +1.
inline Bivector setting_bivector(double angle_rad) { return dual(setting_vector(angle_rad)); }

// Standard-deviation bivectors of the raw scores. These are the deterministic
// unit-bivector factors the raw scores carry around their +-1 value.
inline Bivector sigma_raw_A(double alpha) { return -setting_bivector(alpha); }
inline Bivector sigma_raw_B(double beta) { return setting_bivector(beta); }

namespace detail {

// Checks a full-product evaluation collapsed to the scalar +-1 it must be.
inline int collapse_to_sign(const Multivector& q, const char* what) {
  Multivector offscalar = q;
  offscalar.c[0] = 0.0;
  if (max_abs_coeff(offscalar) > kIdentityTol)
    throw std::logic_error(std::string(what) + ": non-scalar residue in outcome product");
  const double s = q.c[0];
  if (std::abs(std::abs(s) - 1.0) > kIdentityTol)
    throw std::logic_error(std::string(what) + ": outcome magnitude is not 1");
  return s > 0 ? +1 : -1;
}

}  // namespace detail

// Station A raw score: (-e123 . a~)(+mu . a~), evaluated as the full geometric
// product and collapsed to its exact +-1 scalar. Equals lambda.
inline int raw_score_A(double alpha, Orientation o) {
  const Bivector ia = setting_bivector(alpha);
  const Multivector q = gp((-ia).mv(), ia.mv() * static_cast<double>(o.lambda()));
  return detail::collapse_to_sign(q, "raw_score_A");
}

// Station B raw score: (+e123 . b~)(+mu . b~). Equals -lambda.
inline int raw_score_B(double beta, Orientation o) {
  const Bivector ib = setting_bivector(beta);
  const Multivector q = gp(ib.mv(), ib.mv() * static_cast<double>(o.lambda()));
  return detail::collapse_to_sign(q, "raw_score_B");
}

// Standard score of a station: its raw score left-divided by the station's
// standard-deviation bivector. Checked against the direct form mu . a~.
inline Bivector standard_score_A(double alpha, Orientation o) {
  const Multivector z =
      gp(inverse(sigma_raw_A(alpha).mv()), scalar_mv(static_cast<double>(raw_score_A(alpha, o))));
  const Bivector direct = setting_bivector(alpha) * static_cast<double>(o.lambda());
  if (max_abs_diff(z, direct.mv()) > kIdentityTol)
    throw std::logic_error("standard_score_A: division route disagrees with mu . a~");
  return as_pure_bivector(z);
}

inline Bivector standard_score_B(double beta, Orientation o) {
  const Multivector z =
      gp(inverse(sigma_raw_B(beta).mv()), scalar_mv(static_cast<double>(raw_score_B(beta, o))));
  const Bivector direct = setting_bivector(beta) * static_cast<double>(o.lambda());
  if (max_abs_diff(z, direct.mv()) > kIdentityTol)
    throw std::logic_error("standard_score_B: division route disagrees with mu . b~");
  return as_pure_bivector(z);
}

// Product of the two standard scores in the trial's oriented basis:
//   -cos 2(alpha-beta) + (mu . e3) sin 2(alpha-beta).
// The scalar part is the handedness-independent correlation term; the
// bivector part carries lambda and cancels over balanced trials.
inline Quaternion score_product(double alpha, double beta, Orientation o) {
  const Multivector prod = gp_oriented(standard_score_A(alpha, o).mv(),
                                       standard_score_B(beta, o).mv(), o.lambda());
  const double delta2 = 2.0 * (alpha - beta);
  Multivector expect = scalar_mv(-std::cos(delta2));
  expect.c[6] = o.lambda() * std::sin(delta2);
  if (max_abs_diff(prod, expect) > kIdentityTol)
    throw std::logic_error("score_product: product disagrees with closed form");
  return as_quaternion(prod);
}

// Scalar and bivector pieces of the score product without building the
// standard scores; used by the estimators' accumulation loops. The bivector
// piece is the lambda = +1 value; a trial's product is s + lambda * b.
struct ScoreProductParts {
  double scalar;
  Bivector bivector_at_plus;
};

inline ScoreProductParts score_product_parts(double alpha, double beta) {
  const Vector3 a = setting_vector(alpha);
  const Vector3 b = setting_vector(beta);
  return {-dot(a, b), -dual(cross(a, b))};
}

// Detector reading of station B predicted by parallel-transporting station A's
// limiting quaternion along the rotor a~ b~. The transported cross-plane
// bivector is exactly null in the coincident limit and is discarded; the
// surviving scalar is -lambda cos 2(alpha - beta).
inline double rotor_transport_prediction(double alpha, double beta, Orientation o) {
  const Vector3 a = setting_vector(alpha);
  const Vector3 b = setting_vector(beta);
  const Quaternion rotor = rotor_between(a, b);
  // Limiting quaternion at station A: (+e123 . a~)(+mu . a~') with a~' -> a~.
  const Bivector ia = setting_bivector(alpha);
  const Multivector limit = gp(ia.mv(), ia.mv() * static_cast<double>(o.lambda()));
  const Multivector carried = transport(limit, rotor);
  return carried.scalar_part();
}

// One completed trial as both stations and the source saw it.
struct TrialOutcome {
  std::int8_t lambda;
  double alpha;  // radians
  double beta;   // radians
  std::int8_t raw_a;
  std::int8_t raw_b;
};

}  // namespace hopfsim
