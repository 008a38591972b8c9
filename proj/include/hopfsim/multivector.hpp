#pragma once
// Dense multivector arithmetic for the graded algebra of Euclidean 3-space.
//
// Coefficient slots, in fixed order:
//   0: 1      1: e1     2: e2     3: e3
//   4: e2^e3  5: e3^e1  6: e1^e2  7: e1^e2^e3
//
// The bivector in slot 3+k is the dual plane of the vector in slot k, so
// multiplying a vector by the unit volume element is a slot copy. All unit
// bivectors and the volume element square to -1.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hopfsim {

// Round-off budget for identities built from sums of at most a few products.
inline constexpr double kIdentityTol = 1e-12;

struct Multivector {
  std::array<double, 8> c{};

  double scalar_part() const { return c[0]; }

  Multivector operator-() const {
    Multivector r;
    for (int i = 0; i < 8; ++i) r.c[i] = -c[i];
    return r;
  }
  Multivector operator+(const Multivector& o) const {
    Multivector r;
    for (int i = 0; i < 8; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Multivector operator-(const Multivector& o) const {
    Multivector r;
    for (int i = 0; i < 8; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Multivector operator*(double s) const {
    Multivector r;
    for (int i = 0; i < 8; ++i) r.c[i] = c[i] * s;
    return r;
  }
};

inline Multivector operator*(double s, const Multivector& a) { return a * s; }

inline Multivector scalar_mv(double s) {
  Multivector r;
  r.c[0] = s;
  return r;
}

inline Multivector basis_vector_mv(int k) {
  if (k < 0 || k > 2) throw std::domain_error("basis_vector_mv: index out of range");
  Multivector r;
  r.c[1 + k] = 1.0;
  return r;
}

inline Multivector basis_bivector_mv(int k) {
  if (k < 0 || k > 2) throw std::domain_error("basis_bivector_mv: index out of range");
  Multivector r;
  r.c[4 + k] = 1.0;
  return r;
}

inline Multivector pseudoscalar_mv() {
  Multivector r;
  r.c[7] = 1.0;
  return r;
}

namespace detail {

// Blade masks per slot (bit i set = basis vector e_{i+1} is a factor) and the
// parity of the slot blade relative to the index-ascending factor order.
// Slot 5 holds e3^e1, the reversed pair, hence its -1.
inline constexpr std::array<unsigned, 8> kSlotMask = {0b000, 0b001, 0b010, 0b100,
                                                      0b110, 0b101, 0b011, 0b111};
inline constexpr std::array<int, 8> kSlotSign = {+1, +1, +1, +1, +1, -1, +1, +1};
inline constexpr std::array<int, 8> kMaskToSlot = {0, 1, 2, 6, 3, 5, 4, 7};
inline constexpr std::array<int, 8> kSlotGrade = {0, 1, 1, 1, 2, 2, 2, 3};

// Sign of reordering the concatenation of two ascending factor lists into one
// ascending list: counts the transpositions needed to move each factor of b
// past the higher factors of a.
constexpr int reorder_sign(unsigned a, unsigned b) {
  int swaps = 0;
  for (unsigned t = a >> 1; t != 0; t >>= 1) swaps += std::popcount(t & b);
  return (swaps & 1) ? -1 : +1;
}

struct ProductEntry {
  std::int8_t slot;
  std::int8_t sign;
};

constexpr std::array<std::array<ProductEntry, 8>, 8> make_product_table() {
  std::array<std::array<ProductEntry, 8>, 8> t{};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const unsigned mi = kSlotMask[i];
      const unsigned mj = kSlotMask[j];
      const int target = kMaskToSlot[mi ^ mj];
      // Shared factors square to +1 (Euclidean metric) and drop out; only the
      // reordering parity and the slot parities contribute sign.
      const int sign = kSlotSign[i] * kSlotSign[j] * kSlotSign[target] * reorder_sign(mi, mj);
      t[i][j] = ProductEntry{static_cast<std::int8_t>(target), static_cast<std::int8_t>(sign)};
    }
  }
  return t;
}

inline constexpr auto kProductTable = make_product_table();

}  // namespace detail

inline Multivector gp(const Multivector& a, const Multivector& b) {
  Multivector r;
  for (int i = 0; i < 8; ++i) {
    if (a.c[i] == 0.0) continue;
    for (int j = 0; j < 8; ++j) {
      const auto e = detail::kProductTable[i][j];
      r.c[e.slot] += e.sign * a.c[i] * b.c[j];
    }
  }
  return r;
}

inline Multivector operator*(const Multivector& a, const Multivector& b) { return gp(a, b); }

// Exterior part of the product: keeps only blade pairs with no shared factor.
inline Multivector wedge(const Multivector& a, const Multivector& b) {
  Multivector r;
  for (int i = 0; i < 8; ++i) {
    if (a.c[i] == 0.0) continue;
    for (int j = 0; j < 8; ++j) {
      if ((detail::kSlotMask[i] & detail::kSlotMask[j]) != 0) continue;
      const auto e = detail::kProductTable[i][j];
      r.c[e.slot] += e.sign * a.c[i] * b.c[j];
    }
  }
  return r;
}

// Grade-lowering part of the product: keeps the |grade(a)-grade(b)| component
// of each blade pair, scalars included. For two vectors this is the ordinary
// dot product; against the volume element it produces the dual blade.
inline Multivector inner(const Multivector& a, const Multivector& b) {
  Multivector r;
  for (int i = 0; i < 8; ++i) {
    if (a.c[i] == 0.0) continue;
    for (int j = 0; j < 8; ++j) {
      const int gi = detail::kSlotGrade[i];
      const int gj = detail::kSlotGrade[j];
      const int gprod = std::popcount(detail::kSlotMask[i] ^ detail::kSlotMask[j]);
      if (gprod != (gi > gj ? gi - gj : gj - gi)) continue;
      const auto e = detail::kProductTable[i][j];
      r.c[e.slot] += e.sign * a.c[i] * b.c[j];
    }
  }
  return r;
}

// Product taken in the basis whose handedness is fixed by the sign argument.
// The left-handed algebra is the opposite algebra of the right-handed one, and
// reversion is the isomorphism between them, so flipping handedness is exactly
// swapping the factor order.
inline Multivector gp_oriented(const Multivector& a, const Multivector& b, int handedness) {
  if (handedness == +1) return gp(a, b);
  if (handedness == -1) return gp(b, a);
  throw std::domain_error("gp_oriented: handedness must be +1 or -1");
}

inline Multivector grade(const Multivector& a, int k) {
  if (k < 0 || k > 3) throw std::domain_error("grade: k must be in 0..3");
  Multivector r;
  for (int i = 0; i < 8; ++i)
    if (detail::kSlotGrade[i] == k) r.c[i] = a.c[i];
  return r;
}

inline Multivector reverse(const Multivector& a) {
  Multivector r = a;
  for (int i = 4; i < 8; ++i) r.c[i] = -r.c[i];  // grades 2 and 3 flip
  return r;
}

inline double norm_squared(const Multivector& a) {
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += a.c[i] * a.c[i];
  return s;
}

inline double norm(const Multivector& a) { return std::sqrt(norm_squared(a)); }

inline double max_abs_diff(const Multivector& a, const Multivector& b) {
  double m = 0.0;
  for (int i = 0; i < 8; ++i) m = std::max(m, std::abs(a.c[i] - b.c[i]));
  return m;
}

inline double max_abs_coeff(const Multivector& a) {
  double m = 0.0;
  for (int i = 0; i < 8; ++i) m = std::max(m, std::abs(a.c[i]));
  return m;
}

// Inverse of a versor: reverse over squared norm. Elements whose product with
// their own reverse is not a positive scalar have no inverse here and are
// rejected, as is anything with vanishing norm.
inline Multivector inverse(const Multivector& a) {
  const double n2 = norm_squared(a);
  if (!(n2 > 0.0)) throw std::domain_error("inverse: zero or non-finite element");
  const Multivector p = gp(a, reverse(a));
  Multivector offdiag = p;
  offdiag.c[0] = 0.0;
  if (max_abs_coeff(offdiag) > kIdentityTol * std::max(1.0, std::abs(p.c[0])))
    throw std::domain_error("inverse: element is not a versor");
  const Multivector inv = reverse(a) * (1.0 / p.c[0]);
  if (max_abs_diff(gp(inv, a), scalar_mv(1.0)) > 1e-9)
    throw std::domain_error("inverse: left-inverse check failed");
  return inv;
}

inline Multivector commutator(const Multivector& x, const Multivector& y) {
  return gp(x, y) - gp(y, x);
}

// ---------------------------------------------------------------------------
// Narrow views used by the model layer.

struct Vector3 {
  double x = 0, y = 0, z = 0;

  Multivector mv() const {
    Multivector r;
    r.c[1] = x;
    r.c[2] = y;
    r.c[3] = z;
    return r;
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vector3 operator-() const { return {-x, -y, -z}; }
  Vector3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(const Vector3& a, const Vector3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Right-handed cross product. The left-handed one is its negation; duality
// against -e123 needs the left-handed rule to come out sign-correct.
inline Vector3 cross(const Vector3& a, const Vector3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

struct Bivector {
  // Components on e2^e3, e3^e1, e1^e2 (dual to e1, e2, e3 in that order).
  double yz = 0, zx = 0, xy = 0;

  Multivector mv() const {
    Multivector r;
    r.c[4] = yz;
    r.c[5] = zx;
    r.c[6] = xy;
    return r;
  }
  double norm() const { return std::sqrt(yz * yz + zx * zx + xy * xy); }
  Bivector operator-() const { return {-yz, -zx, -xy}; }
  Bivector operator*(double s) const { return {yz * s, zx * s, xy * s}; }
  Bivector operator+(const Bivector& o) const { return {yz + o.yz, zx + o.zx, xy + o.xy}; }
  Bivector operator-(const Bivector& o) const { return {yz - o.yz, zx - o.zx, xy - o.xy}; }
};

// Dual plane of a vector: the volume element times the vector, a slot copy.
inline Bivector dual(const Vector3& v) { return {v.x, v.y, v.z}; }

inline Bivector as_pure_bivector(const Multivector& a, double tol = kIdentityTol) {
  Multivector rest = a;
  rest.c[4] = rest.c[5] = rest.c[6] = 0.0;
  if (max_abs_coeff(rest) > tol) throw std::domain_error("as_pure_bivector: off-grade residue");
  return {a.c[4], a.c[5], a.c[6]};
}

struct Quaternion {
  double s = 0;
  Bivector b;

  Multivector mv() const {
    Multivector r = b.mv();
    r.c[0] = s;
    return r;
  }
  double norm() const { return std::sqrt(s * s + b.yz * b.yz + b.zx * b.zx + b.xy * b.xy); }
};

inline Quaternion as_quaternion(const Multivector& a, double tol = kIdentityTol) {
  Multivector rest = a;
  rest.c[0] = rest.c[4] = rest.c[5] = rest.c[6] = 0.0;
  if (max_abs_coeff(rest) > tol) throw std::domain_error("as_quaternion: off-grade residue");
  return {a.c[0], {a.c[4], a.c[5], a.c[6]}};
}

// Product of two dual-plane bivectors, checked against its closed form
//   (I.a)(I.b) = -a.b - I.(a x b)
// which is the engine's core contraction identity.
inline Quaternion bivector_identity(const Vector3& a, const Vector3& b) {
  const Multivector lhs = gp(dual(a).mv(), dual(b).mv());
  const Multivector rhs = scalar_mv(-dot(a, b)) - dual(cross(a, b)).mv();
  if (max_abs_diff(lhs, rhs) > kIdentityTol * std::max(1.0, max_abs_coeff(lhs)))
    throw std::logic_error("bivector_identity: product disagrees with closed form");
  return as_quaternion(lhs);
}

// Rotor about a unit plane: cos(theta) + plane sin(theta).
inline Quaternion rotor_exp(const Bivector& plane, double theta) {
  if (std::abs(plane.norm() - 1.0) > 1e-9)
    throw std::domain_error("rotor_exp: plane must be a unit bivector");
  return {std::cos(theta), plane * std::sin(theta)};
}

inline Quaternion rotor_compose(const Quaternion& r1, const Quaternion& r2) {
  return as_quaternion(gp(r1.mv(), r2.mv()));
}

// Rotor carrying unit vector a to unit vector b, as their plain product.
inline Quaternion rotor_between(const Vector3& a, const Vector3& b) {
  return as_quaternion(gp(a.mv(), b.mv()));
}

// Transport left-multiplies: the rotor acts on q from the left.
inline Multivector transport(const Multivector& q, const Quaternion& rotor) {
  return gp(rotor.mv(), q);
}

inline double angle_between(const Vector3& a, const Vector3& b) {
  return std::atan2(cross(a, b).norm(), dot(a, b));
}

// Fixed-width rendering for golden files: every slot, 17 significant digits.
inline std::string to_debug_string(const Multivector& a) {
  static constexpr const char* kNames[8] = {"",     " e1",  " e2",  " e3",
                                            " e23", " e31", " e12", " e123"};
  std::string out;
  char buf[40];
  for (int i = 0; i < 8; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", a.c[i]);
    if (i > 0) out += " + ";
    out += buf;
    out += kNames[i];
  }
  return out;
}

}  // namespace hopfsim
