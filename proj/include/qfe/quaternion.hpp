#pragma once

#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Core>

#include "qfe/errors.hpp"

namespace qfe {

/// Real quaternion w + ix + jy + kz with Hamilton product rules
/// ij = k, jk = i, ki = j, i^2 = j^2 = k^2 = ijk = -1.
template <typename Scalar>
struct Quaternion {
  Scalar w{0};
  Scalar x{0};
  Scalar y{0};
  Scalar z{0};

  constexpr Quaternion() = default;
  constexpr Quaternion(Scalar w_, Scalar x_, Scalar y_, Scalar z_)
      : w(w_), x(x_), y(y_), z(z_) {}
  /// Real quaternion.
  constexpr explicit Quaternion(Scalar real) : w(real) {}

  static constexpr Quaternion identity() { return {1, 0, 0, 0}; }
  static constexpr Quaternion unit_i() { return {0, 1, 0, 0}; }
  static constexpr Quaternion unit_j() { return {0, 0, 1, 0}; }
  static constexpr Quaternion unit_k() { return {0, 0, 0, 1}; }
  /// Pure quaternion i*x + j*y + k*z.
  static constexpr Quaternion pure(Scalar x_, Scalar y_, Scalar z_) {
    return {0, x_, y_, z_};
  }

  constexpr Scalar real() const { return w; }
  constexpr Quaternion imag() const { return {0, x, y, z}; }
  Scalar squared_norm() const { return w * w + x * x + y * y + z * z; }
  Scalar norm() const { return std::sqrt(squared_norm()); }
  Scalar imag_norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool is_finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) &&
           std::isfinite(z);
  }

  constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }

  Quaternion& operator+=(const Quaternion& o) {
    w += o.w; x += o.x; y += o.y; z += o.z;
    return *this;
  }
  Quaternion& operator-=(const Quaternion& o) {
    w -= o.w; x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  Quaternion& operator*=(Scalar s) {
    w *= s; x *= s; y *= s; z *= s;
    return *this;
  }
  Quaternion& operator/=(Scalar s) {
    w /= s; x /= s; y /= s; z /= s;
    return *this;
  }

  friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

using Quaterniond = Quaternion<double>;

template <typename S>
constexpr Quaternion<S> operator+(Quaternion<S> a, const Quaternion<S>& b) {
  return a += b;
}
template <typename S>
constexpr Quaternion<S> operator-(Quaternion<S> a, const Quaternion<S>& b) {
  return a -= b;
}
template <typename S>
constexpr Quaternion<S> operator*(Quaternion<S> q, S s) {
  return q *= s;
}
template <typename S>
constexpr Quaternion<S> operator*(S s, Quaternion<S> q) {
  return q *= s;
}
template <typename S>
constexpr Quaternion<S> operator/(Quaternion<S> q, S s) {
  return q /= s;
}

/// Hamilton product. Non-commutative, associative, norm-multiplicative.
template <typename S>
constexpr Quaternion<S> mul(const Quaternion<S>& a, const Quaternion<S>& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

template <typename S>
constexpr Quaternion<S> operator*(const Quaternion<S>& a, const Quaternion<S>& b) {
  return mul(a, b);
}

template <typename S>
constexpr Quaternion<S> conjugate(const Quaternion<S>& q) {
  return {q.w, -q.x, -q.y, -q.z};
}

template <typename S>
S norm(const Quaternion<S>& q) {
  return q.norm();
}

template <typename S>
Quaternion<S> inverse(const Quaternion<S>& q) {
  const S n2 = q.squared_norm();
  if (n2 == S(0)) throw DomainError("inverse of the zero quaternion");
  return conjugate(q) / n2;
}

/// Involution of q about eta: eta q eta^-1.
template <typename S>
Quaternion<S> involution(const Quaternion<S>& q, const Quaternion<S>& eta) {
  if (eta.squared_norm() == S(0)) throw DomainError("involution about zero");
  return eta * q * inverse(eta);
}

/// Unit-norm pure quaternion; used as a rotation axis (xi, zeta'').
template <typename Scalar>
class UnitPureQuaternion {
 public:
  /// Normalizes (x, y, z). Throws DomainError for the zero vector.
  static UnitPureQuaternion normalized(Scalar x, Scalar y, Scalar z) {
    const Scalar n = std::sqrt(x * x + y * y + z * z);
    if (!(n > Scalar(0)) || !std::isfinite(n))
      throw DomainError("axis direction must be a nonzero finite vector");
    return UnitPureQuaternion(x / n, y / n, z / n);
  }
  static UnitPureQuaternion from_imag(const Quaternion<Scalar>& q) {
    return normalized(q.x, q.y, q.z);
  }

  static UnitPureQuaternion unit_i() { return {1, 0, 0}; }
  static UnitPureQuaternion unit_j() { return {0, 1, 0}; }
  static UnitPureQuaternion unit_k() { return {0, 0, 1}; }

  Scalar x() const { return x_; }
  Scalar y() const { return y_; }
  Scalar z() const { return z_; }

  Quaternion<Scalar> quaternion() const { return Quaternion<Scalar>::pure(x_, y_, z_); }
  Eigen::Matrix<Scalar, 3, 1> vector() const { return {x_, y_, z_}; }
  UnitPureQuaternion operator-() const { return {-x_, -y_, -z_}; }

 private:
  UnitPureQuaternion(Scalar x, Scalar y, Scalar z) : x_(x), y_(y), z_(z) {}

  Scalar x_;
  Scalar y_;
  Scalar z_;
};

using UnitPureQuaterniond = UnitPureQuaternion<double>;

/// Thresholds for the polar/logarithm maps.
struct QuatTolerances {
  /// ln_unit rejects inputs with ||q| - 1| above this.
  double unit_norm = 1e-6;
  /// ln_unit rejects inputs this close to -1.
  double antipodal = 1e-9;
  /// polar flags the axis when |Im(q)| < near_real * |q|.
  double near_real = 1e-9;
};

/// cos(theta) + axis * sin(theta).
template <typename S>
Quaternion<S> exp_pure(const UnitPureQuaternion<S>& axis, S theta) {
  const S s = std::sin(theta);
  return {std::cos(theta), axis.x() * s, axis.y() * s, axis.z() * s};
}

/// Logarithm of a unit quaternion: the pure quaternion xi*theta with
/// theta = atan2(|Im q|, Re q) in [0, pi).
template <typename S>
Quaternion<S> ln_unit(const Quaternion<S>& q, const QuatTolerances& tol = {}) {
  if (!q.is_finite()) throw DomainError("ln_unit: non-finite input");
  if (std::abs(q.norm() - S(1)) > S(tol.unit_norm))
    throw DomainError("ln_unit: input is not unit norm");
  if ((q + Quaternion<S>(S(1))).norm() < S(tol.antipodal))
    throw SingularityError("ln_unit: axis undefined at -1");
  const S im = q.imag_norm();
  if (im == S(0)) return {};
  const S theta = std::atan2(im, q.w);
  return q.imag() * (theta / im);
}

template <typename Scalar>
struct Polar {
  Scalar magnitude;
  UnitPureQuaternion<Scalar> axis;
  Scalar angle;
  /// False when q is (numerically) real: axis is then an arbitrary placeholder.
  bool axis_defined;
};

/// q = magnitude * exp_pure(axis, angle). Throws DomainError for q = 0.
template <typename S>
Polar<S> polar(const Quaternion<S>& q, const QuatTolerances& tol = {}) {
  const S mag = q.norm();
  if (mag == S(0)) throw DomainError("polar: zero quaternion");
  const S im = q.imag_norm();
  if (im < S(tol.near_real) * mag) {
    return {mag, UnitPureQuaternion<S>::unit_i(),
            q.w >= S(0) ? S(0) : std::numbers::pi_v<S>, false};
  }
  return {mag, UnitPureQuaternion<S>::from_imag(q), std::atan2(im, q.w), true};
}

template <typename S>
using RealVec4 = Eigen::Matrix<S, 4, 1>;
template <typename S>
using RealMat4 = Eigen::Matrix<S, 4, 4>;

template <typename S>
RealVec4<S> to_real_vec(const Quaternion<S>& q) {
  return {q.w, q.x, q.y, q.z};
}

template <typename Derived>
Quaternion<typename Derived::Scalar> from_real_vec(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 4);
  return {v(0), v(1), v(2), v(3)};
}

/// vec(a * q) = left_mul_matrix(a) * vec(q).
template <typename S>
RealMat4<S> left_mul_matrix(const Quaternion<S>& a) {
  RealMat4<S> m;
  m << a.w, -a.x, -a.y, -a.z,
       a.x,  a.w, -a.z,  a.y,
       a.y,  a.z,  a.w, -a.x,
       a.z, -a.y,  a.x,  a.w;
  return m;
}

/// vec(q * b) = right_mul_matrix(b) * vec(q).
template <typename S>
RealMat4<S> right_mul_matrix(const Quaternion<S>& b) {
  RealMat4<S> m;
  m << b.w, -b.x, -b.y, -b.z,
       b.x,  b.w,  b.z, -b.y,
       b.y, -b.z,  b.w,  b.x,
       b.z,  b.y, -b.x,  b.w;
  return m;
}

/// vec(conjugate(q)) = conjugation_matrix() * vec(q).
template <typename S>
RealMat4<S> conjugation_matrix() {
  return RealVec4<S>(1, -1, -1, -1).asDiagonal();
}

template <typename S>
std::ostream& operator<<(std::ostream& os, const Quaternion<S>& q) {
  return os << '(' << q.w << ", " << q.x << "i, " << q.y << "j, " << q.z << "k)";
}

}  // namespace qfe
