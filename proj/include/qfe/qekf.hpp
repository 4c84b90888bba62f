#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "qfe/errors.hpp"
#include "qfe/quat_matrix.hpp"
#include "qfe/quaternion.hpp"

namespace qfe {

template <typename S>
using Vec12 = Eigen::Matrix<S, 12, 1>;
template <typename S>
using Mat12 = Eigen::Matrix<S, 12, 12>;
template <typename S>
using Mat4x12 = Eigen::Matrix<S, 4, 12>;

/// State of one harmonic bank: the phase-incrementing element phi and the
/// two counter-rotating circular components of the observed trajectory.
template <typename S>
struct QssState {
  Quaternion<S> phi = Quaternion<S>::identity();
  Quaternion<S> q_plus;
  Quaternion<S> q_minus;
  /// Harmonic order m (odd, >= 1).
  int order = 1;

  bool is_finite() const { return phi.is_finite() && q_plus.is_finite() && q_minus.is_finite(); }
};

template <typename S>
Vec12<S> lift(const QssState<S>& x) {
  Vec12<S> v;
  v << to_real_vec(x.phi), to_real_vec(x.q_plus), to_real_vec(x.q_minus);
  return v;
}

template <typename S, typename Derived>
QssState<S> unlift_state(const Eigen::MatrixBase<Derived>& v, int order) {
  return {from_real_vec(v.template segment<4>(0).eval()),
          from_real_vec(v.template segment<4>(4).eval()),
          from_real_vec(v.template segment<4>(8).eval()), order};
}

/// Noise intensities of the Q-SS model. Each is lifted to an isotropic
/// 4 x 4 block of the real covariance. Defaults are tuned for the feedback
/// loop at 1 kHz / 50 Hz with a 1 pu signal.
template <typename S>
struct QekfNoise {
  S phi = S(1e-6);
  S plus = S(2e-4);
  S minus = S(2e-4);
  S observation = S(0.8);

  void validate() const {
    if (!(phi > 0 && plus > 0 && minus > 0 && observation > 0))
      throw ConfigError("qekf noise intensities must be positive");
  }

  Mat12<S> state_covariance() const {
    Vec12<S> d;
    d.template head<4>().setConstant(phi);
    d.template segment<4>(4).setConstant(plus);
    d.template tail<4>().setConstant(minus);
    return d.asDiagonal();
  }

  RealMat4<S> observation_covariance() const {
    return RealMat4<S>::Identity() * observation;
  }
};

/// Covariance of a bank, stored in the exact 12 x 12 real lift.
template <typename S>
struct QssCovariance {
  Mat12<S> lifted = Mat12<S>::Zero();

  /// E[x x^H] as a 3 x 3 Hermitian quaternion matrix.
  QuatMatrix<S, 3> hermitian() const { return hermitian_view<S, 3>(lifted); }
};

/// (phi, q+, q-) -> (phi, phi q+, phi^* q-).
template <typename S>
QssState<S> qss_transition(const QssState<S>& x) {
  return {x.phi, x.phi * x.q_plus, conjugate(x.phi) * x.q_minus, x.order};
}

/// Exact Jacobian of the real-lifted transition at x.
template <typename S>
Mat12<S> qss_jacobian(const QssState<S>& x) {
  Mat12<S> j = Mat12<S>::Zero();
  j.template block<4, 4>(0, 0).setIdentity();
  j.template block<4, 4>(4, 0) = right_mul_matrix(x.q_plus);
  j.template block<4, 4>(4, 4) = left_mul_matrix(x.phi);
  j.template block<4, 4>(8, 0) = right_mul_matrix(x.q_minus) * conjugation_matrix<S>();
  j.template block<4, 4>(8, 8) = left_mul_matrix(conjugate(x.phi));
  return j;
}

/// h = [0 1 1] in the real lift.
template <typename S>
Mat4x12<S> qss_observation_matrix() {
  Mat4x12<S> h = Mat4x12<S>::Zero();
  h.template block<4, 4>(0, 4).setIdentity();
  h.template block<4, 4>(0, 8).setIdentity();
  return h;
}

/// Model output h x = q+ + q-.
template <typename S>
Quaternion<S> qss_output(const QssState<S>& x) {
  return x.q_plus + x.q_minus;
}

template <typename S>
struct QssEstimate {
  QssState<S> state;
  QssCovariance<S> covariance;
};

template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

template <typename S>
QssEstimate<S> predict(const QssState<S>& x, const QssCovariance<S>& p,
                       const QekfNoise<S>& noise) {
  if (!x.is_finite() || !p.lifted.allFinite())
    throw NumericError("qekf predict: non-finite state or covariance");
  const Mat12<S> jac = qss_jacobian(x);
  QssEstimate<S> out{qss_transition(x), {jac * p.lifted * jac.transpose() + noise.state_covariance()}};
  symmetrize(out.covariance.lifted);
  return out;
}

struct UpdateOptions {
  /// Joseph-form covariance update.
  bool joseph = false;
  /// Innovation covariance condition number above which the filter is
  /// declared divergent.
  double max_condition = 1e12;
};

/// Measurement update with a caller-supplied innovation q_obs - sum of the
/// prior outputs of all banks.
template <typename S>
QssEstimate<S> update(const QssState<S>& x_prior, const QssCovariance<S>& p_prior,
                      const Quaternion<S>& innovation, const QekfNoise<S>& noise,
                      const UpdateOptions& options = {}) {
  if (!x_prior.is_finite() || !innovation.is_finite() || !p_prior.lifted.allFinite())
    throw NumericError("qekf update: non-finite input");
  const Mat4x12<S> h = qss_observation_matrix<S>();
  const RealMat4<S> r = noise.observation_covariance();
  RealMat4<S> s = h * p_prior.lifted * h.transpose() + r;
  symmetrize(s);

  const Eigen::SelfAdjointEigenSolver<RealMat4<S>> eig(s, Eigen::EigenvaluesOnly);
  const S lo = eig.eigenvalues().minCoeff();
  const S hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0) || hi / lo > S(options.max_condition))
    throw DivergenceError("qekf update: innovation covariance is singular");

  // G = P h^T S^-1, computed as (S^-1 h P)^T since S and P are symmetric.
  const Mat4x12<S> ph = h * p_prior.lifted;
  const Eigen::Matrix<S, 12, 4> gain = s.ldlt().solve(ph).transpose();

  QssEstimate<S> out;
  out.state = unlift_state<S>(lift(x_prior) + gain * to_real_vec(innovation), x_prior.order);
  const Mat12<S> i_kh = Mat12<S>::Identity() - gain * h;
  if (options.joseph) {
    out.covariance.lifted =
        i_kh * p_prior.lifted * i_kh.transpose() + gain * r * gain.transpose();
  } else {
    out.covariance.lifted = i_kh * p_prior.lifted;
  }
  symmetrize(out.covariance.lifted);
  return out;
}

template <typename S>
struct PhaseIncrement {
  S delta_theta;
  UnitPureQuaternion<S> axis;
  /// False when phi is numerically real; axis is then a placeholder.
  bool axis_reliable;
};

/// Im(ln(phi / |phi|)) split into angle in [0, pi] and axis.
template <typename S>
PhaseIncrement<S> phase_increment(const QssState<S>& x, const QuatTolerances& tol = {}) {
  const S n = x.phi.norm();
  if (!(n > S(1e-9))) throw DomainError("phase_increment: |phi| too small to normalize");
  const Polar<S> p = polar(x.phi / n, tol);
  return {p.angle, p.axis, p.axis_defined};
}

/// phi <- exp(axis * 2 pi m f dT) with the axis taken from phi itself, or
/// `fallback` when phi is numerically real. Other fields unchanged.
template <typename S>
QssState<S> set_phase_increment(const QssState<S>& x, S frequency, S dt,
                                const UnitPureQuaternion<S>& fallback,
                                const QuatTolerances& tol = {}) {
  const S n = x.phi.norm();
  const bool usable = n > S(1e-9) && phase_increment(x, tol).axis_reliable;
  const UnitPureQuaternion<S> axis = usable ? phase_increment(x, tol).axis : fallback;
  QssState<S> out = x;
  out.phi = exp_pure(axis, S(2) * std::numbers::pi_v<S> * S(x.order) * frequency * dt);
  return out;
}

/// One harmonic bank of the quaternion extended Kalman filter. Owns its
/// state, covariance and the last reliable rotation axis.
template <typename S>
class Qekf {
 public:
  Qekf(const QssState<S>& x0, const QssCovariance<S>& p0, const QekfNoise<S>& noise,
       const UnitPureQuaternion<S>& initial_axis, UpdateOptions options = {})
      : x_(x0), p_(p0), noise_(noise), options_(options), axis_(initial_axis) {
    noise_.validate();
    remember_axis();
  }

  void predict() {
    QssEstimate<S> e = qfe::predict(x_, p_, noise_);
    x_ = e.state;
    p_ = e.covariance;
  }

  /// Prior model output q+ + q-, to be summed across banks by the caller.
  Quaternion<S> output() const { return qss_output(x_); }

  /// Measurement update followed by renormalization of phi.
  void update(const Quaternion<S>& innovation) {
    QssEstimate<S> e = qfe::update(x_, p_, innovation, noise_, options_);
    x_ = e.state;
    p_ = e.covariance;
    const S n = x_.phi.norm();
    if (n > S(1e-9)) x_.phi /= n;
    remember_axis();
  }

  PhaseIncrement<S> phase_increment() const { return qfe::phase_increment(x_); }

  /// Overwrites phi from an external fundamental-frequency estimate.
  void set_frequency(S frequency, S dt) {
    x_ = set_phase_increment(x_, frequency, dt, axis_);
    remember_axis();
  }

  const QssState<S>& state() const { return x_; }
  const QssCovariance<S>& covariance() const { return p_; }
  const QekfNoise<S>& noise() const { return noise_; }
  const UnitPureQuaternion<S>& axis() const { return axis_; }

 private:
  void remember_axis() {
    const S n = x_.phi.norm();
    if (!(n > S(1e-9))) return;
    const PhaseIncrement<S> pi = qfe::phase_increment(x_);
    if (pi.axis_reliable) axis_ = pi.axis;
  }

  QssState<S> x_;
  QssCovariance<S> p_;
  QekfNoise<S> noise_;
  UpdateOptions options_;
  UnitPureQuaternion<S> axis_;
};

}  // namespace qfe
