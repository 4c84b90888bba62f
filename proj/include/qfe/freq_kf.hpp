#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/LU>

#include "qfe/errors.hpp"

namespace qfe {

template <typename S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
template <typename S>
using Mat2 = Eigen::Matrix<S, 2, 2>;

/// Fundamental frequency and its rate of change. Vector layout is (r, f).
template <typename S>
struct FreqState {
  S rate{0};       // Hz/s
  S frequency{0};  // Hz

  Vec2<S> vector() const { return {rate, frequency}; }
  static FreqState from_vector(const Vec2<S>& v) { return {v(0), v(1)}; }
  bool is_finite() const { return std::isfinite(rate) && std::isfinite(frequency); }
};

template <typename S>
struct FreqNoise {
  /// Process noise on (r, f) per sample.
  Mat2<S> process = Vec2<S>(S(5e-5), S(8e-7)).asDiagonal();
  /// Observation noise variance, Hz^2.
  S observation = S(1.8e-6);

  void validate() const {
    const Mat2<S> sym = S(0.5) * (process + process.transpose());
    if (!process.allFinite() || (process - sym).cwiseAbs().maxCoeff() > S(1e-12) ||
        sym(0, 0) < 0 || sym(1, 1) < 0 || sym.determinant() < -S(1e-12))
      throw ConfigError("frequency process noise must be symmetric PSD");
    if (!(observation > 0)) throw ConfigError("frequency observation noise must be positive");
  }
};

template <typename S>
struct FreqEstimate {
  FreqState<S> state;
  Mat2<S> covariance;
};

/// (r, f) -> (r, f + r dT).
template <typename S>
Mat2<S> freq_transition_matrix(S dt) {
  Mat2<S> m;
  m << 1, 0, dt, 1;
  return m;
}

template <typename S>
FreqEstimate<S> freq_predict(const FreqState<S>& s, const Mat2<S>& p, const Mat2<S>& q, S dt) {
  const Mat2<S> f = freq_transition_matrix(dt);
  Mat2<S> pp = f * p * f.transpose() + q;
  pp = (S(0.5) * (pp + pp.transpose())).eval();
  return {FreqState<S>::from_vector(f * s.vector()), pp};
}

/// Phase increment (rad per sample) to frequency (Hz).
template <typename S>
S delta_theta_to_observation(S delta_theta, S dt) {
  return delta_theta / (S(2) * std::numbers::pi_v<S> * dt);
}

/// Scalar update with observation row (dT, 1): z = f + r dT + noise.
template <typename S>
FreqEstimate<S> freq_update(const FreqState<S>& s, const Mat2<S>& p, S z, S r, S dt) {
  const Vec2<S> h(dt, S(1));
  const S innovation_var = h.dot(p * h) + r;
  if (!(innovation_var > 0) || !std::isfinite(innovation_var))
    throw NumericError("frequency update: innovation variance is not positive");
  const Vec2<S> gain = p * h / innovation_var;
  const S innovation = z - h.dot(s.vector());
  Mat2<S> pp = (Mat2<S>::Identity() - gain * h.transpose()) * p;
  pp = (S(0.5) * (pp + pp.transpose())).eval();
  return {FreqState<S>::from_vector(s.vector() + gain * innovation), pp};
}

/// Second-stage tracker of (f, r) fed with per-sample frequency observations.
template <typename S>
class FrequencyTracker {
 public:
  FrequencyTracker(FreqState<S> initial, Mat2<S> initial_covariance, FreqNoise<S> noise, S dt)
      : s_(initial), p_(initial_covariance), noise_(noise), dt_(dt) {
    noise_.validate();
    if (!(dt_ > 0)) throw ConfigError("sampling interval must be positive");
  }

  /// Predict then update with z (Hz). Returns the innovation.
  S step(S z) {
    if (!std::isfinite(z)) throw NumericError("frequency observation is not finite");
    const FreqEstimate<S> prior = freq_predict(s_, p_, noise_.process, dt_);
    const S innovation = z - (prior.state.frequency + prior.state.rate * dt_);
    const FreqEstimate<S> post = freq_update(prior.state, prior.covariance, z, noise_.observation, dt_);
    s_ = post.state;
    p_ = post.covariance;
    return innovation;
  }

  const FreqState<S>& state() const { return s_; }
  const Mat2<S>& covariance() const { return p_; }

 private:
  FreqState<S> s_;
  Mat2<S> p_;
  FreqNoise<S> noise_;
  S dt_;
};

/// True when f lies within +-band Hz of nominal.
template <typename S>
bool frequency_plausible(S f, S nominal, S band = S(15)) {
  return std::isfinite(f) && std::abs(f - nominal) <= band;
}

}  // namespace qfe
