#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "qfe/quaternion.hpp"
#include "qfe/signal.hpp"

namespace qfe {

// Independent verification machinery. Nothing here shares code with the
// filters it is used to check.

/// One textbook Kalman predict + update in a dense real state space.
struct DenseKfProblem {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd transition;         // F
  Eigen::MatrixXd observation;        // H
  Eigen::MatrixXd process_noise;      // Q
  Eigen::MatrixXd observation_noise;  // R
  Eigen::VectorXd measurement;        // z
  /// Nonlinear mean propagation f(x) for an extended filter; F x when unset.
  std::optional<Eigen::VectorXd> propagated_mean;
};

struct DenseKfResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Throws DivergenceError on a singular innovation covariance and
/// std::invalid_argument on inconsistent dimensions.
DenseKfResult dense_kf_step_oracle(const DenseKfProblem& problem);

/// Two counter-rotating circles fitted to a constant-frequency trajectory:
/// q_n = exp(axis n dtheta) q_plus + exp(-axis n dtheta) q_minus.
struct EllipseFit {
  UnitPureQuaterniond axis;
  Quaterniond q_plus;
  Quaterniond q_minus;
  double delta_theta = 0;
  double residual_rms = 0;
  double signal_rms = 0;

  Quaterniond reconstruct(std::int64_t n) const;
};

/// Least-squares fit over a candidate-axis grid refined by damped
/// Gauss-Newton. The axis sign is chosen so that |q_plus| >= |q_minus|.
/// Requires at least one full cycle of samples.
EllipseFit fit_counter_rotating(std::span<const PureQuatSample> samples, double frequency_hz,
                                double sample_rate_hz);

/// Spectral-peak frequency of a three-phase record (Hann window, zero
/// padding, log-parabolic peak interpolation). Requires >= 10 cycles.
double fft_frequency_oracle(std::span<const ThreePhaseSample> samples, double sample_rate_hz);

}  // namespace qfe
