#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qfe/freq_kf.hpp"
#include "qfe/qekf.hpp"
#include "qfe/signal.hpp"

namespace qfe {

/// Configuration of the two-stage estimator.
///
/// Q-SS noise intensities (and the initial q+/q- variances) are expressed
/// for a 1 pu signal and multiplied by reference_amplitude^2 at start-up, so
/// the frequency estimates do not depend on the voltage scale.
struct EstimatorConfig {
  double sample_rate_hz = 1000;
  double nominal_frequency_hz = 50;
  /// Harmonic banks; distinct positive odd orders, first is 1.
  std::vector<int> harmonic_orders{1};
  /// Noise shared by every bank unless bank_noise overrides it.
  QekfNoise<double> qekf_noise;
  /// Optional per-bank noise, same length as harmonic_orders.
  std::vector<QekfNoise<double>> bank_noise;
  FreqNoise<double> freq_noise;
  /// Defaults to true when more than one bank is configured.
  std::optional<bool> feedback;
  bool joseph_update = false;

  // Initialization.
  /// Initial rotation axis of every bank's phi.
  std::array<double, 3> initial_axis{-1, -1, -1};
  /// Diagonal of the initial lifted Q-SS covariance.
  double initial_qss_variance = 0.1;
  std::optional<double> initial_frequency_hz;
  double initial_rate_hz_per_s = 0;
  double initial_frequency_variance = 1;
  double initial_rate_variance = 1;

  /// Peak phase amplitude used to scale the Q-SS noise. When unset, run()
  /// estimates it from the first nominal cycle and Estimator uses 1.
  std::optional<double> reference_amplitude;

  double sample_interval() const { return 1.0 / sample_rate_hz; }
  bool feedback_enabled() const { return feedback.value_or(harmonic_orders.size() > 1); }
  /// ceil(0.1 * f_s) samples.
  std::int64_t warmup_samples() const;
  void validate() const;
};

struct BankDiagnostics {
  int order = 1;
  double q_plus_magnitude = 0;
  double q_minus_magnitude = 0;
  std::array<double, 3> axis{};
  bool axis_reliable = true;
};

/// Per-sample output of the estimator.
struct EstimateRecord {
  std::int64_t n = 0;
  double t = 0;
  double delta_theta = 0;  // rad, bank m = 1
  double frequency_hz = 0;
  double rate_hz_per_s = 0;
  std::vector<BankDiagnostics> banks;
  double innovation_magnitude = 0;
  bool warmup = false;
  bool frequency_plausible = true;
};

/// Stage error annotated with the failing bank (or -1 for stage two).
class StageError : public NumericError {
 public:
  StageError(const std::string& what, int bank)
      : NumericError(what + " (bank " + std::to_string(bank) + ")"), bank_(bank) {}
  int bank() const noexcept { return bank_; }

 private:
  int bank_;
};

/// Run-time error annotated with the sample index at which it occurred.
class RunError : public NumericError {
 public:
  RunError(const std::string& what, std::int64_t sample)
      : NumericError("sample " + std::to_string(sample) + ": " + what), sample_(sample) {}
  std::int64_t sample() const noexcept { return sample_; }

 private:
  std::int64_t sample_;
};

/// Two-stage frequency estimator: a bank of Q-SS filters (one per harmonic
/// order) sharing one innovation, followed by the (f, r) tracker.
class Estimator {
 public:
  explicit Estimator(EstimatorConfig config);

  EstimateRecord step(const Quaterniond& q_obs);

  const EstimatorConfig& config() const { return config_; }
  const std::vector<Qekf<double>>& banks() const { return banks_; }
  const FrequencyTracker<double>& tracker() const { return tracker_; }
  double reference_amplitude() const { return reference_amplitude_; }

 private:
  void initialize(const Quaterniond& first);

  EstimatorConfig config_;
  double reference_amplitude_;
  std::vector<Qekf<double>> banks_;
  FrequencyTracker<double> tracker_;
  std::int64_t n_ = 0;
};

/// Reference amplitude estimate sqrt(2/3 * mean |q|^2) over the first
/// nominal cycle; equals the peak phase amplitude for a balanced signal.
double estimate_reference_amplitude(std::span<const PureQuatSample> samples,
                                    const EstimatorConfig& config);

/// Batch driver over Estimator::step.
std::vector<EstimateRecord> run(std::span<const PureQuatSample> samples,
                                const EstimatorConfig& config);

}  // namespace qfe
