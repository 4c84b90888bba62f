#include "qfe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace qfe {

std::int64_t EstimatorConfig::warmup_samples() const {
  return static_cast<std::int64_t>(std::ceil(0.1 * sample_rate_hz));
}

void EstimatorConfig::validate() const {
  if (!(sample_rate_hz > 0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("sample_rate_hz must be positive");
  if (!(nominal_frequency_hz > 0) || !std::isfinite(nominal_frequency_hz))
    throw ConfigError("nominal_frequency_hz must be positive");
  if (harmonic_orders.empty() || harmonic_orders.front() != 1)
    throw ConfigError("harmonic_orders must start with 1");
  std::set<int> seen;
  for (int m : harmonic_orders) {
    if (m < 1 || m % 2 == 0) throw ConfigError("harmonic_orders must be positive odd integers");
    if (!seen.insert(m).second) throw ConfigError("harmonic_orders must be distinct");
  }
  if (!bank_noise.empty() && bank_noise.size() != harmonic_orders.size())
    throw ConfigError("bank_noise must have one entry per harmonic order");
  qekf_noise.validate();
  for (const auto& n : bank_noise) n.validate();
  freq_noise.validate();
  const double axis_norm = std::hypot(initial_axis[0], initial_axis[1], initial_axis[2]);
  if (!(axis_norm > 0) || !std::isfinite(axis_norm))
    throw ConfigError("initial_axis must be a finite non-zero vector");
  if (!(initial_qss_variance > 0)) throw ConfigError("initial_qss_variance must be positive");
  if (!(initial_frequency_variance >= 0) || !(initial_rate_variance >= 0))
    throw ConfigError("initial frequency/rate variances must be non-negative");
  if (reference_amplitude && !(*reference_amplitude > 0))
    throw ConfigError("reference_amplitude must be positive");
}

namespace {

FrequencyTracker<double> make_tracker(const EstimatorConfig& c) {
  c.validate();
  const FreqState<double> s0{c.initial_rate_hz_per_s,
                             c.initial_frequency_hz.value_or(c.nominal_frequency_hz)};
  const Mat2<double> p0 =
      Vec2<double>(c.initial_rate_variance, c.initial_frequency_variance).asDiagonal();
  return {s0, p0, c.freq_noise, c.sample_interval()};
}

QekfNoise<double> scaled(QekfNoise<double> n, double amplitude) {
  const double a2 = amplitude * amplitude;
  n.plus *= a2;
  n.minus *= a2;
  n.observation *= a2;
  return n;
}

}  // namespace

Estimator::Estimator(EstimatorConfig config)
    : config_(std::move(config)),
      reference_amplitude_(config_.reference_amplitude.value_or(1.0)),
      tracker_(make_tracker(config_)) {}

void Estimator::initialize(const Quaterniond& first) {
  const double dt = config_.sample_interval();
  const UnitPureQuaterniond axis = UnitPureQuaterniond::normalized(
      config_.initial_axis[0], config_.initial_axis[1], config_.initial_axis[2]);
  const double a2 = reference_amplitude_ * reference_amplitude_;
  Vec12<double> p0;
  p0.head<4>().setConstant(config_.initial_qss_variance);
  p0.tail<8>().setConstant(config_.initial_qss_variance * a2);
  const UpdateOptions options{config_.joseph_update};

  banks_.clear();
  for (std::size_t b = 0; b < config_.harmonic_orders.size(); ++b) {
    const int m = config_.harmonic_orders[b];
    QssState<double> x0;
    x0.order = m;
    x0.phi = exp_pure(axis, 2.0 * std::numbers::pi * m * config_.nominal_frequency_hz * dt);
    if (b == 0) x0.q_plus = first;
    const QekfNoise<double>& noise =
        config_.bank_noise.empty() ? config_.qekf_noise : config_.bank_noise[b];
    banks_.emplace_back(x0, QssCovariance<double>{p0.asDiagonal()},
                        scaled(noise, reference_amplitude_), axis, options);
  }
}

EstimateRecord Estimator::step(const Quaterniond& q_obs) {
  if (!q_obs.is_finite()) throw NumericError("observation is not finite");
  const double dt = config_.sample_interval();
  const auto guarded = [this](std::size_t b, auto&& fn) {
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(e.what(), config_.harmonic_orders[b]);
    }
  };

  // The first observation seeds q+ of the fundamental bank and serves as
  // the prior at n = 0; prediction starts from the second sample.
  if (n_ == 0) {
    initialize(q_obs);
  } else {
    for (std::size_t b = 0; b < banks_.size(); ++b) guarded(b, [&] { banks_[b].predict(); });
  }

  Quaterniond innovation = q_obs;
  for (const auto& bank : banks_) innovation -= bank.output();
  for (std::size_t b = 0; b < banks_.size(); ++b)
    guarded(b, [&] { banks_[b].update(innovation); });

  const PhaseIncrement<double> inc = banks_.front().phase_increment();
  try {
    tracker_.step(delta_theta_to_observation(inc.delta_theta, dt));
  } catch (const std::exception& e) {
    throw StageError(e.what(), -1);
  }
  const FreqState<double>& fs = tracker_.state();
  if (config_.feedback_enabled()) {
    for (std::size_t b = 0; b < banks_.size(); ++b)
      guarded(b, [&] { banks_[b].set_frequency(fs.frequency, dt); });
  }

  EstimateRecord rec;
  rec.n = n_;
  rec.t = static_cast<double>(n_) * dt;
  rec.delta_theta = inc.delta_theta;
  rec.frequency_hz = fs.frequency;
  rec.rate_hz_per_s = fs.rate;
  rec.innovation_magnitude = innovation.norm();
  rec.warmup = n_ < config_.warmup_samples();
  rec.frequency_plausible = frequency_plausible(fs.frequency, config_.nominal_frequency_hz);
  rec.banks.reserve(banks_.size());
  for (const auto& bank : banks_) {
    const auto& x = bank.state();
    const auto& ax = bank.axis();
    rec.banks.push_back({x.order, x.q_plus.norm(), x.q_minus.norm(), {ax.x(), ax.y(), ax.z()},
                         bank.phase_increment().axis_reliable});
  }
  ++n_;
  return rec;
}

double estimate_reference_amplitude(std::span<const PureQuatSample> samples,
                                    const EstimatorConfig& config) {
  const auto cycle = static_cast<std::size_t>(
      std::ceil(config.sample_rate_hz / config.nominal_frequency_hz));
  const std::size_t count = std::min(cycle, samples.size());
  double power = 0;
  for (std::size_t i = 0; i < count; ++i) power += samples[i].q.squared_norm();
  if (count == 0 || !(power > 0)) return 1.0;
  return std::sqrt(2.0 / 3.0 * power / static_cast<double>(count));
}

std::vector<EstimateRecord> run(std::span<const PureQuatSample> samples,
                                const EstimatorConfig& config) {
  if (samples.empty()) throw ConfigError("run: no samples");
  EstimatorConfig resolved = config;
  if (!resolved.reference_amplitude)
    resolved.reference_amplitude = estimate_reference_amplitude(samples, config);
  Estimator est(resolved);
  std::vector<EstimateRecord> out;
  out.reserve(samples.size());
  for (const PureQuatSample& s : samples) {
    try {
      out.push_back(est.step(s.q));
    } catch (const std::exception& e) {
      throw RunError(e.what(), s.n);
    }
  }
  return out;
}

}  // namespace qfe
