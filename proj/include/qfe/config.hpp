#pragma once

#include <filesystem>
#include <string>

#include "qfe/pipeline.hpp"
#include "qfe/signal.hpp"

namespace qfe {

// YAML scenario and estimator configuration. Unknown keys are errors;
// messages name the offending key path, e.g. "segments[1].amplitude_pu".
//
// Scenario:
//   sample_rate_hz: 1000
//   seed: 1
//   segments:
//     - duration_s: 0.5
//       amplitude_pu: [1, 1, 1]
//       phase_deg: [0, 0, 0]          # or phase_rad
//       frequency_hz: 50
//       rate_hz_per_s: 0
//       snr_db: 30                    # omit or null for noise-free
//       harmonics:
//         - {order: 3, fraction_pu: 0.1}   # or phase_fractions_pu: [a, b, c]
//
// Estimator (every key optional):
//   sample_rate_hz, nominal_frequency_hz, harmonic_orders: [1, 3],
//   feedback: auto | true | false, joseph_update: false,
//   reference_amplitude_pu: auto | <number>,
//   qekf: {phi_noise, plus_noise_pu2, minus_noise_pu2, observation_noise_pu2},
//   bank_noise: [ {same keys as qekf}, ... ],
//   frequency_tracker: {rate_noise_hz2_per_s2, frequency_noise_hz2, observation_noise_hz2},
//   initial: {axis, qss_variance, frequency_hz, rate_hz_per_s,
//             frequency_variance_hz2, rate_variance_hz2_per_s2}

ScenarioSpec parse_scenario(const std::string& text);
ScenarioSpec load_scenario(const std::filesystem::path& path);

struct EstimatorSettings {
  EstimatorConfig config;
  /// False when the file left sample_rate_hz to be inferred from the data.
  bool sample_rate_given = false;
};

EstimatorSettings parse_estimator_config(const std::string& text);
EstimatorSettings load_estimator_config(const std::filesystem::path& path);

}  // namespace qfe
