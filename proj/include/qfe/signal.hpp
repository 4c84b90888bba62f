#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qfe/quaternion.hpp"

namespace qfe {

/// One voltage sample of a three-phase system.
struct ThreePhaseSample {
  std::int64_t n = 0;
  double t = 0;  // s
  double va = 0;
  double vb = 0;
  double vc = 0;

  friend bool operator==(const ThreePhaseSample&, const ThreePhaseSample&) = default;
};

/// Ground-truth frequency trajectory at a sample.
struct TruthSample {
  std::int64_t n = 0;
  double t = 0;
  double frequency_hz = 0;
  double rate_hz_per_s = 0;

  friend bool operator==(const TruthSample&, const TruthSample&) = default;
};

struct PureQuatSample {
  std::int64_t n = 0;
  Quaterniond q;
};

struct Harmonic {
  /// Odd order m >= 3.
  int order = 3;
  /// Amplitude as a fraction of each phase's fundamental amplitude.
  double fraction = 0;
  /// Per-phase fraction overrides for an unbalanced harmonic set.
  std::optional<std::array<double, 3>> phase_fractions;

  std::array<double, 3> fractions() const {
    return phase_fractions.value_or(std::array<double, 3>{fraction, fraction, fraction});
  }

  friend bool operator==(const Harmonic&, const Harmonic&) = default;
};

struct Segment {
  double duration_s = 1;
  std::array<double, 3> amplitude_pu{1, 1, 1};
  /// Phase offsets added to the fixed 0, 2pi/3, 4pi/3 offsets.
  std::array<double, 3> phase_rad{0, 0, 0};
  /// Frequency at segment start.
  double frequency_hz = 50;
  /// Linear ramp within the segment.
  double rate_hz_per_s = 0;
  std::vector<Harmonic> harmonics;
  /// Per-phase SNR; nullopt means noise-free.
  std::optional<double> snr_db;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ScenarioSpec {
  double sample_rate_hz = 1000;
  std::vector<Segment> segments;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  double sample_interval() const { return 1.0 / sample_rate_hz; }
  /// Number of samples a segment occupies.
  std::int64_t segment_samples(const Segment& s) const;
  /// Index of the first sample of each segment.
  std::vector<std::int64_t> segment_starts() const;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct GeneratedSignal {
  std::vector<ThreePhaseSample> samples;
  std::vector<TruthSample> truth;
};

/// Phase-accumulating synthesis of the scenario, noise included.
GeneratedSignal generate(const ScenarioSpec& spec);

/// Adds independent Gaussian noise per phase with variance
/// P_phase / 10^(snr_db / 10), P_phase the phase's mean square over `samples`.
std::vector<ThreePhaseSample> add_noise(std::span<const ThreePhaseSample> samples,
                                        std::optional<double> snr_db, std::uint64_t seed);

/// Per-phase noise variances add_noise would use.
std::array<double, 3> noise_variances(std::span<const ThreePhaseSample> samples, double snr_db);

/// q = i va + j vb + k vc.
PureQuatSample embed(const ThreePhaseSample& s);
std::vector<PureQuatSample> embed(std::span<const ThreePhaseSample> samples);

/// Ready-made scenarios reproducing the two synthetic experiments.
/// Experiment 1: balanced 50 Hz, then at 0.5 s a sag (va x0.2, vb/vc +20 deg),
/// a balanced 10% third harmonic and a 0.2 Hz frequency drop.
ScenarioSpec experiment1(std::uint64_t seed = 1);
/// Experiment 2: the unbalanced, harmonic-contaminated condition of the sag,
/// with a +-0.5 Hz/s ramp starting at 0.5 s.
ScenarioSpec experiment2(std::uint64_t seed = 2, double rate_hz_per_s = 0.5);
/// Time of the sag / ramp onset in both experiments.
inline constexpr double kExperimentEventTime = 0.5;

// CSV: header `n,t,va,vb,vc`, LF endings, 17 significant digits.
void write_waveform_csv(std::ostream& os, std::span<const ThreePhaseSample> samples);
std::vector<ThreePhaseSample> read_waveform_csv(std::istream& is);
void save_csv(std::span<const ThreePhaseSample> samples, const std::filesystem::path& path);
std::vector<ThreePhaseSample> load_csv(const std::filesystem::path& path);

// Truth sidecar: header `n,t,f_true,r_true`.
void write_truth_csv(std::ostream& os, std::span<const TruthSample> truth);
std::vector<TruthSample> read_truth_csv(std::istream& is);
void save_truth_csv(std::span<const TruthSample> truth, const std::filesystem::path& path);
std::vector<TruthSample> load_truth_csv(const std::filesystem::path& path);

/// `out.csv` -> `out.truth.csv`.
std::filesystem::path truth_sidecar_path(const std::filesystem::path& waveform_path);

}  // namespace qfe
