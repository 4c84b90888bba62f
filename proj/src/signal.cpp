#include "qfe/signal.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "csv.hpp"
#include "qfe/errors.hpp"

namespace qfe {

using csv::format_double;
using csv::open_in;
using csv::open_out;
using csv::read_csv;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<double, 3> kPhaseOffsets{0.0, kTwoPi / 3.0, 2.0 * kTwoPi / 3.0};

std::string segment_field(std::size_t index, const char* field) {
  return "segments[" + std::to_string(index) + "]." + field;
}

double max_frequency(const Segment& s) {
  return std::max(s.frequency_hz, s.frequency_hz + s.rate_hz_per_s * s.duration_s);
}

double min_frequency(const Segment& s) {
  return std::min(s.frequency_hz, s.frequency_hz + s.rate_hz_per_s * s.duration_s);
}

}  // namespace

void ScenarioSpec::validate() const {
  if (!(sample_rate_hz > 0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("sample_rate_hz must be positive");
  if (segments.empty()) throw ConfigError("segments must not be empty");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (!(s.duration_s > 0) || !std::isfinite(s.duration_s))
      throw ConfigError(segment_field(i, "duration_s") + " must be positive");
    if (segment_samples(s) < 1)
      throw ConfigError(segment_field(i, "duration_s") + " is shorter than one sample");
    for (double a : s.amplitude_pu)
      if (!(a > 0) || !std::isfinite(a))
        throw ConfigError(segment_field(i, "amplitude_pu") + " entries must be positive");
    for (double p : s.phase_rad)
      if (!std::isfinite(p)) throw ConfigError(segment_field(i, "phase_rad") + " must be finite");
    if (!std::isfinite(s.frequency_hz) || !std::isfinite(s.rate_hz_per_s))
      throw ConfigError(segment_field(i, "frequency_hz") + " and rate must be finite");
    if (!(min_frequency(s) > 0))
      throw ConfigError(segment_field(i, "frequency_hz") + " must stay positive over the segment");
    int max_order = 1;
    for (const Harmonic& h : s.harmonics) {
      if (h.order < 3 || h.order % 2 == 0)
        throw ConfigError(segment_field(i, "harmonics.order") + " must be an odd integer >= 3");
      for (double fr : h.fractions())
        if (!(fr >= 0 && fr < 1))
          throw ConfigError(segment_field(i, "harmonics.fraction") + " must lie in [0, 1)");
      max_order = std::max(max_order, h.order);
    }
    if (!(sample_rate_hz > 2.0 * max_order * max_frequency(s)))
      throw ConfigError(segment_field(i, "harmonics") +
                        ": sample_rate_hz violates the Nyquist guard");
    if (s.snr_db && !std::isfinite(*s.snr_db))
      throw ConfigError(segment_field(i, "snr_db") + " must be finite or absent");
  }
}

std::int64_t ScenarioSpec::segment_samples(const Segment& s) const {
  return static_cast<std::int64_t>(std::llround(s.duration_s * sample_rate_hz));
}

std::vector<std::int64_t> ScenarioSpec::segment_starts() const {
  std::vector<std::int64_t> starts;
  std::int64_t n = 0;
  for (const Segment& s : segments) {
    starts.push_back(n);
    n += segment_samples(s);
  }
  return starts;
}

GeneratedSignal generate(const ScenarioSpec& spec) {
  spec.validate();
  const double dt = spec.sample_interval();
  GeneratedSignal out;
  std::vector<std::optional<double>> snr_per_sample;

  double theta = 0;  // accumulated fundamental phase
  std::int64_t n = 0;
  for (const Segment& seg : spec.segments) {
    const std::int64_t count = spec.segment_samples(seg);
    double f = seg.frequency_hz;
    for (std::int64_t k = 0; k < count; ++k, ++n) {
      std::array<double, 3> v{};
      for (std::size_t p = 0; p < 3; ++p) {
        const double angle = theta + seg.phase_rad[p] + kPhaseOffsets[p];
        v[p] = seg.amplitude_pu[p] * std::sin(angle);
        for (const Harmonic& h : seg.harmonics)
          v[p] += h.fractions()[p] * seg.amplitude_pu[p] * std::sin(h.order * angle);
      }
      const double t = static_cast<double>(n) * dt;
      out.samples.push_back({n, t, v[0], v[1], v[2]});
      out.truth.push_back({n, t, f, seg.rate_hz_per_s});
      snr_per_sample.push_back(seg.snr_db);
      theta = std::fmod(theta + kTwoPi * f * dt, kTwoPi);
      f += seg.rate_hz_per_s * dt;
    }
  }

  // Noise variance is set by each phase's power over the whole noise-free
  // record; each segment applies its own SNR.
  const std::vector<ThreePhaseSample> clean = out.samples;
  std::array<double, 3> variance{};
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (!snr_per_sample[i]) continue;
    if (i == 0 || snr_per_sample[i] != snr_per_sample[i - 1])
      variance = noise_variances(clean, *snr_per_sample[i]);
    ThreePhaseSample& s = out.samples[i];
    s.va += std::sqrt(variance[0]) * gauss(rng);
    s.vb += std::sqrt(variance[1]) * gauss(rng);
    s.vc += std::sqrt(variance[2]) * gauss(rng);
  }
  return out;
}

std::array<double, 3> noise_variances(std::span<const ThreePhaseSample> samples, double snr_db) {
  std::array<double, 3> power{};
  if (samples.empty()) return power;
  for (const ThreePhaseSample& s : samples) {
    power[0] += s.va * s.va;
    power[1] += s.vb * s.vb;
    power[2] += s.vc * s.vc;
  }
  const double scale = std::pow(10.0, -snr_db / 10.0);
  for (double& p : power) p = p / static_cast<double>(samples.size()) * scale;
  return power;
}

std::vector<ThreePhaseSample> add_noise(std::span<const ThreePhaseSample> samples,
                                        std::optional<double> snr_db, std::uint64_t seed) {
  std::vector<ThreePhaseSample> out(samples.begin(), samples.end());
  if (!snr_db || out.empty()) return out;
  if (!std::isfinite(*snr_db)) throw ConfigError("snr_db must be finite");
  const std::array<double, 3> var = noise_variances(samples, *snr_db);
  const std::array<double, 3> sigma{std::sqrt(var[0]), std::sqrt(var[1]), std::sqrt(var[2])};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (ThreePhaseSample& s : out) {
    s.va += sigma[0] * gauss(rng);
    s.vb += sigma[1] * gauss(rng);
    s.vc += sigma[2] * gauss(rng);
  }
  return out;
}

PureQuatSample embed(const ThreePhaseSample& s) {
  return {s.n, Quaterniond::pure(s.va, s.vb, s.vc)};
}

std::vector<PureQuatSample> embed(std::span<const ThreePhaseSample> samples) {
  std::vector<PureQuatSample> out;
  out.reserve(samples.size());
  for (const ThreePhaseSample& s : samples) out.push_back(embed(s));
  return out;
}

ScenarioSpec experiment1(std::uint64_t seed) {
  constexpr double kShift = 20.0 * (std::numbers::pi / 180.0);
  ScenarioSpec spec;
  spec.sample_rate_hz = 1000;
  spec.seed = seed;
  Segment pre;
  pre.duration_s = kExperimentEventTime;
  pre.snr_db = 30.0;
  Segment sag;
  sag.duration_s = 1.5;
  sag.amplitude_pu = {0.2, 1.0, 1.0};
  sag.phase_rad = {0.0, kShift, kShift};
  sag.frequency_hz = 49.8;
  sag.harmonics = {Harmonic{3, 0.1, std::nullopt}};
  sag.snr_db = 30.0;
  spec.segments = {pre, sag};
  return spec;
}

ScenarioSpec experiment2(std::uint64_t seed, double rate_hz_per_s) {
  ScenarioSpec spec = experiment1(seed);
  Segment steady = spec.segments[1];
  steady.duration_s = kExperimentEventTime;
  steady.frequency_hz = 50.0;
  Segment ramp = steady;
  ramp.duration_s = 2.0;
  ramp.rate_hz_per_s = rate_hz_per_s;
  spec.segments = {steady, ramp};
  return spec;
}

// ---------------------------------------------------------------- CSV

void write_waveform_csv(std::ostream& os, std::span<const ThreePhaseSample> samples) {
  os << "n,t,va,vb,vc\n";
  for (const ThreePhaseSample& s : samples)
    os << s.n << ',' << format_double(s.t) << ',' << format_double(s.va) << ','
       << format_double(s.vb) << ',' << format_double(s.vc) << '\n';
}

std::vector<ThreePhaseSample> read_waveform_csv(std::istream& is) {
  std::vector<ThreePhaseSample> out;
  read_csv(is, "n,t,va,vb,vc", [&](std::int64_t n, const std::vector<double>& v, std::size_t) {
    out.push_back({n, v[0], v[1], v[2], v[3]});
  });
  return out;
}

void save_csv(std::span<const ThreePhaseSample> samples, const std::filesystem::path& path) {
  std::ofstream os = open_out(path);
  write_waveform_csv(os, samples);
}

std::vector<ThreePhaseSample> load_csv(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  return read_waveform_csv(is);
}

void write_truth_csv(std::ostream& os, std::span<const TruthSample> truth) {
  os << "n,t,f_true,r_true\n";
  for (const TruthSample& s : truth)
    os << s.n << ',' << format_double(s.t) << ',' << format_double(s.frequency_hz) << ','
       << format_double(s.rate_hz_per_s) << '\n';
}

std::vector<TruthSample> read_truth_csv(std::istream& is) {
  std::vector<TruthSample> out;
  read_csv(is, "n,t,f_true,r_true",
           [&](std::int64_t n, const std::vector<double>& v, std::size_t) {
             out.push_back({n, v[0], v[1], v[2]});
           });
  return out;
}

void save_truth_csv(std::span<const TruthSample> truth, const std::filesystem::path& path) {
  std::ofstream os = open_out(path);
  write_truth_csv(os, truth);
}

std::vector<TruthSample> load_truth_csv(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  return read_truth_csv(is);
}

std::filesystem::path truth_sidecar_path(const std::filesystem::path& waveform_path) {
  std::filesystem::path p = waveform_path;
  p.replace_extension(".truth.csv");
  return p;
}

}  // namespace qfe
