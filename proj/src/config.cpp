#include "qfe/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "qfe/errors.hpp"

namespace qfe {
namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.line < 0) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

double to_double(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path + ": expected a number" + where(node));
  double v = 0;
  try {
    v = node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected a number, got '" + node.Scalar() + "'" + where(node));
  }
  if (!std::isfinite(v)) throw ConfigError(path + ": must be finite" + where(node));
  return v;
}

std::int64_t to_integer(const YAML::Node& node, const std::string& path) {
  const double v = to_double(node, path);
  if (v != std::floor(v) || std::abs(v) > 9e15)
    throw ConfigError(path + ": expected an integer" + where(node));
  return static_cast<std::int64_t>(v);
}

bool to_bool(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected true or false" + where(node));
  }
}

std::array<double, 3> to_triple(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() != 3)
    throw ConfigError(path + ": expected a list of 3 numbers" + where(node));
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = to_double(node[i], path + "[" + std::to_string(i) + "]");
  return out;
}

bool is_auto(const YAML::Node& node) { return node.IsScalar() && node.Scalar() == "auto"; }

/// Map view that records which keys were read and rejects the rest.
class Fields {
 public:
  Fields(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_.IsNull()) return;
    if (!node_.IsMap())
      throw ConfigError((path_.empty() ? std::string("document") : path_) + ": expected a mapping" +
                        where(node_));
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// The value under `key`, or an undefined node. Null values count as absent.
  YAML::Node take(const std::string& key) {
    used_.insert(key);
    if (node_.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    YAML::Node v = node_[key];
    if (v && v.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    return v;
  }

  void number(const std::string& key, double& out) {
    if (const YAML::Node v = take(key)) out = to_double(v, path(key));
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (const YAML::Node v = take(key)) out = to_double(v, path(key));
  }
  void triple(const std::string& key, std::array<double, 3>& out) {
    if (const YAML::Node v = take(key)) out = to_triple(v, path(key));
  }

  void finish() const {
    if (node_.IsNull()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError("unknown key '" + path(key) + "'" + where(kv.first));
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed YAML at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

constexpr double kDegree = std::numbers::pi / 180.0;

Harmonic parse_harmonic(const YAML::Node& node, const std::string& path) {
  Fields f(node, path);
  Harmonic h;
  const YAML::Node order = f.take("order");
  if (!order) throw ConfigError(f.path("order") + ": required");
  h.order = static_cast<int>(to_integer(order, f.path("order")));
  f.number("fraction_pu", h.fraction);
  if (const YAML::Node v = f.take("phase_fractions_pu")) h.phase_fractions = to_triple(v, f.path("phase_fractions_pu"));
  f.finish();
  return h;
}

Segment parse_segment(const YAML::Node& node, const std::string& path) {
  Fields f(node, path);
  Segment s;
  const YAML::Node duration = f.take("duration_s");
  if (!duration) throw ConfigError(f.path("duration_s") + ": required");
  s.duration_s = to_double(duration, f.path("duration_s"));
  f.triple("amplitude_pu", s.amplitude_pu);
  const YAML::Node rad = f.take("phase_rad");
  const YAML::Node deg = f.take("phase_deg");
  if (rad && deg) throw ConfigError(path + ": give phase_rad or phase_deg, not both");
  if (rad) s.phase_rad = to_triple(rad, f.path("phase_rad"));
  if (deg) {
    const auto d = to_triple(deg, f.path("phase_deg"));
    for (std::size_t i = 0; i < 3; ++i) s.phase_rad[i] = d[i] * kDegree;
  }
  f.number("frequency_hz", s.frequency_hz);
  f.number("rate_hz_per_s", s.rate_hz_per_s);
  f.number("snr_db", s.snr_db);
  if (const YAML::Node hs = f.take("harmonics")) {
    if (!hs.IsSequence()) throw ConfigError(f.path("harmonics") + ": expected a list" + where(hs));
    for (std::size_t i = 0; i < hs.size(); ++i)
      s.harmonics.push_back(parse_harmonic(hs[i], f.path("harmonics") + "[" + std::to_string(i) + "]"));
  }
  f.finish();
  return s;
}

QekfNoise<double> parse_qekf_noise(const YAML::Node& node, const std::string& path,
                                   QekfNoise<double> noise) {
  Fields f(node, path);
  f.number("phi_noise", noise.phi);
  f.number("plus_noise_pu2", noise.plus);
  f.number("minus_noise_pu2", noise.minus);
  f.number("observation_noise_pu2", noise.observation);
  f.finish();
  return noise;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& text) {
  const YAML::Node root = parse_yaml(text);
  Fields f(root, "");
  ScenarioSpec spec;
  f.number("sample_rate_hz", spec.sample_rate_hz);
  if (const YAML::Node seed = f.take("seed")) {
    const std::int64_t s = to_integer(seed, "seed");
    if (s < 0) throw ConfigError("seed: must be non-negative");
    spec.seed = static_cast<std::uint64_t>(s);
  }
  const YAML::Node segs = f.take("segments");
  if (!segs || !segs.IsSequence()) throw ConfigError("segments: required list");
  for (std::size_t i = 0; i < segs.size(); ++i)
    spec.segments.push_back(parse_segment(segs[i], "segments[" + std::to_string(i) + "]"));
  f.finish();
  spec.validate();
  return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

EstimatorSettings parse_estimator_config(const std::string& text) {
  const YAML::Node root = parse_yaml(text);
  Fields f(root, "");
  EstimatorSettings out;
  EstimatorConfig& c = out.config;

  if (const YAML::Node v = f.take("sample_rate_hz")) {
    c.sample_rate_hz = to_double(v, "sample_rate_hz");
    out.sample_rate_given = true;
  }
  f.number("nominal_frequency_hz", c.nominal_frequency_hz);
  if (const YAML::Node v = f.take("harmonic_orders")) {
    if (!v.IsSequence()) throw ConfigError("harmonic_orders: expected a list" + where(v));
    c.harmonic_orders.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
      c.harmonic_orders.push_back(
          static_cast<int>(to_integer(v[i], "harmonic_orders[" + std::to_string(i) + "]")));
  }
  if (const YAML::Node v = f.take("feedback"); v && !is_auto(v)) c.feedback = to_bool(v, "feedback");
  if (const YAML::Node v = f.take("joseph_update")) c.joseph_update = to_bool(v, "joseph_update");
  if (const YAML::Node v = f.take("reference_amplitude_pu"); v && !is_auto(v))
    c.reference_amplitude = to_double(v, "reference_amplitude_pu");

  if (const YAML::Node v = f.take("qekf")) c.qekf_noise = parse_qekf_noise(v, "qekf", c.qekf_noise);
  if (const YAML::Node v = f.take("bank_noise")) {
    if (!v.IsSequence()) throw ConfigError("bank_noise: expected a list" + where(v));
    for (std::size_t i = 0; i < v.size(); ++i)
      c.bank_noise.push_back(
          parse_qekf_noise(v[i], "bank_noise[" + std::to_string(i) + "]", c.qekf_noise));
  }
  if (const YAML::Node v = f.take("frequency_tracker")) {
    Fields t(v, "frequency_tracker");
    t.number("rate_noise_hz2_per_s2", c.freq_noise.process(0, 0));
    t.number("frequency_noise_hz2", c.freq_noise.process(1, 1));
    t.number("observation_noise_hz2", c.freq_noise.observation);
    t.finish();
  }
  if (const YAML::Node v = f.take("initial")) {
    Fields i(v, "initial");
    i.triple("axis", c.initial_axis);
    i.number("qss_variance", c.initial_qss_variance);
    i.number("frequency_hz", c.initial_frequency_hz);
    i.number("rate_hz_per_s", c.initial_rate_hz_per_s);
    i.number("frequency_variance_hz2", c.initial_frequency_variance);
    i.number("rate_variance_hz2_per_s2", c.initial_rate_variance);
    i.finish();
  }
  f.finish();
  c.validate();
  return out;
}

EstimatorSettings load_estimator_config(const std::filesystem::path& path) {
  try {
    return parse_estimator_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace qfe
