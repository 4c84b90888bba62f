#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "qfe/errors.hpp"
#include "qfe/signal.hpp"
#include "test_support.hpp"

using namespace qfe;

namespace {

Segment balanced(double duration, double f = 50, double rate = 0) {
  Segment s;
  s.duration_s = duration;
  s.frequency_hz = f;
  s.rate_hz_per_s = rate;
  return s;
}

ScenarioSpec scenario(std::vector<Segment> segments, std::uint64_t seed = 0) {
  ScenarioSpec spec;
  spec.segments = std::move(segments);
  spec.seed = seed;
  return spec;
}

double angle_between(const Quaterniond& a, const Quaterniond& b) {
  const Eigen::Vector3d u(a.x, a.y, a.z), v(b.x, b.y, b.z);
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qfe_test_" + name);
}

}  // namespace

TEST_CASE("balanced start values") {
  const GeneratedSignal g = generate(scenario({balanced(0.1)}));
  REQUIRE(g.samples.size() == 100);
  const ThreePhaseSample& s = g.samples.front();
  CHECK(s.n == 0);
  CHECK(s.t == 0.0);
  CHECK(std::abs(s.va) < 1e-15);
  CHECK(s.vb == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(s.vc == doctest::Approx(-std::sqrt(3.0) / 2).epsilon(1e-15));
}

TEST_CASE("time stamps are n * dt") {
  const GeneratedSignal g = generate(scenario({balanced(0.3), balanced(0.2, 49)}));
  for (const auto& s : g.samples) CHECK(s.t == static_cast<double>(s.n) * 1e-3);
}

TEST_CASE("ramp reaches 50.5 Hz after one second") {
  const GeneratedSignal g = generate(scenario({balanced(1.5, 50, 0.5)}));
  CHECK(g.truth[1000].frequency_hz == doctest::Approx(50.5).epsilon(1e-12));
  CHECK(g.truth[1000].rate_hz_per_s == 0.5);
}

TEST_CASE("frequency trajectory is the piecewise-linear schedule") {
  const ScenarioSpec spec = scenario({balanced(0.4, 50, 0), balanced(0.6, 49.9, -0.3), balanced(0.5, 50.2, 1)});
  const GeneratedSignal g = generate(spec);
  const auto starts = spec.segment_starts();
  double worst = 0;
  for (std::size_t k = 0; k < spec.segments.size(); ++k) {
    const Segment& seg = spec.segments[k];
    for (std::int64_t i = 0; i < spec.segment_samples(seg); ++i) {
      const double expected = seg.frequency_hz + seg.rate_hz_per_s * static_cast<double>(i) * 1e-3;
      worst = std::max(worst, std::abs(g.truth[starts[k] + i].frequency_hz - expected));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("experiment 1 sag segment") {
  const ScenarioSpec spec = experiment1();
  REQUIRE(spec.segments.size() == 2);
  const Segment& pre = spec.segments[0];
  const Segment& sag = spec.segments[1];
  CHECK(sag.amplitude_pu[0] == doctest::Approx(0.2 * pre.amplitude_pu[0]));
  CHECK(sag.amplitude_pu[1] == pre.amplitude_pu[1]);
  CHECK(sag.phase_rad[1] == doctest::Approx(20.0 * std::numbers::pi / 180));
  CHECK(sag.phase_rad[2] == doctest::Approx(20.0 * std::numbers::pi / 180));
  CHECK(pre.frequency_hz - sag.frequency_hz == doctest::Approx(0.2));
  REQUIRE(sag.harmonics.size() == 1);
  CHECK(sag.harmonics[0].order == 3);
  CHECK(sag.harmonics[0].fraction == doctest::Approx(0.1));
  CHECK(*sag.snr_db == 30.0);
  CHECK(spec.segment_starts()[1] == 500);
}

TEST_CASE("embed") {
  CHECK(embed(ThreePhaseSample{0, 0, 1, 0, 0}).q == Quaterniond::unit_i());
  const double h = std::sqrt(3.0) / 2;
  CHECK(embed(ThreePhaseSample{0, 0, 0, h, -h}).q == Quaterniond(0, 0, h, -h));

  const GeneratedSignal g = generate(scenario({balanced(0.5)}));
  for (const PureQuatSample& p : embed(g.samples)) {
    CHECK(p.q.w == 0.0);
    CHECK(std::abs(p.q.norm() - std::sqrt(1.5)) < 1e-12);
  }
}

TEST_CASE("balanced noise-free signal sums to zero") {
  const GeneratedSignal g = generate(scenario({balanced(0.3, 50), balanced(0.3, 51, 2)}));
  for (const auto& s : g.samples) CHECK(std::abs(s.va + s.vb + s.vc) < 1e-12);
}

TEST_CASE("phase is continuous across segment boundaries") {
  const ScenarioSpec spec = scenario({balanced(0.25, 50), balanced(0.25, 47, 3), balanced(0.25, 53)});
  const auto q = embed(generate(spec).samples);
  const double dt = 1e-3;
  const double bound = 2 * std::numbers::pi * 53.75 * dt + 2 * std::numbers::pi * 3 * dt * dt * 1.01;
  double prev = angle_between(q[0].q, q[1].q);
  for (std::size_t n = 1; n + 1 < q.size(); ++n) {
    const double step = angle_between(q[n].q, q[n + 1].q);
    CHECK(step <= bound);
    // A frequency change only alters the step; there is no extra jump.
    CHECK(std::abs(step - prev) < 2 * std::numbers::pi * 6.01 * dt);
    prev = step;
  }
}

TEST_CASE("noise variance follows the SNR definition") {
  const GeneratedSignal g = generate(scenario({balanced(1.0)}));
  const auto var = noise_variances(g.samples, 30);
  for (double v : var) CHECK(v == doctest::Approx(5e-4).epsilon(1e-9));

  const auto same = add_noise(g.samples, std::nullopt, 3);
  CHECK(std::equal(same.begin(), same.end(), g.samples.begin(), g.samples.end()));
  CHECK(add_noise(std::span<const ThreePhaseSample>{}, 30.0, 1).empty());
}

TEST_CASE("injected noise sample variance within 5%") {
  Segment s = balanced(100.0);
  const GeneratedSignal clean = generate(scenario({s}));
  REQUIRE(clean.samples.size() == 100000);
  const auto noisy = add_noise(clean.samples, 30.0, 11);
  const auto expected = noise_variances(clean.samples, 30.0);
  std::array<double, 3> sum{}, sum2{};
  for (std::size_t n = 0; n < noisy.size(); ++n) {
    const double d[3] = {noisy[n].va - clean.samples[n].va, noisy[n].vb - clean.samples[n].vb,
                         noisy[n].vc - clean.samples[n].vc};
    for (int p = 0; p < 3; ++p) {
      sum[p] += d[p];
      sum2[p] += d[p] * d[p];
    }
  }
  const double count = static_cast<double>(noisy.size());
  for (int p = 0; p < 3; ++p) {
    const double mean = sum[p] / count;
    const double variance = sum2[p] / count - mean * mean;
    CHECK(std::abs(variance / expected[p] - 1) < 0.05);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate(experiment1(5));
  const auto b = generate(experiment1(5));
  const auto c = generate(experiment1(6));
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  std::ostringstream sa, sb;
  write_waveform_csv(sa, a.samples);
  write_waveform_csv(sb, b.samples);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("harmonic set is balanced") {
  Segment s = balanced(0.2);
  s.harmonics = {Harmonic{3, 0.1, std::nullopt}};
  const auto with = generate(scenario({s}));
  const auto without = generate(scenario({balanced(0.2)}));
  // Balanced third harmonics are in phase on all three conductors.
  for (std::size_t n = 0; n < with.samples.size(); ++n) {
    const double ha = with.samples[n].va - without.samples[n].va;
    const double hb = with.samples[n].vb - without.samples[n].vb;
    const double hc = with.samples[n].vc - without.samples[n].vc;
    CHECK(std::abs(ha - hb) < 1e-12);
    CHECK(std::abs(ha - hc) < 1e-12);
  }
}

TEST_CASE("scenario validation") {
  auto bad = [](auto mutate, const char* field) {
    ScenarioSpec spec = scenario({balanced(0.1)});
    mutate(spec);
    try {
      spec.validate();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  bad([](ScenarioSpec& s) { s.segments[0].duration_s = 0; }, "segments[0].duration_s");
  bad([](ScenarioSpec& s) { s.segments[0].amplitude_pu[1] = -1; }, "amplitude_pu");
  bad([](ScenarioSpec& s) { s.segments[0].harmonics = {Harmonic{4, 0.1, {}}}; }, "order");
  bad([](ScenarioSpec& s) { s.segments[0].harmonics = {Harmonic{3, 1.0, {}}}; }, "fraction");
  bad([](ScenarioSpec& s) { s.segments[0].harmonics = {Harmonic{11, 0.1, {}}}; }, "Nyquist");
  bad([](ScenarioSpec& s) { s.segments.clear(); }, "segments");
  bad([](ScenarioSpec& s) { s.sample_rate_hz = 0; }, "sample_rate_hz");
  CHECK_THROWS_AS(generate(scenario({balanced(-1)})), ConfigError);
}

TEST_CASE("CSV round trip is bitwise") {
  const GeneratedSignal g = generate(experiment1(3));
  const auto path = temp_path("roundtrip.csv");
  save_csv(g.samples, path);
  CHECK(load_csv(path) == g.samples);
  save_truth_csv(g.truth, truth_sidecar_path(path));
  CHECK(load_truth_csv(truth_sidecar_path(path)) == g.truth);
  std::filesystem::remove(path);
  std::filesystem::remove(truth_sidecar_path(path));
  CHECK(truth_sidecar_path("dir/out.csv") == std::filesystem::path("dir/out.truth.csv"));
}

TEST_CASE("CSV format") {
  std::ostringstream os;
  write_waveform_csv(os, std::vector<ThreePhaseSample>{{0, 0, 0.1, 0.2, 0.3}});
  CHECK(os.str() == "n,t,va,vb,vc\n0,0,0.10000000000000001,0.20000000000000001,0.29999999999999999\n");
}

TEST_CASE("CSV errors") {
  std::istringstream header_only("n,t,va,vb,vc\n");
  CHECK(read_waveform_csv(header_only).empty());

  std::istringstream short_row("n,t,va,vb,vc\n0,0,1,2,3\n1,0.001,1,2\n");
  try {
    read_waveform_csv(short_row);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  std::istringstream bad_value("n,t,va,vb,vc\n0,0,1,x,3\n");
  CHECK_THROWS_AS(read_waveform_csv(bad_value), ParseError);

  std::istringstream non_monotone("n,t,va,vb,vc\n0,0,1,2,3\n2,0.002,1,2,3\n1,0.001,1,2,3\n");
  try {
    read_waveform_csv(non_monotone);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line() == 4);
  }

  std::istringstream wrong_header("a,b,c\n");
  CHECK_THROWS_AS(read_waveform_csv(wrong_header), ParseError);

  std::istringstream crlf("n,t,va,vb,vc\r\n0,0,1,2,3\r\n");
  CHECK(read_waveform_csv(crlf).size() == 1);

  CHECK_THROWS(load_csv(temp_path("does_not_exist.csv")));
}
