#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qfe/pipeline.hpp"

using namespace qfe;

namespace {

struct WindowStats {
  double mean = 0;
  double variance = 0;
};

WindowStats frequency_error(const std::vector<EstimateRecord>& out, const std::vector<TruthSample>& truth,
                            double t0, double t1) {
  double sum = 0, sum2 = 0;
  int count = 0;
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (out[n].t < t0 || out[n].t >= t1 || out[n].warmup) continue;
    const double e = out[n].frequency_hz - truth[n].frequency_hz;
    sum += e;
    sum2 += e * e;
    ++count;
  }
  const double mean = sum / count;
  return {mean, sum2 / count - mean * mean};
}

std::vector<PureQuatSample> balanced(double seconds, double scale = 1.0) {
  ScenarioSpec spec;
  Segment s;
  s.duration_s = seconds;
  s.amplitude_pu = {scale, scale, scale};
  spec.segments = {s};
  return embed(generate(spec).samples);
}

EstimatorConfig with_orders(std::vector<int> orders) {
  EstimatorConfig c;
  c.harmonic_orders = std::move(orders);
  return c;
}

}  // namespace

TEST_CASE("single bank converges on a noise-free balanced signal") {
  const auto out = run(balanced(1.0), EstimatorConfig{});
  REQUIRE(out.size() == 1000);
  for (const auto& r : out) {
    if (r.t < 0.3) continue;
    CHECK(std::abs(r.frequency_hz - 50) < 1e-4);
    CHECK(std::abs(r.rate_hz_per_s) < 1e-3);
  }
}

TEST_CASE("records carry n, t, warm-up flag and bank diagnostics") {
  const auto out = run(balanced(0.3), with_orders({1, 3, 5}));
  REQUIRE(out.size() == 300);
  int warm = 0;
  for (std::size_t n = 0; n < out.size(); ++n) {
    CHECK(out[n].n == static_cast<std::int64_t>(n));
    CHECK(out[n].t == static_cast<double>(n) * 1e-3);
    warm += out[n].warmup ? 1 : 0;
    REQUIRE(out[n].banks.size() == 3);
    CHECK(out[n].banks[2].order == 5);
    CHECK(out[n].frequency_plausible);
  }
  CHECK(warm == 100);
  CHECK(out.back().banks[0].q_plus_magnitude == doctest::Approx(std::sqrt(1.5)).epsilon(1e-3));
}

TEST_CASE("single sample gives a single record") {
  const auto q = balanced(0.01);
  const auto out = run(std::span(q).first(1), EstimatorConfig{});
  REQUIRE(out.size() == 1);
  CHECK(out[0].n == 0);
  CHECK(std::isfinite(out[0].frequency_hz));
  CHECK(out[0].warmup);
  CHECK_THROWS_AS(run(std::span<const PureQuatSample>{}, EstimatorConfig{}), ConfigError);
}

TEST_CASE("runs are deterministic") {
  const auto q = embed(generate(experiment1(4)).samples);
  const auto a = run(q, with_orders({1, 3}));
  const auto b = run(q, with_orders({1, 3}));
  REQUIRE(a.size() == b.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    CHECK(a[n].frequency_hz == b[n].frequency_hz);
    CHECK(a[n].rate_hz_per_s == b[n].rate_hz_per_s);
    CHECK(a[n].delta_theta == b[n].delta_theta);
  }
}

TEST_CASE("feedback keeps harmonic increments locked to the fundamental") {
  const auto q = embed(generate(experiment1(5)).samples);
  EstimatorConfig c = with_orders({1, 3, 5});
  Estimator est(c);
  double worst = 0;
  for (const auto& s : q) {
    est.step(s.q);
    const double base = est.banks()[0].phase_increment().delta_theta;
    for (std::size_t b = 1; b < est.banks().size(); ++b) {
      const int m = est.banks()[b].state().order;
      worst = std::max(worst, std::abs(est.banks()[b].phase_increment().delta_theta - m * base));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("feedback switch") {
  CHECK_FALSE(EstimatorConfig{}.feedback_enabled());
  CHECK(with_orders({1, 3}).feedback_enabled());
  EstimatorConfig c = with_orders({1, 3});
  c.feedback = false;
  CHECK_FALSE(c.feedback_enabled());
  // Without feedback the harmonic bank's phi is filtered independently.
  const auto out = run(embed(generate(experiment1(6)).samples), c);
  CHECK(std::isfinite(out.back().frequency_hz));
}

TEST_CASE("experiment 1: sag and frequency step") {
  const GeneratedSignal g = generate(experiment1(1));
  const auto out = run(embed(g.samples), with_orders({1, 3}));
  const WindowStats post = frequency_error(out, g.truth, 1.0, 2.0);
  CHECK(std::abs(post.mean) < 0.02);
  CHECK(std::sqrt(post.variance) < 0.02);

  // The steady-state means before and after the sag differ by the true step.
  double pre = 0, after = 0;
  int np = 0, na = 0;
  for (const auto& r : out) {
    if (!r.warmup && r.t < 0.5) pre += r.frequency_hz, ++np;
    if (r.t >= 1.0) after += r.frequency_hz, ++na;
  }
  CHECK(std::abs((pre / np - after / na) - 0.2) < 0.02);
}

TEST_CASE("harmonic rejection lowers the error variance") {
  const GeneratedSignal g = generate(experiment1(2));
  const auto q = embed(g.samples);
  const double single = frequency_error(run(q, with_orders({1})), g.truth, 1.0, 2.0).variance;
  const double paired = frequency_error(run(q, with_orders({1, 3})), g.truth, 1.0, 2.0).variance;
  CHECK(paired < single);
}

TEST_CASE("experiment 2: rate of change is recovered") {
  for (double rate : {0.5, -0.5}) {
    const GeneratedSignal g = generate(experiment2(3, rate));
    const auto out = run(embed(g.samples), with_orders({1, 3}));
    double r_sum = 0, e2 = 0;
    int count = 0;
    for (std::size_t n = 0; n < out.size(); ++n) {
      if (out[n].t < 1.5) continue;
      r_sum += out[n].rate_hz_per_s;
      const double e = out[n].frequency_hz - g.truth[n].frequency_hz;
      e2 += e * e;
      ++count;
    }
    CHECK(std::abs(r_sum / count - rate) < 0.05);
    CHECK(std::sqrt(e2 / count) < 0.05);
  }
}

TEST_CASE("estimates do not depend on the voltage scale") {
  const GeneratedSignal g = generate(experiment1(8));
  const auto base = run(embed(g.samples), with_orders({1, 3}));
  for (double scale : {1e-3, 230 * std::numbers::sqrt2}) {
    std::vector<ThreePhaseSample> scaled = g.samples;
    for (auto& s : scaled) {
      s.va *= scale;
      s.vb *= scale;
      s.vc *= scale;
    }
    const auto out = run(embed(scaled), with_orders({1, 3}));
    double worst = 0;
    for (std::size_t n = 0; n < out.size(); ++n) {
      worst = std::max(worst, std::abs(out[n].frequency_hz - base[n].frequency_hz));
      worst = std::max(worst, std::abs(out[n].rate_hz_per_s - base[n].rate_hz_per_s));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("reference amplitude estimate") {
  EstimatorConfig c;
  CHECK(estimate_reference_amplitude(balanced(0.1, 2.5), c) == doctest::Approx(2.5).epsilon(1e-12));
  const std::vector<PureQuatSample> zeros(50);
  CHECK(estimate_reference_amplitude(zeros, c) == 1.0);
}

TEST_CASE("errors carry the sample index") {
  auto q = balanced(0.1);
  q[37].q.y = std::nan("");
  try {
    run(q, EstimatorConfig{});
    FAIL("expected RunError");
  } catch (const RunError& e) {
    CHECK(e.sample() == 37);
  }
}

TEST_CASE("configuration validation") {
  auto invalid = [](EstimatorConfig c) { CHECK_THROWS_AS(c.validate(), ConfigError); };
  invalid(with_orders({}));
  invalid(with_orders({3}));
  invalid(with_orders({1, 2}));
  invalid(with_orders({1, 3, 3}));
  EstimatorConfig c;
  c.sample_rate_hz = -1;
  invalid(c);
  c = EstimatorConfig{};
  c.bank_noise.resize(2);
  invalid(c);
  c = EstimatorConfig{};
  c.qekf_noise.observation = 0;
  invalid(c);
  c = EstimatorConfig{};
  c.reference_amplitude = 0.0;
  invalid(c);
  c = EstimatorConfig{};
  c.initial_axis = {0, 0, 0};
  invalid(c);
  CHECK_NOTHROW(with_orders({1, 3, 5}).validate());
}
