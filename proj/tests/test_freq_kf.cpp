#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qfe/freq_kf.hpp"

using namespace qfe;

namespace {

const double kDt = 1e-3;
const Mat2<double> kP0 = Mat2<double>::Identity();

}  // namespace

TEST_CASE("predict") {
  const Mat2<double> zero = Mat2<double>::Zero();
  FreqEstimate<double> e = freq_predict<double>(FreqState<double>{0.5, 50}, zero, zero, kDt);
  CHECK(e.state.rate == 0.5);
  CHECK(e.state.frequency == doctest::Approx(50.0005).epsilon(1e-15));

  e = freq_predict(FreqState<double>{0, 49.3}, kP0, zero, kDt);
  CHECK(e.state.frequency == 49.3);

  FreqState<double> s{0.5, 50};
  for (int n = 0; n < 1000; ++n) s = freq_predict(s, zero, zero, kDt).state;
  CHECK(s.frequency == doctest::Approx(50.5).epsilon(1e-12));

  const Mat2<double> f = freq_transition_matrix(kDt);
  const Mat2<double> q = Vec2<double>(1e-3, 2e-3).asDiagonal();
  e = freq_predict(FreqState<double>{}, kP0, q, kDt);
  CHECK((e.covariance - (f * f.transpose() + q)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("phase increment to frequency") {
  const double pi = std::numbers::pi;
  CHECK(delta_theta_to_observation(pi / 10, kDt) == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(delta_theta_to_observation(0.0, kDt) == 0.0);
  CHECK(delta_theta_to_observation(3 * pi / 10, kDt) == doctest::Approx(150.0).epsilon(1e-14));
}

TEST_CASE("update limits") {
  const FreqState<double> s{0.2, 49.9};
  FreqEstimate<double> e = freq_update(s, kP0, 50.3, 1e300, kDt);
  CHECK(e.state.frequency == doctest::Approx(49.9).epsilon(1e-12));
  CHECK(e.state.rate == doctest::Approx(0.2).epsilon(1e-12));

  e = freq_update<double>(s, Mat2<double>::Zero(), 50.3, 1e-4, kDt);
  CHECK(e.state.frequency == 49.9);
  CHECK(e.state.rate == 0.2);
  CHECK(e.covariance.isZero(0));

  CHECK_THROWS_AS(freq_update<double>(s, Mat2<double>::Zero(), 50.0, 0.0, kDt), NumericError);
}

TEST_CASE("update against the scalar Kalman formulas") {
  const FreqState<double> s{0.1, 50.2};
  Mat2<double> p;
  p << 0.3, 0.05, 0.05, 0.2;
  const double z = 50.05, r = 0.01;
  // Written out element-wise.
  const double ph0 = p(0, 0) * kDt + p(0, 1), ph1 = p(1, 0) * kDt + p(1, 1);
  const double var = kDt * ph0 + ph1 + r;
  const double k0 = ph0 / var, k1 = ph1 / var;
  const double nu = z - (s.frequency + s.rate * kDt);
  const FreqEstimate<double> e = freq_update(s, p, z, r, kDt);
  CHECK(e.state.rate == doctest::Approx(s.rate + k0 * nu).epsilon(1e-14));
  CHECK(e.state.frequency == doctest::Approx(s.frequency + k1 * nu).epsilon(1e-14));
  CHECK(e.covariance(1, 1) == doctest::Approx(p(1, 1) - k1 * ph1).epsilon(1e-13));
  CHECK(e.covariance(0, 1) == e.covariance(1, 0));
}

TEST_CASE("constant observation converges within 500 steps") {
  FrequencyTracker<double> t({0, 49}, kP0, FreqNoise<double>{}, kDt);
  int first = -1;
  for (int n = 0; n < 2000; ++n) {
    t.step(50.0);
    const bool close = std::abs(t.state().frequency - 50) < 0.01;
    if (close && first < 0) first = n;
    if (!close) first = -1;
  }
  REQUIRE(first >= 0);
  CHECK(first < 500);
}

TEST_CASE("noise-free ramp is tracked exactly") {
  for (double r : {0.5, -0.5, 2.0}) {
    FrequencyTracker<double> t({0, 50}, kP0, FreqNoise<double>{}, kDt);
    double f = 50;
    for (int n = 0; n < 5000; ++n) {
      t.step(f + r * kDt);
      if (n >= 4000) {
        CHECK(std::abs(t.state().frequency - f) < 1e-6);
        CHECK(std::abs(t.state().rate - r) < 1e-4);
      }
      f += r * kDt;
    }
  }
}

TEST_CASE("covariance stays PSD over 10^5 steps") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  FrequencyTracker<double> t({0, 50}, kP0, FreqNoise<double>{}, kDt);
  double worst = 0, asym = 0;
  for (int n = 0; n < 100000; ++n) {
    t.step(50 + 0.01 * gauss(rng));
    const Mat2<double>& p = t.covariance();
    asym = std::max(asym, std::abs(p(0, 1) - p(1, 0)));
    const double tr = p.trace(), det = p.determinant();
    worst = std::min(worst, 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * det))));
  }
  CHECK(worst >= -1e-12);
  CHECK(asym == 0.0);
}

TEST_CASE("innovations are zero mean on matched noise") {
  FreqNoise<double> noise;
  noise.process = Vec2<double>(1e-4, 1e-6).asDiagonal();
  noise.observation = 1e-3;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  FrequencyTracker<double> t({0, 50}, kP0, noise, kDt);
  double r = 0, f = 50;
  double sum = 0, sum2 = 0;
  const int count = 20000;
  for (int n = 0; n < count; ++n) {
    r += std::sqrt(noise.process(0, 0)) * gauss(rng);
    f += r * kDt + std::sqrt(noise.process(1, 1)) * gauss(rng);
    const double nu = t.step(f + r * kDt + std::sqrt(noise.observation) * gauss(rng));
    sum += nu;
    sum2 += nu * nu;
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sum2 / count - mean * mean);
  CHECK(std::abs(mean) < 3 * sd / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("configuration errors") {
  FreqNoise<double> bad;
  bad.observation = 0;
  CHECK_THROWS_AS(FrequencyTracker<double>({0, 50}, kP0, bad, kDt), ConfigError);
  FreqNoise<double> neg;
  neg.process(0, 0) = -1;
  CHECK_THROWS_AS(neg.validate(), ConfigError);
  CHECK_THROWS_AS(FrequencyTracker<double>({0, 50}, kP0, FreqNoise<double>{}, 0.0), ConfigError);

  FrequencyTracker<double> t({0, 50}, kP0, FreqNoise<double>{}, kDt);
  CHECK_THROWS_AS(t.step(std::nan("")), NumericError);
}

TEST_CASE("plausibility band") {
  CHECK(frequency_plausible(50.0, 50.0));
  CHECK(frequency_plausible(64.9, 50.0));
  CHECK_FALSE(frequency_plausible(65.1, 50.0));
  CHECK_FALSE(frequency_plausible(std::nan(""), 50.0));
}
