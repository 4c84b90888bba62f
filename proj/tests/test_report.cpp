#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qfe/errors.hpp"
#include "qfe/report.hpp"

using namespace qfe;

namespace {

std::vector<TruthSample> constant_truth(int count, double f) {
  std::vector<TruthSample> t;
  for (int n = 0; n < count; ++n) t.push_back({n, n * 1e-3, f, 0});
  return t;
}

std::vector<EstimateRecord> records_from(const std::vector<double>& f_hat) {
  std::vector<EstimateRecord> out;
  for (std::size_t n = 0; n < f_hat.size(); ++n) {
    EstimateRecord r;
    r.n = static_cast<std::int64_t>(n);
    r.t = static_cast<double>(n) * 1e-3;
    r.frequency_hz = f_hat[n];
    r.warmup = n < 100;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("estimate CSV round trip") {
  const GeneratedSignal g = generate(experiment1(2));
  EstimatorConfig c;
  c.harmonic_orders = {1, 3};
  const auto records = run(embed(g.samples), c);
  std::ostringstream os;
  write_estimates_csv(os, records);
  const std::string text = os.str();
  CHECK(text.rfind("n,t,dtheta,f_hat,r_hat,qplus_mag,qminus_mag,innov_mag,warmup\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);

  std::istringstream is(text);
  const auto back = read_estimates_csv(is);
  REQUIRE(back.size() == records.size());
  for (std::size_t n = 0; n < back.size(); ++n) {
    CHECK(back[n].n == records[n].n);
    CHECK(back[n].frequency_hz == records[n].frequency_hz);
    CHECK(back[n].rate_hz_per_s == records[n].rate_hz_per_s);
    CHECK(back[n].delta_theta == records[n].delta_theta);
    CHECK(back[n].banks[0].q_minus_magnitude == records[n].banks[0].q_minus_magnitude);
    CHECK(back[n].warmup == records[n].warmup);
  }

  std::istringstream bad("n,t,dtheta,f_hat,r_hat,qplus_mag,qminus_mag,innov_mag,warmup\n0,0,0,50,0,1,0,0,2\n");
  CHECK_THROWS_AS(read_estimates_csv(bad), SchemaError);
}

TEST_CASE("event detection") {
  CHECK(last_event_time(generate(experiment1()).truth, 1e-3) == doctest::Approx(0.5));
  CHECK(last_event_time(generate(experiment2(1, 0.5)).truth, 1e-3) == doctest::Approx(0.5));
  CHECK(last_event_time(constant_truth(100, 50), 1e-3) == 0.0);

  const SummaryWindow w = default_window(generate(experiment1()).truth, 1e-3);
  CHECK(w.start_s == doctest::Approx(1.0));
  CHECK(w.end_s == doctest::Approx(2.0));
  CHECK(w.event_s == doctest::Approx(0.5));
}

TEST_CASE("summary statistics") {
  // Alternating +-0.01 Hz error after a late 0.1 Hz excursion.
  std::vector<double> f(1000, 50.0);
  for (int n = 0; n < 1000; ++n) f[n] += (n % 2 == 0 ? 0.01 : -0.01);
  f[400] = 50.1;
  const auto truth = constant_truth(1000, 50);
  const RunSummary s = summarize(records_from(f), truth, {0.5, 1.0, 0.2});
  CHECK(s.samples == 500);
  CHECK(std::abs(s.mean_error_hz) < 1e-12);
  CHECK(s.error_variance_hz2 == doctest::Approx(1e-4));
  REQUIRE(s.convergence_time_s);
  CHECK(*s.convergence_time_s == doctest::Approx(0.201));

  f.back() = 51;
  CHECK_FALSE(summarize(records_from(f), truth, {0.5, 1.0, 0.2}).convergence_time_s);

  const std::string text = format_summary(s);
  CHECK(text.find("mean of f_hat - f") != std::string::npos);
  CHECK(text.find("variance of f_hat - f") != std::string::npos);
  CHECK(text.find("convergence time") != std::string::npos);
}

TEST_CASE("summary windows exclude warm-up and require coverage") {
  const auto truth = constant_truth(300, 50);
  CHECK_THROWS_AS(summarize(records_from(std::vector<double>(300, 50.0)), truth, {0.0, 0.1, 0.0}), ConfigError);
  CHECK(summarize(records_from(std::vector<double>(300, 50.0)), truth, {0.0, 0.3, 0.0}).samples == 200);
  const auto short_truth = constant_truth(10, 50);
  CHECK_THROWS_AS(summarize(records_from(std::vector<double>(300, 50.0)), short_truth, {0.0, 0.3, 0.0}),
                  ConfigError);
}
