#include "qfe/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "qfe/oracle.hpp"
#include "qfe/pipeline.hpp"
#include "qfe/qekf.hpp"
#include "qfe/report.hpp"
#include "qfe/signal.hpp"

namespace qfe {
namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}
  double normal() { return gauss_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  Quaterniond quaternion() { return {normal(), normal(), normal(), normal()}; }
  UnitPureQuaterniond axis() { return UnitPureQuaterniond::normalized(normal(), normal(), normal()); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
};

Eigen::Matrix<double, 12, 12> random_spd(Random& r, double scale) {
  Eigen::Matrix<double, 12, 12> a;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) a(i, j) = r.normal();
  return scale * (a * a.transpose() / 12.0 + 0.1 * Eigen::Matrix<double, 12, 12>::Identity());
}

// ------------------------------------------------------------ criteria

CriterionResult algebra(std::uint64_t seed, double scale) {
  const double tol = 1e-13 * scale;
  Random r(seed);
  const Quaterniond i = Quaterniond::unit_i(), j = Quaterniond::unit_j(), k = Quaterniond::unit_k();
  double worst = 0;
  for (int n = 0; n < 1000; ++n) {
    const Quaterniond q = r.quaternion();
    const Quaterniond qi = involution(q, i), qj = involution(q, j), qk = involution(q, k);
    const Quaterniond parts[4] = {
        0.25 * (q + qi + qj + qk),
        inverse(i) * (0.25 * (q + qi - qj - qk)),
        inverse(j) * (0.25 * (q - qi + qj - qk)),
        inverse(k) * (0.25 * (q - qi - qj + qk)),
    };
    const double expected[4] = {q.w, q.x, q.y, q.z};
    for (int c = 0; c < 4; ++c) worst = std::max(worst, (parts[c] - Quaterniond(expected[c])).norm());
    worst = std::max(worst, (0.5 * (qi + qj + qk - q) - conjugate(q)).norm());
    worst = std::max(worst, (q * conjugate(q) - Quaterniond(q.squared_norm())).norm() / q.squared_norm());
  }
  return {1, "algebra: component recovery and conjugate identities (1000 random)", worst < tol,
          fmt("max error %.3e < %.3e", worst, tol)};
}

CriterionResult jacobian(std::uint64_t seed, double scale) {
  const double tol = 1e-6 * scale;
  const double h = 1e-6;
  Random r(seed);
  double worst = 0;
  for (int n = 0; n < 100; ++n) {
    const QssState<double> x{r.quaternion(), r.quaternion(), r.quaternion(), 1};
    const Vec12<double> x0 = lift(x);
    Mat12<double> numeric;
    for (int c = 0; c < 12; ++c) {
      Vec12<double> up = x0, down = x0;
      up[c] += h;
      down[c] -= h;
      numeric.col(c) = (lift(qss_transition(unlift_state<double>(up, 1))) -
                        lift(qss_transition(unlift_state<double>(down, 1)))) / (2 * h);
    }
    worst = std::max(worst, (qss_jacobian(x) - numeric).cwiseAbs().maxCoeff());
  }
  return {2, "Jacobian vs central finite differences (100 random states)", worst < tol,
          fmt("max deviation %.3e < %.3e", worst, tol)};
}

CriterionResult oracle_equivalence(std::uint64_t seed, double scale) {
  const double tol = 1e-10 * scale;
  Random r(seed);
  double worst_state = 0, worst_cov = 0;
  for (int n = 0; n < 100; ++n) {
    const QssState<double> x{exp_pure(r.axis(), r.uniform(0.05, 1.0)) * r.uniform(0.9, 1.1),
                             r.quaternion(), r.quaternion(), 1};
    const QssCovariance<double> p{random_spd(r, 0.1)};
    const QekfNoise<double> noise{r.uniform(1e-4, 1e-2), r.uniform(1e-4, 1e-2), r.uniform(1e-4, 1e-2),
                                  r.uniform(1e-2, 1.0)};
    const Quaterniond z = r.quaternion();

    const QssEstimate<double> prior = predict(x, p, noise);
    const QssEstimate<double> post =
        update(prior.state, prior.covariance, z - qss_output(prior.state), noise);

    DenseKfProblem d;
    d.mean = lift(x);
    d.covariance = p.lifted;
    d.transition = qss_jacobian(x);
    d.observation = qss_observation_matrix<double>();
    d.process_noise = noise.state_covariance();
    d.observation_noise = noise.observation_covariance();
    d.measurement = to_real_vec(z);
    d.propagated_mean = Eigen::VectorXd(lift(qss_transition(x)));
    const DenseKfResult o = dense_kf_step_oracle(d);
    worst_state = std::max(worst_state, (o.mean - lift(post.state)).cwiseAbs().maxCoeff());
    worst_cov = std::max(worst_cov, (o.covariance - post.covariance.lifted).cwiseAbs().maxCoeff());
  }
  return {3, "qekf predict+update vs dense Kalman oracle (100 random)",
          worst_state < tol && worst_cov < tol,
          fmt("state %.3e, covariance %.3e < %.3e", worst_state, worst_cov, tol)};
}

std::vector<PureQuatSample> sinusoid_triple(const std::array<double, 3>& amp, const std::array<double, 3>& phase,
                                            double f, double fs, std::int64_t count) {
  std::vector<PureQuatSample> out;
  for (std::int64_t n = 0; n < count; ++n) {
    const double w = 2 * kPi * f * static_cast<double>(n) / fs;
    out.push_back({n, Quaterniond::pure(amp[0] * std::sin(w + phase[0]), amp[1] * std::sin(w + phase[1]),
                                        amp[2] * std::sin(w + phase[2]))});
  }
  return out;
}

CriterionResult ellipse(std::uint64_t seed, double scale) {
  const double tol = 1e-9 * scale;
  Random r(seed);
  double worst = 0;
  for (int n = 0; n < 20; ++n) {
    const double f = r.uniform(45, 55);
    const std::array<double, 3> amp{r.uniform(0.1, 2), r.uniform(0.1, 2), r.uniform(0.1, 2)};
    const std::array<double, 3> ph{r.uniform(0, 2 * kPi), r.uniform(0, 2 * kPi), r.uniform(0, 2 * kPi)};
    const EllipseFit fit = fit_counter_rotating(sinusoid_triple(amp, ph, f, 1000, 50), f, 1000);
    worst = std::max(worst, fit.residual_rms / fit.signal_rms);
  }
  const EllipseFit bal = fit_counter_rotating(
      sinusoid_triple({1, 1, 1}, {0, 2 * kPi / 3, 4 * kPi / 3}, 50, 1000, 100), 50, 1000);
  const double ratio = bal.q_minus.norm() / bal.q_plus.norm();
  return {4, "counter-rotating fit exactness (20 unbalanced, 1 balanced)", worst < tol && ratio < tol,
          fmt("residual/rms %.3e, balanced |q-|/|q+| %.3e < %.3e", worst, ratio, tol)};
}

EstimatorConfig orders(std::vector<int> m) {
  EstimatorConfig c;
  c.harmonic_orders = std::move(m);
  return c;
}

struct Trace {
  GeneratedSignal signal;
  std::vector<EstimateRecord> records;
};

Trace estimate(const ScenarioSpec& spec, const EstimatorConfig& config) {
  Trace t{generate(spec), {}};
  t.records = run(embed(t.signal.samples), config);
  return t;
}

std::vector<ThreePhaseSample> slice(const std::vector<ThreePhaseSample>& s, double t0, double t1) {
  std::vector<ThreePhaseSample> out;
  for (const auto& x : s)
    if (x.t >= t0 && x.t < t1) out.push_back(x);
  return out;
}

constexpr SummaryWindow kExp1Window{1.0, 2.0, kExperimentEventTime};
constexpr SummaryWindow kExp2Window{1.5, 2.5, kExperimentEventTime};

struct ExperimentOne {
  CriterionResult tracking;
  CriterionResult rejection;
};

ExperimentOne experiment_one(const AcceptanceOptions& o) {
  const double mean_tol = 0.02 * o.tolerance_scale;
  const double std_tol = 0.02 * o.tolerance_scale;
  const double conv_tol = 0.3 * o.tolerance_scale;
  const double fft_tol = 0.02 * o.tolerance_scale;
  double worst_mean = 0, worst_std = 0, worst_conv = 0, worst_fft = 0;
  bool converged = true;
  double worst_ratio = 0;
  for (int k = 0; k < o.runs; ++k) {
    const ScenarioSpec spec = experiment1(o.seed + k);
    const Trace paired = estimate(spec, orders({1, 3}));
    const RunSummary s = summarize(paired.records, paired.signal.truth, kExp1Window);
    worst_mean = std::max(worst_mean, std::abs(s.mean_error_hz));
    worst_std = std::max(worst_std, std::sqrt(s.error_variance_hz2));
    if (s.convergence_time_s) worst_conv = std::max(worst_conv, *s.convergence_time_s);
    else converged = false;

    const double f_fft = fft_frequency_oracle(slice(paired.signal.samples, 1.0, 2.0), spec.sample_rate_hz);
    worst_fft = std::max(worst_fft, std::abs((49.8 + s.mean_error_hz) - f_fft));

    const std::vector<EstimateRecord> single = run(embed(paired.signal.samples), orders({1}));
    const RunSummary s1 = summarize(single, paired.signal.truth, kExp1Window);
    worst_ratio = std::max(worst_ratio, s.error_variance_hz2 / s1.error_variance_hz2);
  }
  ExperimentOne out;
  out.tracking = {5, "experiment 1: sag, 3rd harmonic, -0.2 Hz step, [1,3] banks",
                  worst_mean < mean_tol && worst_std < std_tol && converged && worst_conv < conv_tol &&
                      worst_fft < fft_tol,
                  fmt("worst of %d runs: |mean err| %.4f < %.3g Hz, std %.4f < %.3g Hz, "
                      "convergence %s < %.3g s, |mean f_hat - f_fft| %.4f < %.3g Hz",
                      o.runs, worst_mean, mean_tol, worst_std, std_tol,
                      converged ? fmt("%.3f s", worst_conv).c_str() : "never", conv_tol, worst_fft, fft_tol)};
  out.rejection = {7, "harmonic rejection: error variance [1,3] < [1] on experiment 1",
                   worst_ratio < 1.0 * o.tolerance_scale,
                   fmt("worst variance ratio [1,3]/[1] over %d runs %.4f < %.3g", o.runs, worst_ratio,
                       1.0 * o.tolerance_scale)};
  return out;
}

CriterionResult experiment_two(const AcceptanceOptions& o) {
  const double rate_tol = 0.05 * o.tolerance_scale;
  const double track_tol = 0.05 * o.tolerance_scale;
  double worst_rate = 0, worst_track = 0;
  for (double rate : {0.5, -0.5}) {
    for (int k = 0; k < o.runs; ++k) {
      const Trace t = estimate(experiment2(o.seed + k, rate), orders({1, 3}));
      const RunSummary s = summarize(t.records, t.signal.truth, kExp2Window);
      worst_rate = std::max(worst_rate, std::abs(s.rate_error_hz_per_s));
      worst_track = std::max(worst_track, std::sqrt(s.error_variance_hz2 + s.mean_error_hz * s.mean_error_hz));
    }
  }
  return {6, "experiment 2: +-0.5 Hz/s ramp under sag conditions, [1,3] banks",
          worst_rate < rate_tol && worst_track < track_tol,
          fmt("worst of %d runs per sign: |mean r_hat - r| %.4f < %.3g Hz/s, rms f error %.4f < %.3g Hz",
              o.runs, worst_rate, rate_tol, worst_track, track_tol)};
}

CriterionResult noise_free(const AcceptanceOptions& o) {
  const double f_tol = 1e-4 * o.tolerance_scale;
  const double r_tol = 1e-3 * o.tolerance_scale;
  ScenarioSpec spec;
  Segment s;
  s.duration_s = 1.0;
  spec.segments = {s};
  const auto q = embed(generate(spec).samples);
  double worst_f = 0, worst_r = 0;
  for (const auto& m : {std::vector<int>{1}, std::vector<int>{1, 3}}) {
    for (const EstimateRecord& r : run(q, orders(m))) {
      if (r.t < 0.3) continue;
      worst_f = std::max(worst_f, std::abs(r.frequency_hz - 50));
      worst_r = std::max(worst_r, std::abs(r.rate_hz_per_s));
    }
  }
  return {8, "noise-free balanced 50 Hz, after 0.3 s ([1] and [1,3])", worst_f < f_tol && worst_r < r_tol,
          fmt("max |f_hat - 50| %.3e < %.3g Hz, max |r_hat| %.3e < %.3g Hz/s", worst_f, f_tol, worst_r, r_tol)};
}

std::string serialize(const Trace& t) {
  std::ostringstream os;
  write_waveform_csv(os, t.signal.samples);
  write_truth_csv(os, t.signal.truth);
  write_estimates_csv(os, t.records);
  return os.str();
}

CriterionResult determinism(const AcceptanceOptions& o) {
  bool same = true;
  std::size_t bytes = 0;
  for (const ScenarioSpec& spec : {experiment1(o.seed), experiment2(o.seed, 0.5)}) {
    const std::string a = serialize(estimate(spec, orders({1, 3})));
    const std::string b = serialize(estimate(spec, orders({1, 3})));
    same = same && a == b;
    bytes += a.size();
  }
  return {9, "determinism: repeated simulate+estimate byte-identical", same,
          fmt("%zu bytes compared, %s", bytes, same ? "identical" : "DIFFERENT")};
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  std::vector<CriterionResult> out;
  const auto guarded = [&](int id, const char* title, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back({id, title, false, std::string("error: ") + e.what()});
    }
  };
  const double scale = options.tolerance_scale;
  guarded(1, "algebra", [&] { out.push_back(algebra(options.seed, scale)); });
  guarded(2, "Jacobian", [&] { out.push_back(jacobian(options.seed, scale)); });
  guarded(3, "oracle equivalence", [&] { out.push_back(oracle_equivalence(options.seed, scale)); });
  guarded(4, "ellipse exactness", [&] { out.push_back(ellipse(options.seed, scale)); });
  std::optional<ExperimentOne> one;
  guarded(5, "experiment 1", [&] { one = experiment_one(options); });
  if (one) out.push_back(one->tracking);
  guarded(6, "experiment 2", [&] { out.push_back(experiment_two(options)); });
  if (one) out.push_back(one->rejection);
  else out.push_back({7, "harmonic rejection", false, "error: experiment 1 failed to run"});
  guarded(8, "noise-free", [&] { out.push_back(noise_free(options)); });
  guarded(9, "determinism", [&] { out.push_back(determinism(options)); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::string format_acceptance(const std::vector<CriterionResult>& results) {
  std::string out;
  int passed = 0;
  for (const CriterionResult& r : results) {
    out += fmt("[%s] %d. %s: ", r.passed ? "PASS" : "FAIL", r.id, r.title.c_str());
    out += r.detail + "\n";
    passed += r.passed ? 1 : 0;
  }
  out += fmt("%d/%zu criteria passed\n", passed, results.size());
  return out;
}

bool all_passed(const std::vector<CriterionResult>& results) {
  return !results.empty() &&
         std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

}  // namespace qfe
