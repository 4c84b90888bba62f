// qfe: simulate three-phase scenarios, estimate frequency and rate of
// change, run the acceptance suite and a throughput benchmark.
//
// Exit status: 0 success, 1 acceptance failure or run-time numeric failure,
// 2 usage, configuration or input error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "qfe/acceptance.hpp"
#include "qfe/config.hpp"
#include "qfe/errors.hpp"
#include "qfe/pipeline.hpp"
#include "qfe/report.hpp"
#include "qfe/signal.hpp"

namespace fs = std::filesystem;
using namespace qfe;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

/// Thrown for problems with arguments or input files.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require_parent(const fs::path& out) {
  const fs::path parent = out.parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw UsageError("output directory does not exist: " + parent.string());
}

// ----------------------------------------------------------- simulate

struct SimulateArgs {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

int simulate(const SimulateArgs& a) {
  ScenarioSpec spec = load_scenario(a.config);
  if (a.seed) spec.seed = *a.seed;
  require_parent(a.out);
  const GeneratedSignal g = generate(spec);
  save_csv(g.samples, a.out);
  save_truth_csv(g.truth, truth_sidecar_path(a.out));
  std::printf("wrote %zu samples to %s (truth: %s)\n", g.samples.size(), a.out.string().c_str(),
              truth_sidecar_path(a.out).string().c_str());
  return kOk;
}

// ----------------------------------------------------------- estimate

struct EstimateArgs {
  fs::path in;
  fs::path config;
  fs::path out;
  fs::path truth;
  std::optional<double> window_start;
};

/// Sample rate implied by the time column, or 0 when it cannot be inferred.
double inferred_rate(const std::vector<ThreePhaseSample>& s) {
  if (s.size() < 2) return 0;
  const double span = s.back().t - s.front().t;
  const double steps = static_cast<double>(s.back().n - s.front().n);
  return span > 0 && steps > 0 ? steps / span : 0;
}

int estimate(const EstimateArgs& a) {
  EstimatorSettings settings = a.config.empty() ? EstimatorSettings{} : load_estimator_config(a.config);
  if (!fs::exists(a.in)) throw UsageError("input file not found: " + a.in.string());
  const std::vector<ThreePhaseSample> samples = load_csv(a.in);
  if (samples.empty()) throw UsageError(a.in.string() + ": no samples");

  const double rate = inferred_rate(samples);
  if (!settings.sample_rate_given && rate > 0) {
    settings.config.sample_rate_hz = std::round(rate * 1e6) / 1e6;
  } else if (settings.sample_rate_given && rate > 0 &&
             std::abs(rate - settings.config.sample_rate_hz) > 1e-6 * settings.config.sample_rate_hz) {
    throw ConfigError("sample_rate_hz " + std::to_string(settings.config.sample_rate_hz) +
                      " does not match the input time column (" + std::to_string(rate) + " Hz)");
  }

  require_parent(a.out);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<EstimateRecord> records = run(embed(samples), settings.config);
  const double elapsed = seconds_since(t0);
  save_estimates_csv(records, a.out);
  std::printf("wrote %zu estimates to %s\n", records.size(), a.out.string().c_str());

  const fs::path truth_path = a.truth.empty() ? truth_sidecar_path(a.in) : a.truth;
  if (!fs::exists(truth_path)) {
    if (!a.truth.empty()) throw UsageError("truth file not found: " + truth_path.string());
    std::printf("no truth sidecar (%s); summary skipped\n", truth_path.string().c_str());
    return kOk;
  }
  const std::vector<TruthSample> truth = load_truth_csv(truth_path);
  SummaryWindow window = default_window(truth, settings.config.sample_interval());
  if (a.window_start) window.start_s = *a.window_start;
  RunSummary summary = summarize(records, truth, window);
  if (elapsed > 0) summary.samples_per_second = static_cast<double>(records.size()) / elapsed;
  std::printf("summary against %s\n%s", truth_path.string().c_str(), format_summary(summary).c_str());
  return kOk;
}

// ------------------------------------------------------------- accept

struct AcceptArgs {
  AcceptanceOptions options;
  fs::path out;
};

int accept(const AcceptArgs& a) {
  if (!(a.options.tolerance_scale > 0)) throw UsageError("--tolerance-scale must be positive");
  if (a.options.runs < 1) throw UsageError("--runs must be at least 1");
  if (!a.out.empty()) require_parent(a.out);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CriterionResult> results = run_acceptance(a.options);
  const std::string report = format_acceptance(results);
  std::fputs(report.c_str(), stdout);
  if (!a.out.empty()) {
    std::ofstream os(a.out, std::ios::binary);
    os << report;
    if (!os) throw UsageError("cannot write " + a.out.string());
  }
  std::fprintf(stderr, "acceptance suite finished in %.1f s\n", seconds_since(t0));
  return all_passed(results) ? kOk : kFailed;
}

// -------------------------------------------------------------- bench

struct BenchArgs {
  std::int64_t samples = 100000;
  fs::path config;
  std::uint64_t seed = 1;
};

int bench(const BenchArgs& a) {
  if (a.samples < 1000) throw UsageError("--samples must be at least 1000");
  EstimatorConfig config;
  config.harmonic_orders = {1, 3};
  if (!a.config.empty()) config = load_estimator_config(a.config).config;

  // Experiment-1 conditions stretched to the requested length.
  ScenarioSpec spec = experiment1(a.seed);
  spec.segments[1].duration_s = static_cast<double>(a.samples) / spec.sample_rate_hz - spec.segments[0].duration_s;
  config.sample_rate_hz = spec.sample_rate_hz;
  const auto q = embed(generate(spec).samples);

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<EstimateRecord> records = run(q, config);
  const double elapsed = seconds_since(t0);
  std::printf("banks        %zu\nsamples      %zu\nelapsed      %.3f s\nthroughput   %.0f samples/s\n",
              config.harmonic_orders.size(), records.size(), elapsed,
              static_cast<double>(records.size()) / elapsed);
  std::printf("final f_hat  %.6f Hz\n", records.back().frequency_hz);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quaternion two-stage frequency estimator for three-phase power systems"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a scenario waveform and its truth sidecar");
  s->add_option("--config", sim.config, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  s->add_option("--out", sim.out, "Waveform CSV; truth goes to <out>.truth.csv")->required();
  s->add_option("--seed", sim.seed, "Noise seed (overrides the scenario file)");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate frequency and rate of change from a waveform CSV");
  e->add_option("--in", est.in, "Waveform CSV (n,t,va,vb,vc)")->required();
  e->add_option("--config", est.config, "Estimator YAML file (defaults when omitted)")->check(CLI::ExistingFile);
  e->add_option("--out", est.out, "Estimate CSV")->required();
  e->add_option("--truth", est.truth, "Truth CSV (default: <in>.truth.csv when present)");
  e->add_option("--window-start", est.window_start, "Start of the summary window, s");

  AcceptArgs acc;
  auto* a = app.add_subcommand("accept", "Run the acceptance criteria");
  a->add_option("--seed", acc.options.seed, "Base seed")->capture_default_str();
  a->add_option("--runs", acc.options.runs, "Noisy repetitions per experiment")->capture_default_str();
  a->add_option("--tolerance-scale", acc.options.tolerance_scale, "Multiply every tolerance")
      ->capture_default_str();
  a->add_option("--out", acc.out, "Also write the report to this file");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Measure estimator throughput");
  b->add_option("--samples", bn.samples, "Number of samples")->capture_default_str();
  b->add_option("--config", bn.config, "Estimator YAML file (default [1,3] banks)")->check(CLI::ExistingFile);
  b->add_option("--seed", bn.seed, "Noise seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*s) return simulate(sim);
    if (*e) return estimate(est);
    if (*a) return accept(acc);
    if (*b) return bench(bn);
  } catch (const UsageError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kUsage;
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "configuration error: %s\n", err.what());
    return kUsage;
  } catch (const ParseError& err) {
    std::fprintf(stderr, "input error: %s\n", err.what());
    return kUsage;
  } catch (const NumericError& err) {
    std::fprintf(stderr, "numeric failure: %s\n", err.what());
    return kFailed;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kUsage;
  }
  return kUsage;
}
