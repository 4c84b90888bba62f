#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfe/pipeline.hpp"
#include "qfe/signal.hpp"

namespace qfe {

// Estimate CSV: n,t,dtheta,f_hat,r_hat,qplus_mag,qminus_mag,innov_mag,warmup
// (magnitudes of the fundamental bank; warmup is 0 or 1).
void write_estimates_csv(std::ostream& os, std::span<const EstimateRecord> records);
/// Reads back the columns written above; banks holds the fundamental only.
std::vector<EstimateRecord> read_estimates_csv(std::istream& is);
void save_estimates_csv(std::span<const EstimateRecord> records, const std::filesystem::path& path);
std::vector<EstimateRecord> load_estimates_csv(const std::filesystem::path& path);

/// Tolerance on |f_hat - f| that defines convergence.
inline constexpr double kConvergenceBandHz = 0.05;

struct SummaryWindow {
  double start_s = 0;  // inclusive
  double end_s = 0;    // exclusive
  /// Reference instant for the convergence time.
  double event_s = 0;
};

/// Last instant at which the true trajectory steps in frequency or changes
/// rate, or 0 when it has neither.
double last_event_time(std::span<const TruthSample> truth, double sample_interval);

/// [event + settle_s, end of record), with the event from last_event_time.
SummaryWindow default_window(std::span<const TruthSample> truth, double sample_interval,
                             double settle_s = 0.5);

struct RunSummary {
  SummaryWindow window;
  std::size_t samples = 0;
  double mean_error_hz = 0;
  double error_variance_hz2 = 0;
  double rate_error_hz_per_s = 0;
  /// Time from the event until |f_hat - f| < 0.05 Hz holds to the end of the
  /// record; empty when the last sample is still outside the band.
  std::optional<double> convergence_time_s;
  /// Filled by callers that time the run.
  std::optional<double> samples_per_second;
};

/// Statistics over post-warm-up records inside the window. Records and
/// truth are matched by sample index. Throws ConfigError when no records
/// fall inside the window.
RunSummary summarize(std::span<const EstimateRecord> records, std::span<const TruthSample> truth,
                     const SummaryWindow& window);

/// Human-readable block with each value's definition.
std::string format_summary(const RunSummary& s);

}  // namespace qfe
