#include "qfe/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "csv.hpp"
#include "qfe/errors.hpp"

namespace qfe {

namespace {
constexpr std::string_view kEstimateHeader =
    "n,t,dtheta,f_hat,r_hat,qplus_mag,qminus_mag,innov_mag,warmup";
}

void write_estimates_csv(std::ostream& os, std::span<const EstimateRecord> records) {
  using csv::format_double;
  os << kEstimateHeader << '\n';
  for (const EstimateRecord& r : records) {
    const double qp = r.banks.empty() ? 0.0 : r.banks.front().q_plus_magnitude;
    const double qm = r.banks.empty() ? 0.0 : r.banks.front().q_minus_magnitude;
    os << r.n << ',' << format_double(r.t) << ',' << format_double(r.delta_theta) << ','
       << format_double(r.frequency_hz) << ',' << format_double(r.rate_hz_per_s) << ','
       << format_double(qp) << ',' << format_double(qm) << ','
       << format_double(r.innovation_magnitude) << ',' << (r.warmup ? 1 : 0) << '\n';
  }
}

std::vector<EstimateRecord> read_estimates_csv(std::istream& is) {
  std::vector<EstimateRecord> out;
  csv::read_csv(is, kEstimateHeader,
                [&](std::int64_t n, const std::vector<double>& v, std::size_t line) {
                  if (v[7] != 0 && v[7] != 1) throw SchemaError("warmup must be 0 or 1", line);
                  EstimateRecord r;
                  r.n = n;
                  r.t = v[0];
                  r.delta_theta = v[1];
                  r.frequency_hz = v[2];
                  r.rate_hz_per_s = v[3];
                  r.banks.push_back({1, v[4], v[5], {}, true});
                  r.innovation_magnitude = v[6];
                  r.warmup = v[7] == 1;
                  out.push_back(std::move(r));
                });
  return out;
}

void save_estimates_csv(std::span<const EstimateRecord> records, const std::filesystem::path& path) {
  std::ofstream os = csv::open_out(path);
  write_estimates_csv(os, records);
}

std::vector<EstimateRecord> load_estimates_csv(const std::filesystem::path& path) {
  std::ifstream is = csv::open_in(path);
  return read_estimates_csv(is);
}

double last_event_time(std::span<const TruthSample> truth, double sample_interval) {
  double event = 0;
  for (std::size_t i = 1; i < truth.size(); ++i) {
    const TruthSample& a = truth[i - 1];
    const TruthSample& b = truth[i];
    const double expected = a.frequency_hz + a.rate_hz_per_s * sample_interval;
    if (b.rate_hz_per_s != a.rate_hz_per_s || std::abs(b.frequency_hz - expected) > 1e-9)
      event = b.t;
  }
  return event;
}

SummaryWindow default_window(std::span<const TruthSample> truth, double sample_interval,
                             double settle_s) {
  const double event = last_event_time(truth, sample_interval);
  const double end = truth.empty() ? 0.0 : truth.back().t + sample_interval;
  return {std::min(event + settle_s, end), end, event};
}

RunSummary summarize(std::span<const EstimateRecord> records, std::span<const TruthSample> truth,
                     const SummaryWindow& window) {
  const auto truth_at = [&](std::int64_t n) -> const TruthSample& {
    const auto it = std::lower_bound(truth.begin(), truth.end(), n,
                                     [](const TruthSample& s, std::int64_t k) { return s.n < k; });
    if (it == truth.end() || it->n != n)
      throw ConfigError("truth does not cover sample " + std::to_string(n));
    return *it;
  };

  RunSummary s;
  s.window = window;
  double sum = 0, sum2 = 0, rate = 0;
  std::optional<double> last_outside;
  bool any_after_event = false;
  for (const EstimateRecord& r : records) {
    const TruthSample& t = truth_at(r.n);
    const double e = r.frequency_hz - t.frequency_hz;
    if (r.t >= window.event_s) {
      any_after_event = true;
      if (!(std::abs(e) < kConvergenceBandHz)) last_outside = r.t;
    }
    if (r.warmup || r.t < window.start_s || r.t >= window.end_s) continue;
    sum += e;
    sum2 += e * e;
    rate += r.rate_hz_per_s - t.rate_hz_per_s;
    ++s.samples;
  }
  if (s.samples == 0) throw ConfigError("no post-warm-up samples inside the summary window");
  const double count = static_cast<double>(s.samples);
  s.mean_error_hz = sum / count;
  s.error_variance_hz2 = std::max(0.0, sum2 / count - s.mean_error_hz * s.mean_error_hz);
  s.rate_error_hz_per_s = rate / count;

  if (any_after_event) {
    const double dt = records.size() > 1 ? records[1].t - records[0].t : 0.0;
    if (!last_outside) {
      s.convergence_time_s = 0.0;
    } else if (*last_outside < records.back().t) {
      s.convergence_time_s = *last_outside + dt - window.event_s;
    }
  }
  return s;
}

std::string format_summary(const RunSummary& s) {
  char buf[256];
  std::string out;
  const auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
  };
  line("window                 [%.6g, %.6g) s, %zu post-warm-up samples\n", s.window.start_s,
       s.window.end_s, s.samples);
  line("mean error             %+.6e Hz      mean of f_hat - f over the window\n", s.mean_error_hz);
  line("error variance         %.6e Hz^2     variance of f_hat - f over the window\n",
       s.error_variance_hz2);
  line("rate error             %+.6e Hz/s    mean of r_hat - r over the window\n",
       s.rate_error_hz_per_s);
  if (s.convergence_time_s)
    line("convergence time       %.6g s           after t = %.6g s, until |f_hat - f| < %.2g Hz holds\n",
         *s.convergence_time_s, s.window.event_s, kConvergenceBandHz);
  else
    line("convergence time       not reached     |f_hat - f| < %.2g Hz never holds to the end\n",
         kConvergenceBandHz);
  if (s.samples_per_second)
    line("throughput             %.6g samples/s\n", *s.samples_per_second);
  return out;
}

}  // namespace qfe
