#include "qfe/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "qfe/errors.hpp"

namespace qfe {

// ------------------------------------------------------------ dense KF

namespace {

/// Minimal row-major dense matrix; only the arithmetic the oracle needs.
struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

  static Dense from(const Eigen::MatrixXd& m) {
    Dense d(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (std::size_t r = 0; r < d.rows; ++r)
      for (std::size_t c = 0; c < d.cols; ++c)
        d.at(r, c) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return d;
  }
  static Dense column(const Eigen::VectorXd& x) { return from(Eigen::MatrixXd(x)); }
  static Dense identity(std::size_t n) {
    Dense d(n, n);
    for (std::size_t i = 0; i < n; ++i) d.at(i, i) = 1.0;
    return d;
  }
  Eigen::MatrixXd to_eigen() const {
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = at(r, c);
    return m;
  }
};

Dense operator*(const Dense& a, const Dense& b) {
  if (a.cols != b.rows) throw std::invalid_argument("oracle: dimension mismatch in product");
  Dense out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

Dense operator+(Dense a, const Dense& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("oracle: dimension mismatch in sum");
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

Dense operator-(Dense a, const Dense& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("oracle: dimension mismatch in difference");
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] -= b.v[i];
  return a;
}

Dense transpose(const Dense& a) {
  Dense out(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) out.at(c, r) = a.at(r, c);
  return out;
}

/// Gauss-Jordan inverse with partial pivoting.
Dense inverse(Dense a) {
  const std::size_t n = a.rows;
  Dense inv = Dense::identity(n);
  double scale = 0;
  for (double x : a.v) scale = std::max(scale, std::abs(x));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
    if (!(std::abs(a.at(pivot, col)) > 1e-14 * scale))
      throw DivergenceError("oracle: singular innovation covariance");
    for (std::size_t c = 0; c < n; ++c) {
      std::swap(a.at(col, c), a.at(pivot, c));
      std::swap(inv.at(col, c), inv.at(pivot, c));
    }
    const double d = a.at(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      a.at(col, c) /= d;
      inv.at(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a.at(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a.at(r, c) -= f * a.at(col, c);
        inv.at(r, c) -= f * inv.at(col, c);
      }
    }
  }
  return inv;
}

}  // namespace

DenseKfResult dense_kf_step_oracle(const DenseKfProblem& p) {
  const Dense x = Dense::column(p.mean);
  const Dense P = Dense::from(p.covariance);
  const Dense F = Dense::from(p.transition);
  const Dense H = Dense::from(p.observation);
  const Dense Q = Dense::from(p.process_noise);
  const Dense R = Dense::from(p.observation_noise);
  const Dense z = Dense::column(p.measurement);
  const std::size_t n = x.rows;
  if (P.rows != n || P.cols != n || F.rows != n || F.cols != n || Q.rows != n || Q.cols != n ||
      H.cols != n || R.rows != H.rows || R.cols != H.rows || z.rows != H.rows)
    throw std::invalid_argument("oracle: inconsistent dimensions");

  const Dense x_prior = p.propagated_mean ? Dense::column(*p.propagated_mean) : F * x;
  const Dense P_prior = F * P * transpose(F) + Q;
  const Dense S = H * P_prior * transpose(H) + R;
  const Dense K = P_prior * transpose(H) * inverse(S);
  const Dense x_post = x_prior + K * (z - H * x_prior);
  const Dense P_post = (Dense::identity(n) - K * H) * P_prior;
  return {x_post.to_eigen(), P_post.to_eigen()};
}

// --------------------------------------------------- counter-rotating fit

namespace {

using Vec3 = Eigen::Vector3d;

struct PlaneBasis {
  Vec3 t1;
  Vec3 t2;  // axis x t1
};

PlaneBasis plane_basis(const Vec3& u) {
  Eigen::Index k;
  u.cwiseAbs().minCoeff(&k);
  const Vec3 e = Vec3::Unit(k);
  const Vec3 t1 = u.cross(e).normalized();
  return {t1, u.cross(t1)};
}

struct InPlaneFit {
  double c1, c2, d1, d2;  // q+ = c1 t1 + c2 t2, q- = d1 t1 + d2 t2
};

class CircleFitter {
 public:
  CircleFitter(std::span<const PureQuatSample> samples, double delta_theta)
      : dtheta_(delta_theta) {
    y_.reserve(samples.size());
    cs_.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Quaterniond& q = samples[i].q;
      y_.emplace_back(q.x, q.y, q.z);
      const double a = static_cast<double>(i) * dtheta_;
      cs_.emplace_back(std::cos(a), std::sin(a));
    }
    // Normal equations of the (cos, sin) basis, shared by every axis.
    double cc = 0, ss = 0, sc = 0;
    for (const auto& [c, s] : cs_) {
      cc += c * c;
      ss += s * s;
      sc += s * c;
    }
    gram_ << cc, sc, sc, ss;
    gram_inv_ = gram_.inverse();
  }

  std::size_t size() const { return y_.size(); }

  InPlaneFit solve(const PlaneBasis& b) const {
    Eigen::Vector2d rp(0, 0), rr(0, 0);
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double p = y_[i].dot(b.t1);
      const double r = y_[i].dot(b.t2);
      rp += p * Eigen::Vector2d(cs_[i].first, cs_[i].second);
      rr += r * Eigen::Vector2d(cs_[i].first, cs_[i].second);
    }
    // p_n = alpha cos + beta sin; r_n = delta cos + gamma sin.
    const Eigen::Vector2d ab = gram_inv_ * rp;
    const Eigen::Vector2d dg = gram_inv_ * rr;
    const double alpha = ab(0), beta = ab(1), delta = dg(0), gamma = dg(1);
    return {(alpha + gamma) / 2, (delta - beta) / 2, (alpha - gamma) / 2, (delta + beta) / 2};
  }

  Vec3 model(const PlaneBasis& b, const InPlaneFit& f, std::size_t i) const {
    const double c = cs_[i].first, s = cs_[i].second;
    return b.t1 * (f.c1 * c - f.c2 * s + f.d1 * c + f.d2 * s) +
           b.t2 * (f.c1 * s + f.c2 * c - f.d1 * s + f.d2 * c);
  }

  Eigen::VectorXd residuals(const Vec3& axis) const {
    const PlaneBasis b = plane_basis(axis);
    const InPlaneFit f = solve(b);
    Eigen::VectorXd r(3 * y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i)
      r.segment<3>(3 * static_cast<Eigen::Index>(i)) = y_[i] - model(b, f, i);
    return r;
  }

  double cost(const Vec3& axis) const { return residuals(axis).squaredNorm(); }

  double signal_power() const {
    double p = 0;
    for (const Vec3& y : y_) p += y.squaredNorm();
    return p;
  }

 private:
  double dtheta_;
  std::vector<Vec3> y_;
  std::vector<std::pair<double, double>> cs_;
  Eigen::Matrix2d gram_;
  Eigen::Matrix2d gram_inv_;
};

/// Roughly uniform points on the upper hemisphere (u and -u describe the
/// same plane).
std::vector<Vec3> hemisphere_grid(int count) {
  std::vector<Vec3> pts;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (i + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    pts.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  return pts;
}

Vec3 refine_axis(const CircleFitter& fitter, Vec3 axis) {
  double lambda = 1e-3;
  Eigen::VectorXd r = fitter.residuals(axis);
  double cost = r.squaredNorm();
  for (int iter = 0; iter < 200 && cost > 0; ++iter) {
    const PlaneBasis tangent = plane_basis(axis);
    constexpr double h = 1e-7;
    Eigen::MatrixXd jac(r.size(), 2);
    jac.col(0) = (fitter.residuals((axis + h * tangent.t1).normalized()) -
                  fitter.residuals((axis - h * tangent.t1).normalized())) / (2 * h);
    jac.col(1) = (fitter.residuals((axis + h * tangent.t2).normalized()) -
                  fitter.residuals((axis - h * tangent.t2).normalized())) / (2 * h);
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d jtr = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() *= (1.0 + lambda);
      damped.diagonal().array() += 1e-300;
      const Eigen::Vector2d step = -damped.ldlt().solve(jtr);
      if (!step.allFinite()) break;
      const Vec3 candidate = (axis + step(0) * tangent.t1 + step(1) * tangent.t2).normalized();
      const Eigen::VectorXd rc = fitter.residuals(candidate);
      const double cc = rc.squaredNorm();
      if (cc < cost) {
        const bool tiny = step.norm() < 1e-15;
        axis = candidate;
        r = rc;
        cost = cc;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = !tiny;
        break;
      }
      lambda *= 10;
    }
    if (!improved) break;
  }
  return axis;
}

}  // namespace

Quaterniond EllipseFit::reconstruct(std::int64_t n) const {
  const double a = static_cast<double>(n) * delta_theta;
  return exp_pure(axis, a) * q_plus + exp_pure(axis, -a) * q_minus;
}

EllipseFit fit_counter_rotating(std::span<const PureQuatSample> samples, double frequency_hz,
                                double sample_rate_hz) {
  if (!(frequency_hz > 0) || !(sample_rate_hz > 2 * frequency_hz))
    throw DomainError("fit_counter_rotating: frequency must be in (0, f_s / 2)");
  const auto cycle = static_cast<std::size_t>(std::ceil(sample_rate_hz / frequency_hz));
  if (samples.size() < std::max<std::size_t>(cycle, 4))
    throw DomainError("fit_counter_rotating: window shorter than one cycle");

  const double dtheta = 2 * std::numbers::pi * frequency_hz / sample_rate_hz;
  const CircleFitter fitter(samples, dtheta);

  Vec3 best = Vec3::UnitZ();
  double best_cost = fitter.cost(best);
  for (const Vec3& u : hemisphere_grid(400)) {
    const double c = fitter.cost(u);
    if (c < best_cost) {
      best_cost = c;
      best = u;
    }
  }
  Vec3 axis = refine_axis(fitter, best);

  PlaneBasis b = plane_basis(axis);
  InPlaneFit f = fitter.solve(b);
  if (std::hypot(f.c1, f.c2) < std::hypot(f.d1, f.d2)) {
    axis = -axis;
    b = plane_basis(axis);
    f = fitter.solve(b);
  }
  const Vec3 qp = f.c1 * b.t1 + f.c2 * b.t2;
  const Vec3 qm = f.d1 * b.t1 + f.d2 * b.t2;
  const auto n = static_cast<double>(fitter.size());
  return {UnitPureQuaterniond::normalized(axis.x(), axis.y(), axis.z()),
          Quaterniond::pure(qp.x(), qp.y(), qp.z()),
          Quaterniond::pure(qm.x(), qm.y(), qm.z()),
          dtheta,
          std::sqrt(fitter.cost(axis) / n),
          std::sqrt(fitter.signal_power() / n)};
}

// ------------------------------------------------------- FFT frequency

double fft_frequency_oracle(std::span<const ThreePhaseSample> samples, double sample_rate_hz) {
  if (!(sample_rate_hz > 0)) throw DomainError("fft_frequency_oracle: sample rate must be positive");
  const std::size_t n = samples.size();
  if (n < 32) throw DomainError("fft_frequency_oracle: window too short");

  std::size_t nfft = 1;
  while (nfft < 16 * n) nfft <<= 1;

  std::array<std::vector<double>, 3> phases;
  for (auto& p : phases) p.reserve(n);
  for (const ThreePhaseSample& s : samples) {
    phases[0].push_back(s.va);
    phases[1].push_back(s.vb);
    phases[2].push_back(s.vc);
  }

  Eigen::FFT<double> fft;
  std::vector<double> power(nfft / 2 + 1, 0.0);
  double total = 0;
  for (auto& p : phases) {
    double mean = 0;
    for (double x : p) mean += x;
    mean /= static_cast<double>(n);
    std::vector<double> buf(nfft, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(n - 1));
      buf[i] = (p[i] - mean) * w;
      total += buf[i] * buf[i];
    }
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] += std::norm(spec[k]);
  }
  if (!(total > 1e-20)) throw DomainError("fft_frequency_oracle: no spectral peak (constant input)");

  std::size_t peak = 1;
  for (std::size_t k = 1; k + 1 < power.size(); ++k)
    if (power[k] > power[peak]) peak = k;
  if (peak < 2 || peak + 1 >= power.size())
    throw DomainError("fft_frequency_oracle: no interior spectral peak");

  // Parabola through the log magnitudes of the peak and its neighbours.
  const double a = std::log(power[peak - 1]);
  const double b = std::log(power[peak]);
  const double c = std::log(power[peak + 1]);
  const double denom = a - 2 * b + c;
  const double offset = denom != 0 ? 0.5 * (a - c) / denom : 0.0;
  const double freq = (static_cast<double>(peak) + offset) * sample_rate_hz / static_cast<double>(nfft);

  const double cycles = freq * static_cast<double>(n) / sample_rate_hz;
  if (cycles < 10) throw DomainError("fft_frequency_oracle: fewer than 10 cycles in window");
  return freq;
}

}  // namespace qfe
