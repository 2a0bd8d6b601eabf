#include "wmsindy/testfn.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace wmsindy {

namespace {

// Running sums for least-squares lines over index ranges; indices and values
// are centered so the closed-form SSE does not cancel catastrophically.
struct PrefixSums {
  std::vector<long double> n, x, y, xx, xy, yy;

  PrefixSums(std::span<const double> values) {
    const std::size_t len = values.size();
    long double mean = 0.0L;
    for (double v : values) mean += v;
    mean /= static_cast<long double>(len);
    const long double center = static_cast<long double>(len) / 2.0L;
    n.assign(len + 1, 0.0L);
    x = xx = xy = yy = y = n;
    for (std::size_t i = 0; i < len; ++i) {
      const long double xi = static_cast<long double>(i) - center;
      const long double yi = static_cast<long double>(values[i]) - mean;
      n[i + 1] = n[i] + 1.0L;
      x[i + 1] = x[i] + xi;
      y[i + 1] = y[i] + yi;
      xx[i + 1] = xx[i] + xi * xi;
      xy[i + 1] = xy[i] + xi * yi;
      yy[i + 1] = yy[i] + yi * yi;
    }
  }

  // SSE of the LS line through points [begin, end).
  long double sse(std::size_t begin, std::size_t end) const {
    const long double cnt = n[end] - n[begin];
    const long double sx = x[end] - x[begin];
    const long double sy = y[end] - y[begin];
    const long double sxx = xx[end] - xx[begin] - sx * sx / cnt;
    const long double sxy = xy[end] - xy[begin] - sx * sy / cnt;
    const long double syy = yy[end] - yy[begin] - sy * sy / cnt;
    const long double r = syy - (sxx > 0.0L ? sxy * sxy / sxx : 0.0L);
    return r > 0.0L ? r : 0.0L;
  }
};

}  // namespace

int corner_index(std::span<const double> values) {
  const auto len = values.size();
  require(len >= 4, "corner search needs at least 4 points");
  const PrefixSums sums(values);
  std::size_t best = 2;
  long double best_err = std::numeric_limits<long double>::infinity();
  for (std::size_t k = 2; k + 2 <= len; ++k) {
    const long double err = sums.sse(0, k) + sums.sse(k, len);
    if (err < best_err) {
      best_err = err;
      best = k;
    }
  }
  return static_cast<int>(best);
}

WavenumberEstimate estimate_wavenumber(std::span<const double> signal) {
  const auto n = static_cast<int>(signal.size());
  require(n >= 8, "wavenumber estimation needs at least 8 samples");

  std::vector<double> input(signal.begin(), signal.end());
  double scale = 0.0;
  for (double v : input) {
    require(std::isfinite(v), "wavenumber estimation needs finite data");
    scale = std::max(scale, std::abs(v));
  }
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, input);

  const int band = n / 2;
  std::vector<double> cumulative(band);
  double running = 0.0;
  for (int k = 1; k <= band; ++k) {
    running += std::abs(spectrum[k]);
    cumulative[k - 1] = running;
  }

  if (running <= 1e-9 * n * scale) return {std::max(1, n / 16), true};
  // The first piece ends at band index k−1, i.e. frequency k.
  return {corner_index(cumulative), false};
}

double support_equation(double m, int n, int k_star, double tau, double tau_hat) {
  const double nn = static_cast<double>(n) * n;
  const double th2 = tau_hat * tau_hat;
  const double kk = static_cast<double>(k_star) * k_star;
  return std::log((2.0 * m - 1.0) / (m * m)) *
             (4.0 * std::numbers::pi * std::numbers::pi * kk * m * m - 3.0 * nn * th2) -
         2.0 * nn * th2 * std::log(tau);
}

int min_degree_for_decay(int m, double tau) {
  require(m >= 2, "support must be at least 2");
  require(tau > 0.0 && tau < 1.0, "decay tolerance must lie in (0, 1)");
  const double ratio = (2.0 * m - 1.0) / (static_cast<double>(m) * m);
  int p = std::max(1, static_cast<int>(std::ceil(std::log(tau) / std::log(ratio))) - 1);
  while (std::pow(ratio, p) > tau) ++p;
  while (p > 1 && std::pow(ratio, p - 1) <= tau) --p;
  return p;
}

SupportDegree solve_support_and_degree(int n, int k_star, double tau, double tau_hat) {
  require(n >= 5, "support solve needs N >= 5");
  require(k_star >= 1 && k_star <= n / 2, "k_star out of range [1, N/2]");
  require(tau_hat < 0.0, "tau_hat must be negative");

  const int m_max = (n - 1) / 2;
  double lo = 2.0;
  double hi = (n - 1) / 2.0;
  double f_lo = support_equation(lo, n, k_star, tau, tau_hat);
  const double f_hi = support_equation(hi, n, k_star, tau, tau_hat);

  SupportDegree out;
  if (!(f_lo * f_hi < 0.0)) {
    out.m = std::clamp(n / 20, 2, m_max);
    out.fallback = true;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f_mid = support_equation(mid, n, k_star, tau, tau_hat);
      if ((f_mid < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    out.m = std::clamp(static_cast<int>(std::floor(root + 0.5)), 2, m_max);
  }
  out.p = min_degree_for_decay(out.m, tau);
  return out;
}

TestFunction build_test_function(int m, int p, double dt) {
  require(m >= 2 && p >= 1, "test function needs m >= 2 and p >= 1");
  require(dt > 0.0, "test function needs dt > 0");
  TestFunction tf;
  tf.m = m;
  tf.p = p;
  tf.dt = dt;
  tf.phi.resize(2 * m + 1);
  tf.dphi.resize(2 * m + 1);
  const double width = m * dt;
  for (int j = -m; j <= m; ++j) {
    const double u = static_cast<double>(j) / m;
    const double base = 1.0 - u * u;
    tf.phi[j + m] = std::pow(base, p);
    tf.dphi[j + m] = -(2.0 * p / width) * u * std::pow(base, p - 1);
  }
  const double norm = tf.phi.norm();
  tf.phi /= norm;
  tf.dphi /= norm;
  tf.sigma = width / std::sqrt(2.0 * p + 3.0);
  return tf;
}

TestFunctionSet build_test_functions(const Matrix& states, double dt, double tau, double tau_hat) {
  const auto n = static_cast<int>(states.rows());
  TestFunctionSet set;
  for (int d = 0; d < states.cols(); ++d) {
    const Vector column = states.col(d);
    const WavenumberEstimate k = estimate_wavenumber(std::span<const double>(column.data(), n));
    const SupportDegree md = solve_support_and_degree(n, k.k_star, tau, tau_hat);
    TestFunction tf = build_test_function(md.m, md.p, dt);
    set.diagnostics.push_back({d, k.k_star, md.m, md.p, tf.sigma, k.fallback || md.fallback});
    set.functions.push_back(std::move(tf));
  }
  return set;
}

}  // namespace wmsindy
