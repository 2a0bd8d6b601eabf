#include "wmsindy/noise.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/seed_seq.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <boost/random/weibull_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wmsindy {

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::uniform: return "uniform";
    case NoiseFamily::gamma: return "gamma";
    case NoiseFamily::rayleigh: return "rayleigh";
    case NoiseFamily::dweibull: return "dweibull";
  }
  return "unknown";
}

NoiseFamily parse_noise_family(std::string_view name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "uniform") return NoiseFamily::uniform;
  if (name == "gamma") return NoiseFamily::gamma;
  if (name == "rayleigh") return NoiseFamily::rayleigh;
  if (name == "dweibull") return NoiseFamily::dweibull;
  throw ContractViolation("unknown noise family: " + std::string(name));
}

std::string to_string(NoiseMode mode) {
  return mode == NoiseMode::standardized ? "standardized" : "natural";
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "standardized") return NoiseMode::standardized;
  if (name == "natural") return NoiseMode::natural;
  throw ContractViolation("unknown noise mode: " + std::string(name));
}

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Unit-scale draws of each family. Population std of these draws:
// gaussian 1, uniform 1/√3, gamma √k, rayleigh √((4−π)/2), dweibull √Γ(1+2/c).
std::vector<double> raw_draws(const NoiseSpec& spec, int n, std::uint64_t seed, int component) {
  boost::random::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(component)};
  boost::random::mt19937_64 rng(seq);
  std::vector<double> out(n);
  switch (spec.family) {
    case NoiseFamily::gaussian: {
      boost::random::normal_distribution<double> dist(0.0, 1.0);
      for (auto& x : out) x = dist(rng);
      break;
    }
    case NoiseFamily::uniform: {
      boost::random::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (auto& x : out) x = dist(rng);
      break;
    }
    case NoiseFamily::gamma: {
      require(spec.gamma_shape > 0.0, "gamma shape must be positive");
      boost::random::gamma_distribution<double> dist(spec.gamma_shape, 1.0);
      for (auto& x : out) x = dist(rng);
      break;
    }
    case NoiseFamily::rayleigh: {
      // Inverse CDF; 1 − u lies in (0, 1].
      boost::random::uniform_real_distribution<double> dist(0.0, 1.0);
      for (auto& x : out) x = std::sqrt(-2.0 * std::log(1.0 - dist(rng)));
      break;
    }
    case NoiseFamily::dweibull: {
      require(spec.dweibull_shape > 0.0, "dweibull shape must be positive");
      boost::random::weibull_distribution<double> dist(spec.dweibull_shape, 1.0);
      boost::random::bernoulli_distribution<double> sign(0.5);
      for (auto& x : out) {
        const double w = dist(rng);
        x = sign(rng) ? w : -w;
      }
      break;
    }
  }
  return out;
}

double family_std(const NoiseSpec& spec) {
  switch (spec.family) {
    case NoiseFamily::gaussian: return 1.0;
    case NoiseFamily::uniform: return 1.0 / std::sqrt(3.0);
    case NoiseFamily::gamma: return std::sqrt(spec.gamma_shape);
    case NoiseFamily::rayleigh: return std::sqrt((4.0 - std::numbers::pi) / 2.0);
    case NoiseFamily::dweibull: return std::sqrt(std::tgamma(1.0 + 2.0 / spec.dweibull_shape));
  }
  return 1.0;
}

}  // namespace

double noise_level(std::span<const double> signal, std::span<const double> noise) {
  require(!signal.empty() && signal.size() == noise.size(), "signal and noise must have equal nonzero length");
  const double s = population_std(signal);
  require(s > 0.0, "noise level undefined for a zero-variance signal");
  return 100.0 * population_std(noise) / s;
}

Matrix generate_noise(const NoiseSpec& spec, const Matrix& signal) {
  require(signal.allFinite(), "signal must be finite");
  const auto n = static_cast<int>(signal.rows());
  const auto dims = static_cast<int>(signal.cols());
  require(n >= 2, "need at least two samples");
  require(spec.level_percent >= 0.0, "noise level must be non-negative");
  if (spec.target_std) require(static_cast<int>(spec.target_std->size()) == dims, "target_std size mismatch");
  if (spec.target_mean) require(static_cast<int>(spec.target_mean->size()) == dims, "target_mean size mismatch");

  Matrix out = Matrix::Zero(n, dims);
  for (int d = 0; d < dims; ++d) {
    double target_std;
    if (spec.target_std) {
      target_std = (*spec.target_std)[d];
    } else {
      const Vector col = signal.col(d);
      target_std = spec.level_percent / 100.0 * population_std({col.data(), static_cast<std::size_t>(n)});
    }
    require(target_std >= 0.0, "target std must be non-negative");
    const double target_mean = spec.target_mean ? (*spec.target_mean)[d] : 0.0;
    if (target_std == 0.0) {
      out.col(d).setConstant(target_mean);
      continue;
    }
    const std::vector<double> raw = raw_draws(spec, n, spec.seed, d);
    if (spec.mode == NoiseMode::standardized) {
      const double mu = mean_of(raw);
      const double s = population_std(raw);
      require(s > 0.0, "degenerate noise draw");
      for (int k = 0; k < n; ++k) out(k, d) = target_mean + target_std * (raw[k] - mu) / s;
    } else {
      const double scale = target_std / family_std(spec);
      for (int k = 0; k < n; ++k) out(k, d) = target_mean + scale * raw[k];
    }
  }
  return out;
}

Histogram histogram(std::span<const double> values, int bins) {
  require(bins >= 1, "histogram needs at least one bin");
  require(!values.empty(), "histogram of an empty series");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * b / bins;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    h.counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  return h;
}

NoiseSummary summarize_noise(const Matrix& noise, int bins) {
  NoiseSummary s;
  for (int d = 0; d < noise.cols(); ++d) {
    const Vector col = noise.col(d);
    const std::span<const double> v(col.data(), static_cast<std::size_t>(col.size()));
    const double mu = mean_of(v);
    const double sd = population_std(v);
    double m3 = 0.0;
    for (double x : v) m3 += std::pow(x - mu, 3);
    m3 /= static_cast<double>(v.size());
    s.mean.push_back(mu);
    s.std.push_back(sd);
    s.skewness.push_back(sd > 0.0 ? m3 / (sd * sd * sd) : 0.0);
    s.histograms.push_back(histogram(v, bins));
  }
  return s;
}

}  // namespace wmsindy
