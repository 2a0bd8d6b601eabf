#include "wmsindy/dynamics.hpp"
#include "wmsindy/noise.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace wmsindy;

namespace {

const NoiseFamily kFamilies[] = {NoiseFamily::gaussian, NoiseFamily::uniform, NoiseFamily::gamma,
                                 NoiseFamily::rayleigh, NoiseFamily::dweibull};

Matrix lorenz_states() {
  Vector x0(3);
  x0 << 5, 5, 25;
  return simulate_truth(make_system("lorenz"), x0, 25.0, 0.01).states;
}

std::span<const double> column(const Matrix& m, int d) {
  return {m.col(d).data(), static_cast<std::size_t>(m.rows())};
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double pstd(std::span<const double> v) {
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / v.size());
}

}  // namespace

TEST(Noise, LevelExamples) {
  std::vector<double> signal(100), noise(100);
  for (int i = 0; i < 100; ++i) signal[i] = (i % 2 == 0) ? 1.0 : -1.0;  // unit population std
  for (int i = 0; i < 100; ++i) noise[i] = 0.4 * ((i % 4 < 2) ? 1.0 : -1.0);
  EXPECT_NEAR(noise_level(signal, noise), 40.0, 1e-12);
  EXPECT_NEAR(noise_level(signal, signal), 100.0, 1e-12);
  EXPECT_EQ(noise_level(signal, std::vector<double>(100, 0.0)), 0.0);
  EXPECT_THROW(noise_level(std::vector<double>(5, 2.0), std::vector<double>(5, 1.0)), ContractViolation);
  EXPECT_THROW(noise_level(signal, std::vector<double>(3, 1.0)), ContractViolation);
}

TEST(Noise, StandardizedLevelIsExactForEveryFamily) {
  const Matrix x = lorenz_states();
  for (NoiseFamily f : kFamilies) {
    for (double level : {5.0, 40.0, 50.0}) {
      NoiseSpec ns;
      ns.family = f;
      ns.level_percent = level;
      ns.seed = 17;
      const Matrix n = generate_noise(ns, x);
      for (int d = 0; d < 3; ++d) {
        EXPECT_NEAR(noise_level(column(x, d), column(n, d)), level, 1e-10) << to_string(f) << " " << d;
        EXPECT_NEAR(mean(column(n, d)), 0.0, 1e-10 * pstd(column(x, d)));
      }
    }
  }
}

TEST(Noise, TargetMomentsAreHit) {
  const Matrix x = lorenz_states();
  NoiseSpec ns;
  ns.family = NoiseFamily::rayleigh;
  ns.target_mean = std::vector<double>{1.0, -2.0, 0.5};
  ns.target_std = std::vector<double>{0.3, 2.0, 4.0};
  const Matrix n = generate_noise(ns, x);
  for (int d = 0; d < 3; ++d) {
    EXPECT_NEAR(mean(column(n, d)), (*ns.target_mean)[d], 1e-12);
    EXPECT_NEAR(pstd(column(n, d)), (*ns.target_std)[d], 1e-12);
  }
  ns.target_std = std::vector<double>{0.3, 2.0};
  EXPECT_THROW(generate_noise(ns, x), ContractViolation);
}

TEST(Noise, ZeroLevelIsZero) {
  NoiseSpec ns;
  ns.family = NoiseFamily::gamma;
  ns.level_percent = 0.0;
  EXPECT_EQ(generate_noise(ns, lorenz_states()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Noise, Reproducible) {
  const Matrix x = lorenz_states();
  for (NoiseFamily f : kFamilies) {
    NoiseSpec ns;
    ns.family = f;
    ns.level_percent = 30.0;
    ns.seed = 5;
    const Matrix a = generate_noise(ns, x);
    const Matrix b = generate_noise(ns, x);
    EXPECT_TRUE((a.array() == b.array()).all());
    ns.seed = 6;
    EXPECT_FALSE((generate_noise(ns, x).array() == a.array()).all());
    // Components draw from distinct streams.
    EXPECT_GT((a.col(0) / pstd(column(a, 0)) - a.col(1) / pstd(column(a, 1))).norm(), 1.0);
  }
}

TEST(Noise, GammaNaturalModeKeepsItsMean) {
  const int n = 100000;
  Matrix signal(n, 1);
  for (int i = 0; i < n; ++i) signal(i, 0) = std::sin(0.01 * i);
  NoiseSpec ns;
  ns.family = NoiseFamily::gamma;
  ns.mode = NoiseMode::natural;
  ns.level_percent = 30.0;
  ns.seed = 2;
  const Matrix noise = generate_noise(ns, signal);
  const double ratio = mean(column(noise, 0)) / pstd(column(noise, 0));
  EXPECT_NEAR(ratio, std::sqrt(2.0), 0.05 * std::sqrt(2.0));
  EXPECT_NEAR(noise_level(column(signal, 0), column(noise, 0)), 30.0, 0.05 * 30.0);
  EXPECT_GT(noise.minCoeff(), 0.0);
}

TEST(Noise, RayleighNaturalModeMatchesStd) {
  const int n = 100000;
  Matrix signal(n, 1);
  for (int i = 0; i < n; ++i) signal(i, 0) = std::cos(0.003 * i);
  NoiseSpec ns;
  ns.family = NoiseFamily::rayleigh;
  ns.mode = NoiseMode::natural;
  ns.level_percent = 20.0;
  ns.seed = 3;
  const Matrix noise = generate_noise(ns, signal);
  EXPECT_NEAR(noise_level(column(signal, 0), column(noise, 0)), 20.0, 0.05 * 20.0);
  // Rayleigh mean/std = √(π/2) / √((4−π)/2).
  const double expected = std::sqrt(std::numbers::pi / 2) / std::sqrt((4 - std::numbers::pi) / 2);
  EXPECT_NEAR(mean(column(noise, 0)) / pstd(column(noise, 0)), expected, 0.05 * expected);
}

TEST(Noise, ShapeSurvivesStandardization) {
  const int n = 100000;
  Matrix signal(n, 1);
  for (int i = 0; i < n; ++i) signal(i, 0) = std::sin(0.02 * i);
  NoiseSpec ns;
  ns.level_percent = 40.0;
  ns.seed = 8;
  ns.family = NoiseFamily::gamma;
  const NoiseSummary gamma = summarize_noise(generate_noise(ns, signal));
  EXPECT_NEAR(gamma.skewness[0], 2.0 / std::sqrt(2.0), 0.1 * 2.0 / std::sqrt(2.0));
  ns.family = NoiseFamily::dweibull;
  EXPECT_LT(std::abs(summarize_noise(generate_noise(ns, signal)).skewness[0]), 0.05);
  ns.family = NoiseFamily::uniform;
  const Matrix u = generate_noise(ns, signal);
  // Standardized uniform noise stays within about √3 std.
  EXPECT_LE(u.cwiseAbs().maxCoeff(), std::sqrt(3.0) * pstd(column(u, 0)) * 1.01);
}

TEST(Noise, NamesRoundTrip) {
  for (NoiseFamily f : kFamilies) EXPECT_EQ(parse_noise_family(to_string(f)), f);
  EXPECT_EQ(parse_noise_mode("natural"), NoiseMode::natural);
  EXPECT_EQ(to_string(NoiseMode::standardized), "standardized");
  EXPECT_THROW(parse_noise_family("cauchy"), ContractViolation);
  EXPECT_THROW(parse_noise_mode("loud"), ContractViolation);
}

TEST(Noise, Histogram) {
  const std::vector<double> v = {0.0, 0.1, 0.5, 0.9, 1.0};
  const Histogram h = histogram(v, 2);
  ASSERT_EQ(h.edges.size(), 3u);
  EXPECT_DOUBLE_EQ(h.edges[1], 0.5);
  EXPECT_EQ(h.counts, (std::vector<long>{2, 3}));
  const Histogram flat = histogram(std::vector<double>(4, 2.0), 50);
  EXPECT_EQ(std::accumulate(flat.counts.begin(), flat.counts.end(), 0L), 4);
  EXPECT_EQ(flat.edges.size(), 51u);
}

TEST(Noise, SummaryMoments) {
  Matrix n(4, 2);
  n << 1, 0, 2, 0, 3, 0, 6, 0;
  const NoiseSummary s = summarize_noise(n);
  EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(s.std[0], std::sqrt(3.5));
  EXPECT_GT(s.skewness[0], 0.0);
  EXPECT_EQ(s.skewness[1], 0.0);
  EXPECT_EQ(s.histograms.size(), 2u);
}
