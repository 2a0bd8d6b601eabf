#pragma once

#include "wmsindy/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmsindy {

enum class NoiseFamily { gaussian, uniform, gamma, rayleigh, dweibull };

std::string to_string(NoiseFamily family);
NoiseFamily parse_noise_family(std::string_view name);

/// standardized: raw draws are standardized, then mapped to the target mean/std.
/// natural: raw draws keep their own mean; only the scale parameter is chosen
/// so the family's population std matches the target (gamma, rayleigh).
enum class NoiseMode { standardized, natural };

std::string to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view name);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  NoiseMode mode = NoiseMode::standardized;
  /// Noise level in percent of each component's std. Ignored when
  /// target_std is set.
  double level_percent = 0.0;
  std::optional<std::vector<double>> target_mean;  // per component
  std::optional<std::vector<double>> target_std;   // per component
  double gamma_shape = 2.0;
  double dweibull_shape = 2.0;
  std::uint64_t seed = 0;
};

/// 100·std(noise)/std(signal), population standard deviations.
double noise_level(std::span<const double> signal, std::span<const double> noise);

/// N×D noise for the given states.
Matrix generate_noise(const NoiseSpec& spec, const Matrix& signal);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<long> counts;
};

Histogram histogram(std::span<const double> values, int bins = 50);

struct NoiseSummary {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> skewness;
  std::vector<Histogram> histograms;
};

NoiseSummary summarize_noise(const Matrix& noise, int bins = 50);

}  // namespace wmsindy
