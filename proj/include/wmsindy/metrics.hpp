#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/dynamics.hpp"
#include "wmsindy/field.hpp"
#include "wmsindy/joint.hpp"
#include "wmsindy/sparse.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wmsindy {

/// What the metrics compare against.
struct GroundTruth {
  Matrix states;  // clean X, N×D
  Matrix noise;   // true N, N×D (may be empty when unknown)
  Matrix coeffs;  // true Ξ in the identification library (may be empty)
  Rhs field;      // true f
  double dt = 0.0;
};

/// An identified model to score; noise is absent for WSINDy.
struct ModelEstimate {
  SparseCoefficients coeffs;
  std::optional<Matrix> noise;
};

ModelEstimate as_estimate(const IdentificationResult& result);
ModelEstimate as_estimate(const WsindyResult& result);

struct RunMetrics {
  std::optional<double> e_noise;
  double e_field = 0.0;
  std::optional<double> e_forward;
  std::optional<double> e_param;
  bool success = false;
};

/// Forward-prediction window: `horizon` seconds starting at sample `start`.
struct Horizon {
  double seconds = 0.0;
  int start = 0;
};

RunMetrics compute_metrics(const GroundTruth& truth, const ModelEstimate& estimate, const LibrarySpec& spec,
                           const std::optional<KnownModel>& known, const std::optional<Horizon>& horizon);

/// Σ_{i=1}^{M−1}‖x_i − F̃^i(x_0)‖² / ‖X_window‖²_F. Rollouts that leave the
/// clamp add the clamp penalty for every remaining sample.
double forward_error(const Matrix& window, const Matrix& coeffs, const LibrarySpec& spec,
                     const std::optional<KnownModel>& known, double dt);

struct Spread {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};

/// Median (mean of the central pair for even counts), min, max.
Spread spread(std::vector<double> values);

struct RunSummary {
  double success_fraction = 0.0;
  std::optional<Spread> e_noise;
  Spread e_field;
  std::optional<Spread> e_forward;
  std::optional<Spread> e_param;
};

double success_rate(const std::vector<RunMetrics>& runs);
RunSummary summarize_runs(const std::vector<RunMetrics>& runs);

}  // namespace wmsindy
