#include "wmsindy/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace wmsindy {

ModelEstimate as_estimate(const IdentificationResult& result) {
  ModelEstimate e{result.coeffs, std::nullopt};
  if (result.has_noise()) e.noise = result.noise;
  return e;
}

ModelEstimate as_estimate(const WsindyResult& result) { return {result.coeffs, std::nullopt}; }

double forward_error(const Matrix& window, const Matrix& coeffs, const LibrarySpec& spec,
                     const std::optional<KnownModel>& known, double dt) {
  const auto m = static_cast<int>(window.rows());
  require(m >= 2, "forward error needs at least two samples");
  const double scale = window.squaredNorm();
  require(scale > 0.0, "forward error window has zero norm");
  const VectorField field(spec, known);
  Matrix state = window.row(0);
  Matrix next;
  double total = 0.0;
  for (int i = 1; i < m; ++i) {
    rk4_forward(field, coeffs, state, dt, next, nullptr);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kRolloutClamp) {
      total += static_cast<double>(m - i) * kRolloutClamp * kRolloutClamp;
      break;
    }
    total += (window.row(i) - next).squaredNorm();
    state.swap(next);
  }
  return total / scale;
}

RunMetrics compute_metrics(const GroundTruth& truth, const ModelEstimate& estimate, const LibrarySpec& spec,
                           const std::optional<KnownModel>& known, const std::optional<Horizon>& horizon) {
  const auto n = truth.states.rows();
  const auto dims = truth.states.cols();
  require(dims == spec.dimension, "truth dimension does not match library");
  require(estimate.coeffs.xi.rows() == spec.size() && estimate.coeffs.xi.cols() == dims,
          "estimated coefficients do not match library");
  require(static_cast<bool>(truth.field), "truth needs a vector field");

  RunMetrics out;
  if (estimate.noise && truth.noise.size() > 0) {
    require(estimate.noise->rows() == n && estimate.noise->cols() == dims, "noise shape mismatch");
    require(truth.noise.rows() == n && truth.noise.cols() == dims, "true noise shape mismatch");
    out.e_noise = (truth.noise - *estimate.noise).squaredNorm() / static_cast<double>(n);
  }

  const VectorField model(spec, known);
  Matrix theta, predicted;
  model.evaluate(truth.states, estimate.coeffs.xi, theta, predicted);
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vector f = truth.field(truth.states.row(k).transpose());
    num += (f - predicted.row(k).transpose()).squaredNorm();
    den += f.squaredNorm();
  }
  require(den > 0.0, "true vector field vanishes on the trajectory");
  out.e_field = num / den;

  if (horizon) {
    require(truth.dt > 0.0, "truth dt must be positive");
    require(horizon->start >= 0 && horizon->start < n - 1, "horizon start outside the record");
    const auto samples = static_cast<Eigen::Index>(std::llround(horizon->seconds / truth.dt)) + 1;
    const Eigen::Index m = std::min<Eigen::Index>(samples, n - horizon->start);
    out.e_forward = forward_error(truth.states.middleRows(horizon->start, m), estimate.coeffs.xi, spec, known,
                                  truth.dt);
  }

  if (truth.coeffs.size() > 0) {
    require(truth.coeffs.rows() == spec.size() && truth.coeffs.cols() == dims, "true coefficient shape mismatch");
    out.e_param = (truth.coeffs - estimate.coeffs.xi).norm() / truth.coeffs.norm();
    const Mask true_support = truth.coeffs.array() != 0.0;
    const Mask found_support = estimate.coeffs.xi.array() != 0.0;
    out.success = (true_support.array() == found_support.array()).all();
  }
  return out;
}

Spread spread(std::vector<double> values) {
  require(!values.empty(), "spread of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  Spread s;
  s.count = static_cast<int>(n);
  s.min = values.front();
  s.max = values.back();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

double success_rate(const std::vector<RunMetrics>& runs) {
  require(!runs.empty(), "success rate of an empty list");
  const auto hits = std::count_if(runs.begin(), runs.end(), [](const RunMetrics& r) { return r.success; });
  return static_cast<double>(hits) / static_cast<double>(runs.size());
}

namespace {

std::optional<Spread> optional_spread(const std::vector<RunMetrics>& runs,
                                      std::optional<double> RunMetrics::*field) {
  std::vector<double> values;
  for (const auto& r : runs) {
    if (r.*field) values.push_back(*(r.*field));
  }
  if (values.empty()) return std::nullopt;
  return spread(std::move(values));
}

}  // namespace

RunSummary summarize_runs(const std::vector<RunMetrics>& runs) {
  RunSummary s;
  s.success_fraction = success_rate(runs);
  std::vector<double> field;
  for (const auto& r : runs) field.push_back(r.e_field);
  s.e_field = spread(std::move(field));
  s.e_noise = optional_spread(runs, &RunMetrics::e_noise);
  s.e_forward = optional_spread(runs, &RunMetrics::e_forward);
  s.e_param = optional_spread(runs, &RunMetrics::e_param);
  return s;
}

}  // namespace wmsindy
