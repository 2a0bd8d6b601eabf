#include "wmsindy/weak.hpp"

namespace wmsindy {

Vector correlate_valid(const Vector& signal, const Vector& taps) {
  const Eigen::Index width = taps.size();
  const Eigen::Index rows = signal.size() - width + 1;
  require(rows >= 1, "correlation taps longer than signal");
  Vector out(rows);
  for (Eigen::Index h = 0; h < rows; ++h) out[h] = taps.dot(signal.segment(h, width));
  return out;
}

WeakSystem build_weak_system(const Matrix& states, const LibrarySpec& spec,
                             const std::vector<TestFunction>& testfns,
                             const std::optional<KnownModel>& known) {
  const auto n = static_cast<int>(states.rows());
  const auto dims = static_cast<int>(states.cols());
  require(dims == spec.dimension, "state dimension does not match library");
  require(static_cast<int>(testfns.size()) == dims, "need one test function per component");

  const Matrix theta = evaluate_library(spec, states);
  Matrix known_values;
  if (known) {
    require(known->spec.dimension == dims, "known model dimension mismatch");
    known_values = evaluate_library(known->spec, states) * known->coeffs;
  }

  WeakSystem system;
  system.components.resize(dims);
  for (int d = 0; d < dims; ++d) {
    const TestFunction& tf = testfns[d];
    require(n > 2 * tf.m, "test function support of component " + std::to_string(d + 1) +
                              " (2m+1 = " + std::to_string(2 * tf.m + 1) +
                              ") exceeds the record length " + std::to_string(n));
    WeakComponent& wc = system.components[d];
    const int rows = n - 2 * tf.m;
    wc.centers.resize(rows);
    for (int h = 0; h < rows; ++h) wc.centers[h] = h + tf.m;

    wc.b = -tf.dt * correlate_valid(states.col(d), tf.dphi);
    if (known) wc.b -= tf.dt * correlate_valid(known_values.col(d), tf.phi);

    wc.G.resize(rows, spec.size());
    for (int j = 0; j < spec.size(); ++j) wc.G.col(j) = tf.dt * correlate_valid(theta.col(j), tf.phi);
  }
  return system;
}

double weak_residual(const WeakSystem& system, const Matrix& coeffs) {
  require(static_cast<Eigen::Index>(system.components.size()) == coeffs.cols(),
          "coefficient columns do not match weak system");
  double total = 0.0;
  for (std::size_t d = 0; d < system.components.size(); ++d) {
    const auto& wc = system.components[d];
    require(wc.G.cols() == coeffs.rows(), "coefficient rows do not match library");
    total += (wc.G * coeffs.col(static_cast<Eigen::Index>(d)) - wc.b).squaredNorm();
  }
  return total;
}

}  // namespace wmsindy
