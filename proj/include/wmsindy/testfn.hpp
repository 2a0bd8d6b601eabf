#pragma once

#include "wmsindy/common.hpp"

#include <span>
#include <vector>

namespace wmsindy {

inline constexpr double kDefaultTau = 1e-10;
inline constexpr double kDefaultTauHat = -2.0;

/// Sampled bump φ(t) = (1 − (t/(mΔt))²)^p on 2m+1 points and its derivative,
/// both divided by the discrete L2 norm of the φ samples.
struct TestFunction {
  int m = 0;
  int p = 0;
  double dt = 0.0;
  Vector phi;
  Vector dphi;
  double sigma = 0.0;  // width of the matching Gaussian, mΔt/√(2p+3)
};

struct TestFunctionDiagnostics {
  int component = 0;
  int k_star = 0;
  int m = 0;
  int p = 0;
  double sigma = 0.0;
  bool fallback_used = false;
};

struct WavenumberEstimate {
  int k_star = 0;
  bool fallback = false;
};

struct SupportDegree {
  int m = 0;
  int p = 0;
  bool fallback = false;
};

/// Breakpoint of the best two-piece least-squares line fit of `values`.
/// Returns the index where the second piece starts; each piece has >= 2 points.
int corner_index(std::span<const double> values);

/// Spectral corner of a real series: cumulative sum of |DFT| over the
/// one-sided band 1..⌊N/2⌋, then its two-line corner (as a frequency index).
WavenumberEstimate estimate_wavenumber(std::span<const double> signal);

/// F(m) whose root ties the support to the wavenumber.
double support_equation(double m, int n, int k_star, double tau, double tau_hat);

/// Smallest p >= 1 with ((2m−1)/m²)^p <= tau.
int min_degree_for_decay(int m, double tau);

SupportDegree solve_support_and_degree(int n, int k_star, double tau = kDefaultTau,
                                       double tau_hat = kDefaultTauHat);

TestFunction build_test_function(int m, int p, double dt);

struct TestFunctionSet {
  std::vector<TestFunction> functions;
  std::vector<TestFunctionDiagnostics> diagnostics;
};

/// One test function per state component, derived from that component's data.
TestFunctionSet build_test_functions(const Matrix& states, double dt, double tau = kDefaultTau,
                                     double tau_hat = kDefaultTauHat);

}  // namespace wmsindy
