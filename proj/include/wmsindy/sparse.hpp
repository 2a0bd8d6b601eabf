#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/dynamics.hpp"
#include "wmsindy/testfn.hpp"
#include "wmsindy/weak.hpp"

#include <optional>
#include <span>
#include <vector>

namespace wmsindy {

/// One column of a sparse coefficient matrix and the rounds that produced it.
struct SparseColumn {
  Vector xi;
  std::vector<bool> active;
  std::vector<int> active_history;  // active count after each thresholding round

  int active_count() const;
};

/// J×D coefficients; xi is zero wherever active is false.
struct SparseCoefficients {
  Matrix xi;
  Mask active;

  int active_count() const { return static_cast<int>(active.count()); }
  void set_column(int d, const SparseColumn& column);
};

/// Minimum-norm least squares restricted to the columns flagged in `use`;
/// entries outside `use` are zero.
Vector subset_least_squares(const Matrix& A, const Vector& b, const std::vector<bool>& use);

/// Sequentially thresholded least squares: refit on the active columns and
/// drop |ξ| < λ until the support stops changing.
SparseColumn stls(const Matrix& G, const Vector& b, double lambda, int max_rounds = 25);

struct LambdaSelection {
  double lambda = 0.0;
  double loss = 0.0;
  SparseColumn column;
};

/// 50 log-spaced thresholds on [1e-3, 1e1].
std::vector<double> default_lambda_grid();

/// ‖Gξ − b‖/‖b‖ + (#active)/J.
double lambda_selection_loss(const Matrix& G, const Vector& b, const SparseColumn& column);

/// Threshold with the lowest selection loss; ties go to the larger λ.
LambdaSelection lambda_grid_search(const Matrix& G, const Vector& b, std::span<const double> grid);

struct WsindyResult {
  SparseCoefficients coeffs;
  TestFunctionSet testfns;
  WeakSystem system;
  std::vector<double> lambdas;  // threshold used per component
};

/// Weak-form SINDy on raw data: per-component test functions, weak system,
/// then STLS at a fixed λ or by grid search when λ is absent.
WsindyResult wsindy_identify(const Trajectory& data, const LibrarySpec& spec, double tau, double tau_hat,
                             std::optional<double> lambda, const std::optional<KnownModel>& known);

}  // namespace wmsindy
