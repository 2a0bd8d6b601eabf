#include "wmsindy/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace wmsindy {

int SparseColumn::active_count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

void SparseCoefficients::set_column(int d, const SparseColumn& column) {
  xi.col(d) = column.xi;
  for (int j = 0; j < xi.rows(); ++j) active(j, d) = column.active[j];
}

Vector subset_least_squares(const Matrix& A, const Vector& b, const std::vector<bool>& use) {
  std::vector<int> cols;
  for (int j = 0; j < static_cast<int>(use.size()); ++j) {
    if (use[j]) cols.push_back(j);
  }
  Vector out = Vector::Zero(A.cols());
  if (cols.empty()) return out;
  Matrix sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
  const Vector sol = sub.completeOrthogonalDecomposition().solve(b);
  for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] = sol[static_cast<Eigen::Index>(k)];
  return out;
}

SparseColumn stls(const Matrix& G, const Vector& b, double lambda, int max_rounds) {
  require(G.rows() >= 1 && G.rows() == b.size(), "stls: G and b must have matching rows >= 1");
  require(lambda >= 0.0, "stls: lambda must be non-negative");
  require(max_rounds >= 1, "stls: max_rounds must be >= 1");
  require(G.allFinite() && b.allFinite(), "stls: non-finite regression data");

  const auto J = static_cast<int>(G.cols());
  SparseColumn out;
  out.active.assign(J, true);
  out.xi = Vector::Zero(J);

  bool stable = false;
  for (int round = 0; round < max_rounds; ++round) {
    out.xi = subset_least_squares(G, b, out.active);
    std::vector<bool> next = out.active;
    for (int j = 0; j < J; ++j) {
      if (next[j] && std::abs(out.xi[j]) < lambda) next[j] = false;
    }
    out.active_history.push_back(static_cast<int>(std::count(next.begin(), next.end(), true)));
    if (next == out.active) {
      stable = true;
      break;
    }
    out.active = std::move(next);
    if (out.active_count() == 0) {
      out.xi.setZero();
      return out;
    }
  }
  if (!stable) out.xi = subset_least_squares(G, b, out.active);
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(50);
  for (int k = 0; k < 50; ++k) grid[k] = std::pow(10.0, -3.0 + 4.0 * k / 49.0);
  return grid;
}

double lambda_selection_loss(const Matrix& G, const Vector& b, const SparseColumn& column) {
  return (G * column.xi - b).norm() / b.norm() +
         static_cast<double>(column.active_count()) / static_cast<double>(G.cols());
}

LambdaSelection lambda_grid_search(const Matrix& G, const Vector& b, std::span<const double> grid) {
  require(!grid.empty(), "lambda grid must be nonempty");
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());

  LambdaSelection best;
  if (b.norm() == 0.0) {
    best.lambda = sorted.back();
    best.column.xi = Vector::Zero(G.cols());
    best.column.active.assign(G.cols(), false);
    return best;
  }
  bool first = true;
  for (double lambda : sorted) {
    SparseColumn col = stls(G, b, lambda);
    const double loss = lambda_selection_loss(G, b, col);
    if (first || loss <= best.loss) {
      best = {lambda, loss, std::move(col)};
      first = false;
    }
  }
  return best;
}

WsindyResult wsindy_identify(const Trajectory& data, const LibrarySpec& spec, double tau, double tau_hat,
                             std::optional<double> lambda, const std::optional<KnownModel>& known) {
  require(data.dimension() == spec.dimension, "data dimension does not match library");
  WsindyResult out;
  out.testfns = build_test_functions(data.states, data.dt, tau, tau_hat);
  out.system = build_weak_system(data.states, spec, out.testfns.functions, known);
  out.coeffs.xi = Matrix::Zero(spec.size(), spec.dimension);
  out.coeffs.active = Mask::Constant(spec.size(), spec.dimension, false);

  const auto grid = default_lambda_grid();
  for (int d = 0; d < spec.dimension; ++d) {
    const WeakComponent& wc = out.system.components[d];
    if (lambda) {
      out.coeffs.set_column(d, stls(wc.G, wc.b, *lambda));
      out.lambdas.push_back(*lambda);
    } else {
      const LambdaSelection sel = lambda_grid_search(wc.G, wc.b, grid);
      out.coeffs.set_column(d, sel.column);
      out.lambdas.push_back(sel.lambda);
    }
  }
  return out;
}

}  // namespace wmsindy
