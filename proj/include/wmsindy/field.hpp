#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/library.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wmsindy {

/// Partially known dynamics g(x) in ẋ = g(x) + Θ(x)Ξ. Always polynomial, so
/// it shares the monomial machinery (and its adjoint) with the learned part.
struct KnownModel {
  std::string name;
  LibrarySpec spec;
  Matrix coeffs;  // J_g × D

  Vector operator()(const Vector& x) const;
};

/// Monomial evaluator over batches of states (rows) with a reverse-mode
/// adjoint. Batches are B×D, column-major, so every inner loop runs down a
/// contiguous column.
class PolynomialMap {
 public:
  PolynomialMap() = default;
  explicit PolynomialMap(LibrarySpec spec);

  const LibrarySpec& spec() const { return spec_; }

  void evaluate(const Matrix& states, Matrix& theta) const;

  /// states_bar(:, d) += Σ_j weights(:, j) ∘ ∂θ_j/∂x_d
  void accumulate_adjoint(const Matrix& states, const Matrix& weights, Matrix& states_bar) const;

 private:
  struct Factor {
    int component;
    int exponent;
  };
  LibrarySpec spec_;
  std::vector<std::vector<Factor>> factors_;
};

/// f(x) = g(x) + Θ(x)Ξ evaluated on batches, with its vector-Jacobian product.
class VectorField {
 public:
  VectorField(const LibrarySpec& spec, const std::optional<KnownModel>& known);

  int dimension() const { return library_.spec().dimension; }
  const LibrarySpec& spec() const { return library_.spec(); }

  /// out = g(X) + Θ(X)Ξ; theta receives Θ(X) for the adjoint pass.
  void evaluate(const Matrix& states, const Matrix& xi, Matrix& theta, Matrix& out) const;

  /// states_bar += (∂f/∂X)ᵀ cotangent; xi_bar += Θᵀ cotangent when non-null.
  void adjoint(const Matrix& states, const Matrix& theta, const Matrix& xi,
               const Matrix& cotangent, Matrix& states_bar, Matrix* xi_bar) const;

 private:
  PolynomialMap library_;
  std::optional<PolynomialMap> known_map_;
  Matrix known_coeffs_;
};

/// Stage values of one batched RK4 step, kept for the reverse pass.
struct Rk4Tape {
  Matrix stage[4];
  Matrix theta[4];
};

/// Classical RK4 step of a whole batch; h may be negative.
void rk4_forward(const VectorField& field, const Matrix& xi, const Matrix& states, double h,
                 Matrix& next, Rk4Tape* tape);

/// Reverse pass through a taped RK4 step: states_bar receives the pullback of
/// next_bar, xi_bar accumulates when non-null.
void rk4_adjoint(const VectorField& field, const Matrix& xi, const Rk4Tape& tape, double h,
                 const Matrix& next_bar, Matrix& states_bar, Matrix* xi_bar);

}  // namespace wmsindy
