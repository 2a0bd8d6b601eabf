#pragma once

#include "wmsindy/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace wmsindy {

/// Ordered set of multivariate monomials θ_j(x) = ∏_d x_d^{e_jd}.
///
/// Terms are sorted by total degree, and within a degree in descending
/// lexicographic order of the exponent tuple (x1 before x2, x1^2 before
/// x1*x2). The ordering is part of the serialized coefficient format.
struct LibrarySpec {
  int dimension = 0;
  int max_degree = 0;
  bool include_constant = false;
  std::vector<std::vector<int>> terms;

  int size() const { return static_cast<int>(terms.size()); }
  int total_degree(int j) const;
  std::string term_name(int j) const;
  std::vector<std::string> term_names() const;
  /// Index of the term with the given exponents, or -1.
  int index_of(std::span<const int> exponents) const;
};

LibrarySpec build_library(int dimension, int max_degree, bool include_constant);

/// N×J matrix of monomials evaluated row-wise on `states` (N×D).
Matrix evaluate_library(const LibrarySpec& spec, const Matrix& states);

/// N×J matrix of ∂θ_j/∂x_d evaluated row-wise.
Matrix library_partial(const LibrarySpec& spec, const Matrix& states, int d);

}  // namespace wmsindy
