#include "wmsindy/library.hpp"

#include <algorithm>
#include <numeric>

namespace wmsindy {

namespace {

void enumerate_exponents(int dimension, int remaining, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  const auto d = static_cast<int>(current.size());
  if (d == dimension) {
    out.push_back(current);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    current.push_back(e);
    enumerate_exponents(dimension, remaining - e, current, out);
    current.pop_back();
  }
}

int degree_of(const std::vector<int>& exps) {
  return std::accumulate(exps.begin(), exps.end(), 0);
}

// x^e for small non-negative integer e, with x^0 = 1 everywhere.
inline auto int_pow(const Eigen::Ref<const Vector>& x, int e) -> Vector {
  Vector out = Vector::Ones(x.size());
  for (int k = 0; k < e; ++k) out.array() *= x.array();
  return out;
}

}  // namespace

int LibrarySpec::total_degree(int j) const { return degree_of(terms.at(j)); }

std::string LibrarySpec::term_name(int j) const {
  const auto& exps = terms.at(j);
  std::string name;
  for (int d = 0; d < dimension; ++d) {
    if (exps[d] == 0) continue;
    if (!name.empty()) name += '*';
    name += 'x' + std::to_string(d + 1);
    if (exps[d] > 1) name += '^' + std::to_string(exps[d]);
  }
  return name.empty() ? "1" : name;
}

std::vector<std::string> LibrarySpec::term_names() const {
  std::vector<std::string> names;
  names.reserve(terms.size());
  for (int j = 0; j < size(); ++j) names.push_back(term_name(j));
  return names;
}

int LibrarySpec::index_of(std::span<const int> exponents) const {
  for (int j = 0; j < size(); ++j) {
    if (std::equal(terms[j].begin(), terms[j].end(), exponents.begin(), exponents.end())) return j;
  }
  return -1;
}

LibrarySpec build_library(int dimension, int max_degree, bool include_constant) {
  require(dimension >= 1, "library dimension must be >= 1");
  require(max_degree >= 1, "library degree must be >= 1");

  LibrarySpec spec;
  spec.dimension = dimension;
  spec.max_degree = max_degree;
  spec.include_constant = include_constant;

  std::vector<int> current;
  enumerate_exponents(dimension, max_degree, current, spec.terms);
  std::erase_if(spec.terms, [&](const auto& e) { return !include_constant && degree_of(e) == 0; });
  std::sort(spec.terms.begin(), spec.terms.end(), [](const auto& a, const auto& b) {
    const int da = degree_of(a);
    const int db = degree_of(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  });
  return spec;
}

Matrix evaluate_library(const LibrarySpec& spec, const Matrix& states) {
  require(states.cols() == spec.dimension, "state dimension does not match library");
  Matrix theta(states.rows(), spec.size());
  for (int j = 0; j < spec.size(); ++j) {
    auto col = theta.col(j);
    col.setOnes();
    for (int d = 0; d < spec.dimension; ++d) {
      for (int k = 0; k < spec.terms[j][d]; ++k) col.array() *= states.col(d).array();
    }
  }
  return theta;
}

Matrix library_partial(const LibrarySpec& spec, const Matrix& states, int d) {
  require(states.cols() == spec.dimension, "state dimension does not match library");
  require(d >= 0 && d < spec.dimension, "partial derivative index out of range");
  Matrix out = Matrix::Zero(states.rows(), spec.size());
  for (int j = 0; j < spec.size(); ++j) {
    const int e = spec.terms[j][d];
    if (e == 0) continue;
    auto col = out.col(j);
    col = static_cast<double>(e) * int_pow(states.col(d), e - 1);
    for (int other = 0; other < spec.dimension; ++other) {
      if (other == d) continue;
      for (int k = 0; k < spec.terms[j][other]; ++k) col.array() *= states.col(other).array();
    }
  }
  return out;
}

}  // namespace wmsindy
