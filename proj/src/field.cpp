#include "wmsindy/field.hpp"

#include <utility>

namespace wmsindy {

Vector KnownModel::operator()(const Vector& x) const {
  require(x.size() == spec.dimension, "known model dimension mismatch");
  Matrix row = x.transpose();
  return (evaluate_library(spec, row) * coeffs).transpose();
}

PolynomialMap::PolynomialMap(LibrarySpec spec) : spec_(std::move(spec)) {
  factors_.resize(spec_.terms.size());
  for (int j = 0; j < spec_.size(); ++j) {
    for (int d = 0; d < spec_.dimension; ++d) {
      if (spec_.terms[j][d] > 0) factors_[j].push_back({d, spec_.terms[j][d]});
    }
  }
}

void PolynomialMap::evaluate(const Matrix& states, Matrix& theta) const {
  const Eigen::Index rows = states.rows();
  theta.resize(rows, spec_.size());
  for (int j = 0; j < spec_.size(); ++j) {
    auto col = theta.col(j).array();
    const auto& fs = factors_[j];
    if (fs.empty()) {
      col.setOnes();
      continue;
    }
    col = states.col(fs[0].component).array();
    for (int k = 1; k < fs[0].exponent; ++k) col *= states.col(fs[0].component).array();
    for (std::size_t f = 1; f < fs.size(); ++f) {
      for (int k = 0; k < fs[f].exponent; ++k) col *= states.col(fs[f].component).array();
    }
  }
}

void PolynomialMap::accumulate_adjoint(const Matrix& states, const Matrix& weights,
                                       Matrix& states_bar) const {
  Eigen::ArrayXd partial(states.rows());
  for (int j = 0; j < spec_.size(); ++j) {
    const auto& fs = factors_[j];
    for (std::size_t f = 0; f < fs.size(); ++f) {
      const int d = fs[f].component;
      const int e = fs[f].exponent;
      partial = weights.col(j).array();
      if (e > 1) partial *= static_cast<double>(e);
      for (int k = 1; k < e; ++k) partial *= states.col(d).array();
      for (std::size_t g = 0; g < fs.size(); ++g) {
        if (g == f) continue;
        for (int k = 0; k < fs[g].exponent; ++k) partial *= states.col(fs[g].component).array();
      }
      states_bar.col(d).array() += partial;
    }
  }
}

VectorField::VectorField(const LibrarySpec& spec, const std::optional<KnownModel>& known)
    : library_(spec) {
  if (known) {
    require(known->spec.dimension == spec.dimension, "known model dimension mismatch");
    known_map_.emplace(known->spec);
    known_coeffs_ = known->coeffs;
  }
}

void VectorField::evaluate(const Matrix& states, const Matrix& xi, Matrix& theta,
                           Matrix& out) const {
  library_.evaluate(states, theta);
  out.noalias() = theta * xi;
  if (known_map_) {
    Matrix known_theta;
    known_map_->evaluate(states, known_theta);
    out.noalias() += known_theta * known_coeffs_;
  }
}

void VectorField::adjoint(const Matrix& states, const Matrix& theta, const Matrix& xi,
                          const Matrix& cotangent, Matrix& states_bar, Matrix* xi_bar) const {
  Matrix weights = cotangent * xi.transpose();
  library_.accumulate_adjoint(states, weights, states_bar);
  if (known_map_) {
    Matrix known_weights = cotangent * known_coeffs_.transpose();
    known_map_->accumulate_adjoint(states, known_weights, states_bar);
  }
  if (xi_bar != nullptr) xi_bar->noalias() += theta.transpose() * cotangent;
}

void rk4_forward(const VectorField& field, const Matrix& xi, const Matrix& states, double h,
                 Matrix& next, Rk4Tape* tape) {
  Rk4Tape local;
  Rk4Tape& t = tape != nullptr ? *tape : local;
  Matrix k1, k2, k3, k4;

  t.stage[0] = states;
  field.evaluate(t.stage[0], xi, t.theta[0], k1);
  t.stage[1] = states + (0.5 * h) * k1;
  field.evaluate(t.stage[1], xi, t.theta[1], k2);
  t.stage[2] = states + (0.5 * h) * k2;
  field.evaluate(t.stage[2], xi, t.theta[2], k3);
  t.stage[3] = states + h * k3;
  field.evaluate(t.stage[3], xi, t.theta[3], k4);

  next = states + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void rk4_adjoint(const VectorField& field, const Matrix& xi, const Rk4Tape& tape, double h,
                 const Matrix& next_bar, Matrix& states_bar, Matrix* xi_bar) {
  const Eigen::Index rows = next_bar.rows();
  const Eigen::Index cols = next_bar.cols();
  Matrix k1_bar = (h / 6.0) * next_bar;
  Matrix k2_bar = (h / 3.0) * next_bar;
  Matrix k3_bar = k2_bar;
  Matrix k4_bar = k1_bar;
  states_bar = next_bar;

  Matrix stage_bar = Matrix::Zero(rows, cols);
  field.adjoint(tape.stage[3], tape.theta[3], xi, k4_bar, stage_bar, xi_bar);
  states_bar += stage_bar;
  k3_bar += h * stage_bar;

  stage_bar.setZero();
  field.adjoint(tape.stage[2], tape.theta[2], xi, k3_bar, stage_bar, xi_bar);
  states_bar += stage_bar;
  k2_bar += (0.5 * h) * stage_bar;

  stage_bar.setZero();
  field.adjoint(tape.stage[1], tape.theta[1], xi, k2_bar, stage_bar, xi_bar);
  states_bar += stage_bar;
  k1_bar += (0.5 * h) * stage_bar;

  stage_bar.setZero();
  field.adjoint(tape.stage[0], tape.theta[0], xi, k1_bar, stage_bar, xi_bar);
  states_bar += stage_bar;
}

}  // namespace wmsindy
