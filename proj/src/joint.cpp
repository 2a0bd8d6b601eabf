#include "wmsindy/joint.hpp"

#include "wmsindy/weak.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace wmsindy {

std::string to_string(LossVariant variant) {
  switch (variant) {
    case LossVariant::wmsindy: return "wmsindy";
    case LossVariant::wmsindy_no_er: return "wmsindy_no_er";
    case LossVariant::msindy: return "msindy";
    case LossVariant::msindy_no_ed: return "msindy_no_ed";
  }
  return "unknown";
}

LossVariant parse_loss_variant(std::string_view name) {
  if (name == "wmsindy") return LossVariant::wmsindy;
  if (name == "wmsindy_no_er") return LossVariant::wmsindy_no_er;
  if (name == "msindy") return LossVariant::msindy;
  if (name == "msindy_no_ed") return LossVariant::msindy_no_ed;
  throw ContractViolation("unknown loss variant: " + std::string(name));
}

bool uses_weak_form(LossVariant variant) {
  return variant == LossVariant::wmsindy || variant == LossVariant::wmsindy_no_er;
}

Matrix central_difference(const Matrix& states, double dt) {
  const Eigen::Index n = states.rows();
  require(n >= 3, "central differences need at least 3 samples");
  Matrix out(n, states.cols());
  const double s = 1.0 / (2.0 * dt);
  out.row(0) = s * (-3.0 * states.row(0) + 4.0 * states.row(1) - states.row(2));
  out.middleRows(1, n - 2) = s * (states.bottomRows(n - 2) - states.topRows(n - 2));
  out.row(n - 1) = s * (3.0 * states.row(n - 1) - 4.0 * states.row(n - 2) + states.row(n - 3));
  return out;
}

namespace {

// Transpose of central_difference, accumulated into `out`.
void central_difference_adjoint(const Matrix& bar, double dt, Matrix& out) {
  const Eigen::Index n = bar.rows();
  const double s = 1.0 / (2.0 * dt);
  out.row(0) += -3.0 * s * bar.row(0);
  out.row(1) += 4.0 * s * bar.row(0);
  out.row(2) += -s * bar.row(0);
  out.bottomRows(n - 2) += s * bar.middleRows(1, n - 2);
  out.topRows(n - 2) -= s * bar.middleRows(1, n - 2);
  out.row(n - 1) += 3.0 * s * bar.row(n - 1);
  out.row(n - 2) += -4.0 * s * bar.row(n - 1);
  out.row(n - 3) += s * bar.row(n - 1);
}

double rollout_penalty() { return kRolloutClamp * kRolloutClamp; }

// Simulation error over both directions; states_bar / xi_bar accumulate the
// gradient with respect to x̃ and Ξ when non-null.
double simulation_term(const VectorField& field, const Matrix& states, const Matrix& xi, int q, double dt,
                       double omega_base, Matrix* states_bar, Matrix* xi_bar) {
  const auto n = static_cast<int>(states.rows());
  const int batch = n - 2 * q;
  require(q >= 1 && batch >= 1, "simulation error needs q >= 1 and N > 2q");
  const auto dims = states.cols();
  const bool want_grad = states_bar != nullptr;

  std::vector<double> omega(q + 1, 0.0);
  for (int i = 1; i <= q; ++i) omega[i] = std::pow(omega_base, i - 1);

  double total = 0.0;
  std::vector<Matrix> z(q + 1);
  std::vector<Rk4Tape> tapes(want_grad ? q + 1 : 0);
  std::vector<Matrix> residuals(q + 1);
  std::vector<std::vector<char>> alive_at(q + 1);

  for (const int sign : {1, -1}) {
    const double h = sign * dt;
    z[0] = states.middleRows(q, batch);
    std::vector<char> alive(batch, 1);
    for (int i = 1; i <= q; ++i) {
      rk4_forward(field, xi, z[i - 1], h, z[i], want_grad ? &tapes[i] : nullptr);
      for (int r = 0; r < batch; ++r) {
        if (!alive[r]) {
          z[i].row(r).setZero();
          continue;
        }
        const auto row = z[i].row(r);
        if (!row.allFinite() || row.cwiseAbs().maxCoeff() > kRolloutClamp) {
          alive[r] = 0;
          z[i].row(r).setZero();
        }
      }
      alive_at[i] = alive;
      residuals[i] = states.middleRows(q + sign * i, batch) - z[i];
      for (int r = 0; r < batch; ++r) {
        if (alive[r]) {
          total += omega[i] * residuals[i].row(r).squaredNorm();
        } else {
          residuals[i].row(r).setZero();
          total += rollout_penalty();
        }
      }
    }

    if (!want_grad) continue;
    Matrix z_bar = Matrix::Zero(batch, dims);
    Matrix prev_bar;
    for (int i = q; i >= 1; --i) {
      // Dead rows carry zero residuals, hence zero cotangent.
      z_bar -= (2.0 * omega[i]) * residuals[i];
      states_bar->middleRows(q + sign * i, batch) += (2.0 * omega[i]) * residuals[i];
      rk4_adjoint(field, xi, tapes[i], h, z_bar, prev_bar, xi_bar);
      z_bar.swap(prev_bar);
    }
    states_bar->middleRows(q, batch) += z_bar;
  }
  return total;
}

// Weak residual Σ_d ‖dt·(φ ⋆ f_d(x̃) + φ′ ⋆ x̃_d)‖², evaluated by correlation
// without materializing G.
double weak_term(const VectorField& field, const std::vector<TestFunction>& testfns, const Matrix& states,
                 const Matrix& xi, Matrix* states_bar, Matrix* xi_bar) {
  const auto n = static_cast<int>(states.rows());
  const auto dims = static_cast<int>(states.cols());
  require(static_cast<int>(testfns.size()) == dims, "need one test function per component");

  Matrix theta, values;
  field.evaluate(states, xi, theta, values);
  Matrix values_bar;
  if (states_bar != nullptr) values_bar = Matrix::Zero(n, dims);

  double total = 0.0;
  for (int d = 0; d < dims; ++d) {
    const TestFunction& tf = testfns[d];
    const int width = 2 * tf.m + 1;
    const int rows = n - 2 * tf.m;
    require(rows >= 1, "test function support exceeds the record");
    const auto f_col = values.col(d);
    const auto x_col = states.col(d);
    Vector residual(rows);
    for (int h = 0; h < rows; ++h) {
      residual[h] = tf.dt * (tf.phi.dot(f_col.segment(h, width)) + tf.dphi.dot(x_col.segment(h, width)));
    }
    total += residual.squaredNorm();
    if (states_bar == nullptr) continue;
    auto vb = values_bar.col(d);
    auto xb = states_bar->col(d);
    for (int h = 0; h < rows; ++h) {
      const double c = 2.0 * tf.dt * residual[h];
      vb.segment(h, width) += c * tf.phi;
      xb.segment(h, width) += c * tf.dphi;
    }
  }
  if (states_bar != nullptr) field.adjoint(states, theta, xi, values_bar, *states_bar, xi_bar);
  return total;
}

double derivative_term(const VectorField& field, const Matrix& states, double dt, const Matrix& xi,
                       Matrix* states_bar, Matrix* xi_bar) {
  Matrix theta, values;
  field.evaluate(states, xi, theta, values);
  const Matrix residual = central_difference(states, dt) - values;
  if (states_bar != nullptr) {
    const Matrix bar = 2.0 * residual;
    central_difference_adjoint(bar, dt, *states_bar);
    field.adjoint(states, theta, xi, -bar, *states_bar, xi_bar);
  }
  return residual.squaredNorm();
}

void check_problem(const LossProblem& p, const Matrix& noise, const Matrix& coeffs) {
  require(noise.rows() == p.measurements.rows() && noise.cols() == p.measurements.cols(),
          "noise shape must match measurements");
  require(coeffs.rows() == p.spec.size() && coeffs.cols() == p.spec.dimension, "coefficient shape mismatch");
  if (p.variant == LossVariant::wmsindy) {
    require(p.testfns != nullptr, "weak-form loss needs test functions");
  }
}

LossTerms evaluate_loss(const LossProblem& p, const Matrix& noise, const Matrix& coeffs, Matrix* states_bar,
                        Matrix* xi_bar) {
  check_problem(p, noise, coeffs);
  const VectorField field(p.spec, p.known);
  const Matrix states = p.measurements - noise;
  LossTerms terms;
  switch (p.variant) {
    case LossVariant::wmsindy:
      terms.residual = weak_term(field, *p.testfns, states, coeffs, states_bar, xi_bar);
      break;
    case LossVariant::msindy:
      terms.residual = derivative_term(field, states, p.dt, coeffs, states_bar, xi_bar);
      break;
    case LossVariant::wmsindy_no_er:
    case LossVariant::msindy_no_ed:
      break;
  }
  terms.simulation = simulation_term(field, states, coeffs, p.q, p.dt, p.omega_base, states_bar, xi_bar);
  terms.total = terms.residual + terms.simulation;
  return terms;
}

}  // namespace

double simulation_error(const Matrix& measurements, const Matrix& noise, const Matrix& coeffs,
                        const LibrarySpec& spec, const std::optional<KnownModel>& known, int q, double dt,
                        double omega_base) {
  require(noise.rows() == measurements.rows() && noise.cols() == measurements.cols(),
          "noise shape must match measurements");
  const VectorField field(spec, known);
  return simulation_term(field, measurements - noise, coeffs, q, dt, omega_base, nullptr, nullptr);
}

double derivative_error(const Matrix& states, double dt, const LibrarySpec& spec, const Matrix& coeffs,
                        const std::optional<KnownModel>& known) {
  const VectorField field(spec, known);
  return derivative_term(field, states, dt, coeffs, nullptr, nullptr);
}

LossTerms total_loss(const LossProblem& problem, const Matrix& noise, const Matrix& coeffs) {
  return evaluate_loss(problem, noise, coeffs, nullptr, nullptr);
}

LossGradient loss_gradient(const LossProblem& problem, const Matrix& noise, const Matrix& coeffs,
                           const Mask& active, LossTerms* terms) {
  require(active.rows() == coeffs.rows() && active.cols() == coeffs.cols(), "mask shape mismatch");
  Matrix states_bar = Matrix::Zero(noise.rows(), noise.cols());
  LossGradient grad;
  grad.xi = Matrix::Zero(coeffs.rows(), coeffs.cols());
  const LossTerms t = evaluate_loss(problem, noise, coeffs, &states_bar, &grad.xi);
  if (terms != nullptr) *terms = t;
  grad.xi = active.select(grad.xi, 0.0);
  grad.noise = -states_bar;
  return grad;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamSettings& settings) {
  require(params.size() == grads.size(), "adam: params and grads differ in size");
  const auto n = static_cast<Eigen::Index>(params.size());
  if (state.first.size() != n) {
    state.first = Vector::Zero(n);
    state.second = Vector::Zero(n);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(settings.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(settings.beta2, static_cast<double>(state.step));
  Eigen::Map<Vector> p(params.data(), n);
  Eigen::Map<const Vector> g(grads.data(), n);
  state.first = settings.beta1 * state.first + (1.0 - settings.beta1) * g;
  state.second = settings.beta2 * state.second + (1.0 - settings.beta2) * g.cwiseAbs2();
  p.array() -= settings.learning_rate * (state.first.array() / c1) /
               ((state.second.array() / c2).sqrt() + settings.epsilon);
}

namespace {

using Clock = std::chrono::steady_clock;

// Least-squares refit of every active entry, then one more thresholding pass.
void refit_and_threshold(const std::vector<Matrix>& designs, const std::vector<Vector>& targets, double lambda,
                         SparseCoefficients& coeffs) {
  for (int d = 0; d < coeffs.xi.cols(); ++d) {
    std::vector<bool> use(coeffs.xi.rows());
    for (int j = 0; j < coeffs.xi.rows(); ++j) use[j] = coeffs.active(j, d);
    coeffs.xi.col(d) = subset_least_squares(designs[d], targets[d], use);
  }
  coeffs.active = coeffs.active.array() && (coeffs.xi.array().abs() >= lambda);
  coeffs.xi = coeffs.active.select(coeffs.xi, 0.0);
}

// Derivative regression Θ(X)Ξ ≈ Ẋ − g(X), one (design, target) per component.
void derivative_regression(const Matrix& states, double dt, const LibrarySpec& spec,
                           const std::optional<KnownModel>& known, std::vector<Matrix>& designs,
                           std::vector<Vector>& targets) {
  const Matrix theta = evaluate_library(spec, states);
  Matrix rhs = central_difference(states, dt);
  if (known) rhs -= evaluate_library(known->spec, states) * known->coeffs;
  designs.assign(spec.dimension, theta);
  targets.clear();
  for (int d = 0; d < spec.dimension; ++d) targets.push_back(rhs.col(d));
}

void weak_regression(const WeakSystem& ws, std::vector<Matrix>& designs, std::vector<Vector>& targets) {
  designs.clear();
  targets.clear();
  for (const auto& wc : ws.components) {
    designs.push_back(wc.G);
    targets.push_back(wc.b);
  }
}

void validate(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config) {
  require(config.n_loop >= 1, "n_loop must be >= 1");
  require(config.q >= 1, "q must be >= 1");
  require(config.lambda >= 0.0, "lambda must be non-negative");
  require(config.iters_per_loop >= 0, "iters_per_loop must be non-negative");
  require(data.dimension() == spec.dimension, "data dimension does not match library");
  require(data.size() > 2 * config.q + 2, "record too short for the prediction step");
  require(data.states.allFinite(), "measurements must be finite");
}

IdentificationResult optimize(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                              const std::optional<KnownModel>& known) {
  validate(data, spec, config);
  const auto start = Clock::now();
  const bool weak = uses_weak_form(config.loss_variant);
  const Matrix& y = data.states;

  IdentificationResult result;
  result.method = to_string(config.loss_variant);
  std::vector<TestFunction> testfns;
  std::vector<Matrix> designs;
  std::vector<Vector> targets;

  // Initialization: Ξ from the baseline at the fixed λ, Ñ = 0, full mask.
  if (weak) {
    const WsindyResult init = wsindy_identify(data, spec, config.tau, config.tau_hat, config.lambda, known);
    result.coeffs.xi = init.coeffs.xi;
    testfns = init.testfns.functions;
    result.initial_testfns = init.testfns.diagnostics;
  } else {
    derivative_regression(y, data.dt, spec, known, designs, targets);
    result.coeffs.xi = Matrix::Zero(spec.size(), spec.dimension);
    for (int d = 0; d < spec.dimension; ++d) {
      result.coeffs.xi.col(d) = stls(designs[d], targets[d], config.lambda).xi;
    }
  }
  result.coeffs.active = Mask::Constant(spec.size(), spec.dimension, true);
  result.noise = Matrix::Zero(y.rows(), y.cols());

  const AdamSettings adam{config.learning_rate};
  for (int loop = 1; loop <= config.n_loop; ++loop) {
    const LossProblem problem{y,        spec,     known, weak ? &testfns : nullptr, data.dt,
                              config.q, config.omega_base, config.loss_variant};
    AdamState xi_state;
    AdamState noise_state;
    LoopRecord rec;
    rec.loop = loop;
    rec.loss_min = std::numeric_limits<double>::infinity();

    Matrix& xi = result.coeffs.xi;
    Matrix& noise = result.noise;
    for (int it = 0; it < config.iters_per_loop; ++it) {
      LossTerms terms;
      const LossGradient grad = loss_gradient(problem, noise, xi, result.coeffs.active, &terms);
      rec.loss_min = std::min(rec.loss_min, terms.total);
      adam_step(xi_state, std::span<double>(xi.data(), xi.size()),
                std::span<const double>(grad.xi.data(), grad.xi.size()), adam);
      adam_step(noise_state, std::span<double>(noise.data(), noise.size()),
                std::span<const double>(grad.noise.data(), grad.noise.size()), adam);
    }
    const LossTerms final_terms = total_loss(problem, noise, xi);
    rec.loss = final_terms.total;
    rec.loss_min = std::min(rec.loss_min, final_terms.total);
    rec.residual = final_terms.residual;
    rec.simulation = final_terms.simulation;

    // Cumulative sparsity mask.
    result.coeffs.active = result.coeffs.active.array() && (xi.array().abs() >= config.lambda);
    xi = result.coeffs.active.select(xi, 0.0);

    const Matrix states = y - noise;
    if (weak) {
      TestFunctionSet set = build_test_functions(states, data.dt, config.tau, config.tau_hat);
      testfns = set.functions;
      rec.testfns = set.diagnostics;
      weak_regression(build_weak_system(states, spec, testfns, known), designs, targets);
    } else {
      derivative_regression(states, data.dt, spec, known, designs, targets);
    }
    refit_and_threshold(designs, targets, config.lambda, result.coeffs);
    rec.active_count = result.coeffs.active_count();
    result.loop_trace.push_back(std::move(rec));
  }

  result.empty_model = result.coeffs.active_count() == 0;
  result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace

IdentificationResult run_wmsindy(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                                 const std::optional<KnownModel>& known) {
  require(uses_weak_form(config.loss_variant), "run_wmsindy needs a weak-form loss variant");
  return optimize(data, spec, config, known);
}

IdentificationResult run_msindy(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                                const std::optional<KnownModel>& known) {
  require(!uses_weak_form(config.loss_variant), "run_msindy needs a derivative-based loss variant");
  return optimize(data, spec, config, known);
}

IdentificationResult run_joint(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                               const std::optional<KnownModel>& known) {
  return optimize(data, spec, config, known);
}

IdentificationResult run_nonzero_mean(const Trajectory& data, const LibrarySpec& spec,
                                      const JointConfig& config, const std::optional<KnownModel>& known,
                                      int outer_iterations) {
  require(outer_iterations >= 1, "outer_iterations must be >= 1");
  const auto start = Clock::now();
  Trajectory shifted = data;
  Vector applied = Vector::Zero(data.dimension());
  IdentificationResult result;
  for (int k = 1; k <= outer_iterations; ++k) {
    result = run_joint(shifted, spec, config, known);
    const Vector mean = result.noise.colwise().mean().transpose();
    if (k < outer_iterations) {
      shifted.states.rowwise() -= mean.transpose();
      applied += mean;
    }
  }
  result.noise.rowwise() += applied.transpose();
  result.mean_shifts.assign(applied.data(), applied.data() + applied.size());
  result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace wmsindy
