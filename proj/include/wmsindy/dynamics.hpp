#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/field.hpp"
#include "wmsindy/library.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wmsindy {

using Rhs = std::function<Vector(const Vector&)>;

/// One monomial of a polynomial right-hand side: coeff · ∏ x_d^{exponents[d]}
/// added to component `component`.
struct PolyTerm {
  int component;
  std::vector<int> exponents;
  double coeff;
};

struct SystemSpec {
  std::string name;
  int dimension = 0;
  std::vector<std::pair<std::string, double>> parameters;
  Rhs rhs;
  /// The same vector field written out monomial by monomial; used to place
  /// the ground truth into a candidate library.
  std::vector<PolyTerm> terms;

  double parameter(std::string_view key) const;
};

/// Uniformly sampled trajectory; row k is the state at t0 + k·dt.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  Matrix states;

  int size() const { return static_cast<int>(states.rows()); }
  int dimension() const { return static_cast<int>(states.cols()); }
  double time(int k) const { return t0 + k * dt; }
};

/// Reference integration failed (step size underflow, blow-up).
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_valid_time)
      : std::runtime_error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

enum class Direction { forward, backward };

/// Named presets: lorenz, rossler, lorenz96, vanderpol, duffing, cubic, lotka,
/// lotka_printed, lorenz_modified, lorenz_known.
SystemSpec make_system(std::string_view name);
std::vector<std::string> system_names();

/// Known partial model g(x); only `lorenz_known` is defined.
KnownModel make_known_model(std::string_view name);

Vector eval_rhs(const SystemSpec& system, const Vector& x);

/// J×D coefficients of the system in `spec`. Throws if a term is missing.
Matrix true_coefficients(const SystemSpec& system, const LibrarySpec& spec);
Matrix true_coefficients(const std::vector<PolyTerm>& terms, const LibrarySpec& spec);

/// Ground truth by adaptive Dormand-Prince 5(4), abs/rel tolerance 1e-12,
/// stepping exactly onto the output grid.
Trajectory simulate_truth(const SystemSpec& system, const Vector& x0, double t_total, double dt);

Vector rk4_step(const Rhs& f, const Vector& x, double dt);

/// q composed RK4 steps of ẋ = g(x) + Θ(x)Ξ; backward steps use −dt.
/// Non-finite states are returned as-is for the caller to detect.
Vector flow_map(const Matrix& coeffs, const LibrarySpec& spec, const std::optional<KnownModel>& known,
                const Vector& x, int q, double dt, Direction direction);

/// Default identification library for a preset (degree and constant term).
LibrarySpec default_library(std::string_view system);

}  // namespace wmsindy
