#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/dynamics.hpp"
#include "wmsindy/field.hpp"
#include "wmsindy/sparse.hpp"
#include "wmsindy/testfn.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmsindy {

/// Which terms enter the joint loss. The simulation error e_s is always present.
enum class LossVariant {
  wmsindy,        // e_r + e_s
  wmsindy_no_er,  // e_s, weak-form initialization and refit
  msindy,         // e_d + e_s
  msindy_no_ed,   // e_s, derivative-regression initialization and refit
};

std::string to_string(LossVariant variant);
LossVariant parse_loss_variant(std::string_view name);
bool uses_weak_form(LossVariant variant);

struct JointConfig {
  int n_loop = 6;
  double lambda = 0.2;
  int q = 1;
  double learning_rate = 1e-3;
  int iters_per_loop = 5000;
  double omega_base = 0.9;
  LossVariant loss_variant = LossVariant::wmsindy;
  double tau = kDefaultTau;
  double tau_hat = kDefaultTauHat;
  std::uint64_t seed = 0;
};

struct LoopRecord {
  int loop = 0;
  double loss = 0.0;      // total loss after the last Adam iteration
  double loss_min = 0.0;  // smallest loss seen during the loop
  double residual = 0.0;  // e_r or e_d (0 for the e_s-only variants)
  double simulation = 0.0;
  int active_count = 0;
  std::vector<TestFunctionDiagnostics> testfns;
};

struct IdentificationResult {
  std::string method;
  SparseCoefficients coeffs;
  Matrix noise;  // learned Ñ, N×D; empty for methods that do not denoise
  std::vector<LoopRecord> loop_trace;
  std::vector<TestFunctionDiagnostics> initial_testfns;
  std::vector<double> mean_shifts;  // per component, non-zero-mean procedure only
  bool empty_model = false;
  double wall_time = 0.0;

  bool has_noise() const { return noise.size() > 0; }
};

struct LossTerms {
  double residual = 0.0;
  double simulation = 0.0;
  double total = 0.0;
};

struct LossGradient {
  Matrix xi;     // J×D, zero at masked entries
  Matrix noise;  // N×D
};

/// Rollout states beyond this magnitude count as diverged.
inline constexpr double kRolloutClamp = 1e6;

/// Second-order central differences, one-sided second order at the ends.
Matrix central_difference(const Matrix& states, double dt);

/// Everything the joint loss needs besides the optimized (Ξ, Ñ).
struct LossProblem {
  const Matrix& measurements;  // Y
  const LibrarySpec& spec;
  const std::optional<KnownModel>& known;
  const std::vector<TestFunction>* testfns = nullptr;  // required by wmsindy
  double dt = 0.0;
  int q = 1;
  double omega_base = 0.9;
  LossVariant variant = LossVariant::wmsindy;
};

/// Σ_j Σ_{i≠0} ω_i ‖y_{j+i} − ñ_{j+i} − F̃^i(x̃_j)‖², ω_i = omega_base^{|i|−1}.
double simulation_error(const Matrix& measurements, const Matrix& noise, const Matrix& coeffs,
                        const LibrarySpec& spec, const std::optional<KnownModel>& known, int q, double dt,
                        double omega_base);

/// Σ_n ‖ẋ̃_n − g(x̃_n) − Θ(x̃_n)Ξ‖² with central-difference derivatives.
double derivative_error(const Matrix& states, double dt, const LibrarySpec& spec, const Matrix& coeffs,
                        const std::optional<KnownModel>& known = std::nullopt);

LossTerms total_loss(const LossProblem& problem, const Matrix& noise, const Matrix& coeffs);

/// Exact gradient of total_loss; entries of Ξ outside `active` get zero.
LossGradient loss_gradient(const LossProblem& problem, const Matrix& noise, const Matrix& coeffs,
                           const Mask& active, LossTerms* terms = nullptr);

struct AdamState {
  Vector first;
  Vector second;
  long step = 0;
};

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of params in place. `state` is sized on first use.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamSettings& settings);

/// Joint weak-residual + simulation-error identification.
IdentificationResult run_wmsindy(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                                 const std::optional<KnownModel>& known);

/// Joint derivative-error + simulation-error identification.
IdentificationResult run_msindy(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                                const std::optional<KnownModel>& known);

/// Dispatches on config.loss_variant.
IdentificationResult run_joint(const Trajectory& data, const LibrarySpec& spec, const JointConfig& config,
                               const std::optional<KnownModel>& known);

/// Repeatedly identify, then shift the data by the mean of the learned noise.
/// The returned noise includes every shift applied before the final pass.
IdentificationResult run_nonzero_mean(const Trajectory& data, const LibrarySpec& spec,
                                      const JointConfig& config, const std::optional<KnownModel>& known,
                                      int outer_iterations = 3);

}  // namespace wmsindy
