#include "wmsindy/joint.hpp"
#include "wmsindy/noise.hpp"
#include "wmsindy/weak.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wmsindy;

namespace {

struct Noisy {
  Trajectory clean;
  Trajectory data;
  Matrix noise;
};

Noisy lorenz_data(double t_total, double level, std::uint64_t seed) {
  Vector x0(3);
  x0 << 5, 5, 25;
  Noisy out;
  out.clean = simulate_truth(make_system("lorenz"), x0, t_total, 0.01);
  out.data = out.clean;
  if (level > 0.0) {
    NoiseSpec ns;
    ns.level_percent = level;
    ns.seed = seed;
    out.noise = generate_noise(ns, out.clean.states);
  } else {
    out.noise = Matrix::Zero(out.clean.size(), 3);
  }
  out.data.states += out.noise;
  return out;
}

Matrix lorenz_truth(const LibrarySpec& spec) { return true_coefficients(make_system("lorenz"), spec); }

// Σ over centers and both directions, written straight from the definition.
double naive_simulation_error(const Matrix& y, const Matrix& noise, const Matrix& xi, const LibrarySpec& spec,
                              int q, double dt, double omega_base) {
  const Matrix x = y - noise;
  double total = 0.0;
  for (int j = q; j + q < y.rows(); ++j) {
    for (int i = 1; i <= q; ++i) {
      const double w = std::pow(omega_base, i - 1);
      const Vector fwd = flow_map(xi, spec, std::nullopt, x.row(j).transpose(), i, dt, Direction::forward);
      const Vector bwd = flow_map(xi, spec, std::nullopt, x.row(j).transpose(), i, dt, Direction::backward);
      total += w * (x.row(j + i).transpose() - fwd).squaredNorm();
      total += w * (x.row(j - i).transpose() - bwd).squaredNorm();
    }
  }
  return total;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

TEST(Joint, VariantNames) {
  for (auto v : {LossVariant::wmsindy, LossVariant::wmsindy_no_er, LossVariant::msindy, LossVariant::msindy_no_ed}) {
    EXPECT_EQ(parse_loss_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_loss_variant("sindy"), ContractViolation);
  EXPECT_TRUE(uses_weak_form(LossVariant::wmsindy_no_er));
  EXPECT_FALSE(uses_weak_form(LossVariant::msindy_no_ed));
}

TEST(Joint, SimulationErrorMatchesDefinition) {
  const Noisy d = lorenz_data(0.6, 20.0, 3);
  const LibrarySpec spec = build_library(3, 2, false);
  std::mt19937 gen(1);
  std::normal_distribution<double> z(0.0, 0.05);
  Matrix xi = lorenz_truth(spec);
  for (int k = 0; k < xi.size(); ++k) xi.data()[k] += z(gen);
  Matrix noise = 0.5 * d.noise;
  for (int q : {1, 2, 4}) {
    for (double base : {0.9, 0.5}) {
      const double fast = simulation_error(d.data.states, noise, xi, spec, std::nullopt, q, 0.01, base);
      const double slow = naive_simulation_error(d.data.states, noise, xi, spec, q, 0.01, base);
      EXPECT_LT(relative_error(fast, slow), 1e-12) << q << " " << base;
    }
  }
}

TEST(Joint, SimulationWeightsDecayGeometrically) {
  // With a single far-off target the weight on step i is visible directly.
  const LibrarySpec spec = build_library(1, 1, false);
  const Matrix xi = Matrix::Zero(1, 1);
  Matrix y = Matrix::Zero(7, 1);
  y(6, 0) = 1.0;  // only the i = +3 rollout from j = 3 sees it
  const double es = simulation_error(y, Matrix::Zero(7, 1), xi, spec, std::nullopt, 3, 0.1, 0.9);
  EXPECT_NEAR(es, 0.81, 1e-15);
  y.setZero();
  y(4, 0) = 1.0;  // i = +1 from j = 3 (weight 1.0)
  EXPECT_NEAR(simulation_error(y, Matrix::Zero(7, 1), xi, spec, std::nullopt, 3, 0.1, 0.9), 1.0, 1e-15);
}

TEST(Joint, SimulationErrorAtTruthIsRk4Floor) {
  const Noisy d = lorenz_data(25.0, 40.0, 7);
  const LibrarySpec spec = build_library(3, 2, false);
  const double es = simulation_error(d.data.states, d.noise, lorenz_truth(spec), spec, std::nullopt, 1, 0.01, 0.9);
  const double terms = 2.0 * (d.data.size() - 2);
  EXPECT_LE(es / terms, 1e-8);
  const double clean = simulation_error(d.clean.states, Matrix::Zero(d.clean.size(), 3), lorenz_truth(spec), spec,
                                        std::nullopt, 1, 0.01, 0.9);
  EXPECT_NEAR(es, clean, 1e-9 * clean + 1e-18);
}

TEST(Joint, ConstantDataZeroModel) {
  const LibrarySpec spec = build_library(2, 2, false);
  const Matrix y = Matrix::Constant(50, 2, -1.25);
  const Matrix zero = Matrix::Zero(50, 2);
  EXPECT_EQ(simulation_error(y, zero, Matrix::Zero(spec.size(), 2), spec, std::nullopt, 3, 0.01, 0.9), 0.0);
  EXPECT_EQ(derivative_error(y, 0.01, spec, Matrix::Zero(spec.size(), 2)), 0.0);
}

TEST(Joint, DivergedRolloutIsPenalizedNotNan) {
  const LibrarySpec spec = build_library(1, 2, false);
  Matrix xi(2, 1);
  xi << 0.0, 1e4;  // ẋ = 1e4 x², blows up within one step from x = 1e3
  const Matrix y = Matrix::Constant(10, 1, 1e3);
  const double es = simulation_error(y, Matrix::Zero(10, 1), xi, spec, std::nullopt, 1, 0.1, 0.9);
  EXPECT_TRUE(std::isfinite(es));
  EXPECT_GE(es, kRolloutClamp * kRolloutClamp);
}

TEST(Joint, CentralDifferenceIsSecondOrderExactOnQuadratics) {
  Matrix x(6, 1);
  for (int i = 0; i < 6; ++i) x(i, 0) = 1.0 + 2.0 * (0.1 * i) - 3.0 * std::pow(0.1 * i, 2);
  const Matrix dx = central_difference(x, 0.1);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(dx(i, 0), 2.0 - 6.0 * 0.1 * i, 1e-12);
  EXPECT_THROW(central_difference(Matrix::Zero(2, 1), 0.1), ContractViolation);
}

TEST(Joint, DerivativeErrorExamples) {
  const double dt = 0.01;
  const int n = 500;
  Matrix x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = std::exp(-i * dt);
  const LibrarySpec spec = build_library(1, 1, false);
  Matrix xi(1, 1);
  xi << -1.0;
  // Interior truncation is dt²/6·x''' per sample; the one-sided ends are 2x larger.
  const double bound = n * std::pow(dt * dt / 3.0, 2);
  EXPECT_LE(derivative_error(x, dt, spec, xi), bound);
  EXPECT_NEAR(derivative_error(x, dt, spec, Matrix::Zero(1, 1)), central_difference(x, dt).squaredNorm(), 1e-12);
}

TEST(Joint, TotalLossAtTruthIsSmall) {
  const Noisy d = lorenz_data(25.0, 30.0, 11);
  const LibrarySpec spec = build_library(3, 2, false);
  const std::optional<KnownModel> none;
  const TestFunctionSet tfs = build_test_functions(d.clean.states, 0.01);
  for (auto v : {LossVariant::wmsindy, LossVariant::wmsindy_no_er, LossVariant::msindy_no_ed}) {
    const LossProblem p{d.data.states, spec, none, &tfs.functions, 0.01, 1, 0.9, v};
    EXPECT_LE(total_loss(p, d.noise, lorenz_truth(spec)).total, 1e-6 * d.data.size()) << to_string(v);
  }
}

TEST(Joint, WeakTermEqualsWeakResidual) {
  const Noisy d = lorenz_data(8.0, 25.0, 5);
  const LibrarySpec spec = build_library(3, 2, false);
  const std::optional<KnownModel> none;
  const TestFunctionSet tfs = build_test_functions(d.data.states, 0.01);
  const Matrix noise = 0.3 * d.noise;
  Matrix xi = lorenz_truth(spec);
  xi(0, 0) += 0.4;
  const LossProblem p{d.data.states, spec, none, &tfs.functions, 0.01, 2, 0.9, LossVariant::wmsindy};
  const LossTerms t = total_loss(p, noise, xi);
  const double er = weak_residual(build_weak_system(d.data.states - noise, spec, tfs.functions, none), xi);
  EXPECT_LT(relative_error(t.residual, er), 1e-10);
  EXPECT_LT(relative_error(t.simulation, simulation_error(d.data.states, noise, xi, spec, none, 2, 0.01, 0.9)),
            1e-14);
  EXPECT_DOUBLE_EQ(t.total, t.residual + t.simulation);
}

TEST(Joint, DerivativeTermEqualsDerivativeError) {
  const Noisy d = lorenz_data(3.0, 25.0, 5);
  const LibrarySpec spec = build_library(3, 2, false);
  const std::optional<KnownModel> none;
  const Matrix noise = 0.3 * d.noise;
  const LossProblem p{d.data.states, spec, none, nullptr, 0.01, 1, 0.9, LossVariant::msindy};
  const LossTerms t = total_loss(p, noise, lorenz_truth(spec));
  EXPECT_LT(relative_error(t.residual, derivative_error(d.data.states - noise, 0.01, spec, lorenz_truth(spec))),
            1e-14);
}

TEST(Joint, AblatedVariantsAreTheSameFunction) {
  const Noisy d = lorenz_data(2.0, 40.0, 9);
  const LibrarySpec spec = build_library(3, 2, false);
  const std::optional<KnownModel> none;
  const TestFunctionSet tfs = build_test_functions(d.data.states, 0.01);
  const Matrix xi = lorenz_truth(spec) * 0.9;
  const Mask mask = Mask::Constant(spec.size(), 3, true);
  const LossProblem a{d.data.states, spec, none, &tfs.functions, 0.01, 2, 0.9, LossVariant::wmsindy_no_er};
  const LossProblem b{d.data.states, spec, none, nullptr, 0.01, 2, 0.9, LossVariant::msindy_no_ed};
  const Matrix noise = 0.5 * d.noise;
  EXPECT_EQ(total_loss(a, noise, xi).total, total_loss(b, noise, xi).total);
  const LossGradient ga = loss_gradient(a, noise, xi, mask);
  const LossGradient gb = loss_gradient(b, noise, xi, mask);
  EXPECT_TRUE((ga.xi.array() == gb.xi.array()).all());
  EXPECT_TRUE((ga.noise.array() == gb.noise.array()).all());
}

TEST(Joint, WeakVariantNeedsTestFunctions) {
  const Noisy d = lorenz_data(1.0, 0.0, 1);
  const LibrarySpec spec = build_library(3, 2, false);
  const std::optional<KnownModel> none;
  const LossProblem p{d.data.states, spec, none, nullptr, 0.01, 1, 0.9, LossVariant::wmsindy};
  EXPECT_THROW(total_loss(p, Matrix::Zero(d.data.size(), 3), lorenz_truth(spec)), ContractViolation);
  const LossProblem ok{d.data.states, spec, none, nullptr, 0.01, 1, 0.9, LossVariant::msindy};
  EXPECT_THROW(total_loss(ok, Matrix::Zero(5, 3), lorenz_truth(spec)), ContractViolation);
}

TEST(Joint, GradientMatchesFiniteDifferences) {
  const LibrarySpec spec = build_library(3, 2, false);
  std::mt19937 gen(42);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution keep(0.7);
  for (auto variant : {LossVariant::wmsindy, LossVariant::wmsindy_no_er, LossVariant::msindy,
                       LossVariant::msindy_no_ed}) {
    for (int q : {1, 3}) {
      const Noisy d = lorenz_data(1.99, 30.0, 100 + q);
      ASSERT_EQ(d.data.size(), 200);
      const std::optional<KnownModel> known =
          q == 3 ? std::optional<KnownModel>(make_known_model("lorenz_known")) : std::nullopt;
      const TestFunctionSet tfs = build_test_functions(d.data.states, 0.01);
      const LossProblem p{d.data.states, spec, known, &tfs.functions, 0.01, q, 0.9, variant};
      Matrix xi = lorenz_truth(spec) - (known ? true_coefficients(make_system("lorenz_known"), spec)
                                              : Matrix::Zero(spec.size(), 3));
      Mask mask(spec.size(), 3);
      for (int k = 0; k < xi.size(); ++k) {
        xi.data()[k] += 0.1 * z(gen);
        mask.data()[k] = keep(gen);
      }
      Matrix noise = 0.6 * d.noise;
      for (int k = 0; k < noise.size(); ++k) noise.data()[k] += 0.2 * z(gen);

      const LossGradient g = loss_gradient(p, noise, xi, mask);
      auto probe = [&](Matrix& m, int k, double analytic) {
        const double saved = m.data()[k];
        const double h = 1e-6 * std::max(1.0, std::abs(saved));
        m.data()[k] = saved + h;
        const double up = total_loss(p, noise, xi).total;
        m.data()[k] = saved - h;
        const double down = total_loss(p, noise, xi).total;
        m.data()[k] = saved;
        const double fd = (up - down) / (2 * h);
        EXPECT_LE(relative_error(analytic, fd), 1e-5)
            << to_string(variant) << " q=" << q << " k=" << k << " analytic " << analytic << " fd " << fd;
      };
      for (int k = 0; k < xi.size(); ++k) {
        if (mask.data()[k]) {
          probe(xi, k, g.xi.data()[k]);
        } else {
          EXPECT_EQ(g.xi.data()[k], 0.0);
        }
      }
      std::uniform_int_distribution<int> pick(0, static_cast<int>(noise.size()) - 1);
      for (int s = 0; s < 10; ++s) {
        const int k = pick(gen);
        probe(noise, k, g.noise.data()[k]);
      }
    }
  }
}

TEST(Joint, SimulationGradientIsLocal) {
  const Noisy d = lorenz_data(1.0, 30.0, 2);
  const LibrarySpec spec = build_library(3, 2, false);
  const std::optional<KnownModel> none;
  const Mask mask = Mask::Constant(spec.size(), 3, true);
  const int q = 2;
  const LossProblem p{d.data.states, spec, none, nullptr, 0.01, q, 0.9, LossVariant::msindy_no_ed};
  const Matrix xi = lorenz_truth(spec);
  const Matrix noise = Matrix::Zero(d.data.size(), 3);
  const LossGradient base = loss_gradient(p, noise, xi, mask);
  Matrix moved = noise;
  moved(50, 1) += 0.7;
  const LossGradient after = loss_gradient(p, moved, xi, mask);
  for (int k = 0; k < d.data.size(); ++k) {
    if (std::abs(k - 50) > 2 * q) {
      EXPECT_EQ(after.noise.row(k), base.noise.row(k)) << k;
    }
  }
  EXPECT_NE(after.noise.row(50), base.noise.row(50));
}

TEST(Joint, AdamExamples) {
  AdamSettings s;
  std::vector<double> params = {1.0, -2.0, 3.0};
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  AdamState st;
  adam_step(st, params, zero, s);
  EXPECT_EQ(params, (std::vector<double>{1.0, -2.0, 3.0}));

  AdamState first;
  std::vector<double> p = {0.0, 0.0, 0.0};
  const std::vector<double> g = {5.0, -0.01, 1e3};
  adam_step(first, p, g, s);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(p[k], -s.learning_rate * g[k] / (std::abs(g[k]) + s.epsilon), 1e-12);
  }

  // Second step by hand.
  std::vector<double> x = {0.5};
  AdamState two;
  adam_step(two, x, std::vector<double>{2.0}, s);
  adam_step(two, x, std::vector<double>{-1.0}, s);
  const double m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0;
  const double v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(x[0], 0.5 - 1e-3 * 2.0 / (2.0 + 1e-8) - 1e-3 * mhat / (std::sqrt(vhat) + 1e-8), 1e-15);
  EXPECT_EQ(two.step, 2);

  std::vector<double> y = {0.5};
  AdamState again;
  adam_step(again, y, std::vector<double>{2.0}, s);
  adam_step(again, y, std::vector<double>{-1.0}, s);
  EXPECT_EQ(x, y);
  EXPECT_THROW(adam_step(again, y, std::vector<double>{1.0, 2.0}, s), ContractViolation);
}

TEST(Joint, ShortRunInvariants) {
  const Noisy d = lorenz_data(8.0, 30.0, 4);
  const LibrarySpec spec = build_library(3, 2, false);
  for (const char* variant : {"wmsindy", "msindy"}) {
    JointConfig cfg;
    cfg.loss_variant = parse_loss_variant(variant);
    cfg.n_loop = 3;
    cfg.iters_per_loop = 400;
    cfg.lambda = 0.3;
    const IdentificationResult a = run_joint(d.data, spec, cfg, std::nullopt);
    ASSERT_EQ(a.loop_trace.size(), 3u) << variant;
    EXPECT_EQ(a.method, variant);
    EXPECT_TRUE(a.noise.allFinite());
    EXPECT_EQ(a.noise.rows(), d.data.size());
    int previous = spec.size() * 3;
    for (const auto& rec : a.loop_trace) {
      EXPECT_LE(rec.active_count, previous);
      previous = rec.active_count;
      EXPECT_LE(rec.loss, 1.05 * rec.loss_min) << variant << " loop " << rec.loop;
      EXPECT_NEAR(rec.loss, rec.residual + rec.simulation, 1e-12 * rec.loss);
      EXPECT_EQ(rec.testfns.size(), std::string(variant) == "wmsindy" ? 3u : 0u);
    }
    EXPECT_EQ(a.coeffs.active_count(), a.loop_trace.back().active_count);
    for (int k = 0; k < a.coeffs.xi.size(); ++k) {
      if (!a.coeffs.active.data()[k]) EXPECT_EQ(a.coeffs.xi.data()[k], 0.0);
    }

    const IdentificationResult b = run_joint(d.data, spec, cfg, std::nullopt);
    EXPECT_TRUE((a.coeffs.xi.array() == b.coeffs.xi.array()).all()) << variant;
    EXPECT_TRUE((a.noise.array() == b.noise.array()).all()) << variant;
  }
}

TEST(Joint, EntryPointsCheckVariant) {
  const Noisy d = lorenz_data(3.0, 0.0, 1);
  const LibrarySpec spec = build_library(3, 2, false);
  JointConfig cfg;
  cfg.loss_variant = LossVariant::msindy;
  EXPECT_THROW(run_wmsindy(d.data, spec, cfg, std::nullopt), ContractViolation);
  cfg.loss_variant = LossVariant::wmsindy;
  EXPECT_THROW(run_msindy(d.data, spec, cfg, std::nullopt), ContractViolation);
  cfg.n_loop = 0;
  EXPECT_THROW(run_wmsindy(d.data, spec, cfg, std::nullopt), ContractViolation);
  cfg.n_loop = 1;
  cfg.q = 0;
  EXPECT_THROW(run_wmsindy(d.data, spec, cfg, std::nullopt), ContractViolation);
}

TEST(Joint, HugeThresholdGivesEmptyModel) {
  const Noisy d = lorenz_data(3.0, 10.0, 1);
  JointConfig cfg;
  cfg.n_loop = 1;
  cfg.iters_per_loop = 20;
  cfg.lambda = 1e3;
  const IdentificationResult r = run_joint(d.data, build_library(3, 2, false), cfg, std::nullopt);
  EXPECT_TRUE(r.empty_model);
  EXPECT_EQ(r.coeffs.xi.norm(), 0.0);
}

TEST(Joint, NoiseFreeLorenzRecovery) {
  const Noisy d = lorenz_data(25.0, 0.0, 0);
  const LibrarySpec spec = build_library(3, 2, false);
  const Matrix truth = lorenz_truth(spec);
  const Mask support = truth.array() != 0.0;
  JointConfig cfg;
  cfg.n_loop = 2;
  cfg.iters_per_loop = 1000;
  cfg.lambda = 0.2;
  cfg.loss_variant = LossVariant::wmsindy;
  const IdentificationResult w = run_wmsindy(d.data, spec, cfg, std::nullopt);
  EXPECT_TRUE(w.coeffs.active == support);
  EXPECT_LE((w.coeffs.xi - truth).norm() / truth.norm(), 1e-3);

  cfg.loss_variant = LossVariant::msindy;
  const IdentificationResult m = run_msindy(d.data, spec, cfg, std::nullopt);
  EXPECT_TRUE(m.coeffs.active == support);
  EXPECT_LE((m.coeffs.xi - truth).norm() / truth.norm(), 1e-2);
}

TEST(Joint, DuffingPresetCompletes) {
  Vector x0(2);
  x0 << -2, 2;
  Trajectory tr = simulate_truth(make_system("duffing"), x0, 25.0, 0.01);
  NoiseSpec ns;
  ns.level_percent = 40.0;
  ns.seed = 3;
  tr.states += generate_noise(ns, tr.states);
  JointConfig cfg;
  cfg.n_loop = 5;
  cfg.lambda = 0.05;
  cfg.q = 1;
  const IdentificationResult r = run_wmsindy(tr, default_library("duffing"), cfg, std::nullopt);
  EXPECT_EQ(r.loop_trace.size(), 5u);
  EXPECT_TRUE(r.coeffs.xi.allFinite());
  EXPECT_TRUE(r.noise.allFinite());
}

TEST(Joint, NonzeroMeanOnZeroMeanNoise) {
  const Noisy d = lorenz_data(8.0, 20.0, 6);
  const LibrarySpec spec = build_library(3, 2, false);
  JointConfig cfg;
  cfg.n_loop = 2;
  cfg.iters_per_loop = 300;
  cfg.lambda = 0.3;
  const IdentificationResult r = run_nonzero_mean(d.data, spec, cfg, std::nullopt, 3);
  ASSERT_EQ(r.mean_shifts.size(), 3u);
  for (int c = 0; c < 3; ++c) {
    const double sd = std::sqrt((d.noise.col(c).array() - d.noise.col(c).mean()).square().mean());
    EXPECT_LE(std::abs(r.mean_shifts[c]), 3.0 * sd / std::sqrt(d.data.size())) << c;
  }

  const IdentificationResult once = run_nonzero_mean(d.data, spec, cfg, std::nullopt, 1);
  const IdentificationResult plain = run_wmsindy(d.data, spec, cfg, std::nullopt);
  EXPECT_TRUE((once.coeffs.xi.array() == plain.coeffs.xi.array()).all());
  EXPECT_TRUE((once.noise.array() == plain.noise.array()).all());
  EXPECT_EQ(once.mean_shifts, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_THROW(run_nonzero_mean(d.data, spec, cfg, std::nullopt, 0), ContractViolation);
}

TEST(Joint, NonzeroMeanAddsShiftsBack) {
  // Constant-offset noise: the applied shifts appear in the returned noise.
  Noisy d = lorenz_data(8.0, 10.0, 8);
  d.data.states.rowwise() += Eigen::RowVector3d(2.0, -1.0, 3.0);
  const LibrarySpec spec = build_library(3, 2, false);
  JointConfig cfg;
  cfg.n_loop = 1;
  cfg.iters_per_loop = 300;
  cfg.lambda = 0.3;
  const IdentificationResult r = run_nonzero_mean(d.data, spec, cfg, std::nullopt, 2);
  // With two passes, the first pass's learned mean is the only applied shift.
  JointConfig same = cfg;
  const IdentificationResult first = run_joint(d.data, spec, same, std::nullopt);
  const Vector m = first.noise.colwise().mean().transpose();
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(r.mean_shifts[c], m[c]);
}
