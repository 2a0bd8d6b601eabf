#include "wmsindy/harness.hpp"
#include "wmsindy/io.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace wmsindy;

namespace {

int cmd_simulate(const std::string& system, const std::vector<double>& x0, double t_total, double dt,
                 const std::string& out, double noise_level, const std::string& family, const std::string& mode,
                 const std::string& noise_out) {
  const SystemSpec sys = make_system(system);
  std::vector<double> start = x0;
  require(static_cast<int>(start.size()) == sys.dimension,
          "--x0 needs " + std::to_string(sys.dimension) + " values for " + system);
  Trajectory tr = simulate_truth(sys, Eigen::Map<const Vector>(start.data(), sys.dimension), t_total, dt);
  if (noise_level > 0.0) {
    NoiseSpec ns;
    ns.family = parse_noise_family(family);
    ns.mode = parse_noise_mode(mode);
    ns.level_percent = noise_level;
    ns.seed = master_seed_from_env();
    const Matrix noise = generate_noise(ns, tr.states);
    tr.states += noise;
    if (!noise_out.empty()) {
      std::vector<std::string> header;
      for (int d = 1; d <= sys.dimension; ++d) header.push_back("n" + std::to_string(d));
      write_matrix_csv(noise_out, header, noise);
    }
  }
  write_trajectory_csv(out, tr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse identification of ODEs with joint denoising (WSINDy, mSINDy, WmSINDy)"};
  app.set_config("--config", "", "TOML-style file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Integrate a preset system and write a trajectory CSV");
  std::string sim_system, sim_out, sim_family = "gaussian", sim_mode = "standardized", sim_noise_out;
  std::vector<double> sim_x0;
  double sim_t = 25.0, sim_dt = 0.01, sim_noise = 0.0;
  sim->add_option("--system", sim_system, "System preset")->required();
  sim->add_option("--x0", sim_x0, "Initial state")->required();
  sim->add_option("--t", sim_t, "Duration in seconds");
  sim->add_option("--dt", sim_dt, "Sampling interval in seconds");
  sim->add_option("--out", sim_out, "Output CSV")->required();
  sim->add_option("--noise-level", sim_noise, "Add noise at this level (percent)");
  sim->add_option("--noise-family", sim_family, "gaussian, uniform, gamma, rayleigh or dweibull");
  sim->add_option("--noise-mode", sim_mode, "standardized or natural");
  sim->add_option("--noise-out", sim_noise_out, "Write the added noise to this CSV");

  // identify
  auto* idf = app.add_subcommand("identify", "Identify a sparse model from a trajectory CSV");
  std::string id_input, id_out, id_method = "wmsindy", id_variant, id_known, id_noise_out;
  IdentifyRequest req;
  std::optional<double> id_wsindy_lambda;
  idf->add_option("--input", id_input, "Trajectory CSV with header t,x1,...")->required();
  idf->add_option("--method", id_method, "wsindy, msindy or wmsindy");
  idf->add_option("--lambda", req.joint.lambda, "Sparsity threshold");
  idf->add_option("--wsindy-lambda", id_wsindy_lambda, "Fixed threshold for wsindy (grid search when absent)");
  idf->add_option("--q", req.joint.q, "Prediction steps");
  idf->add_option("--loops", req.joint.n_loop, "Outer loops");
  idf->add_option("--iters", req.joint.iters_per_loop, "Adam iterations per loop");
  idf->add_option("--lr", req.joint.learning_rate, "Adam learning rate");
  idf->add_option("--variant", id_variant, "wmsindy, wmsindy_no_er, msindy or msindy_no_ed");
  idf->add_option("--known-model", id_known, "Known partial model (lorenz_known)");
  idf->add_option("--degree", req.library_degree, "Library polynomial degree");
  idf->add_flag("--constant", req.library_constant, "Include the constant term");
  idf->add_flag("--nonzero-mean", req.nonzero_mean, "Iteratively remove the learned noise mean");
  idf->add_option("--out", id_out, "Result JSON")->required();
  idf->add_option("--noise-out", id_noise_out, "Write the learned noise to this CSV");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a preset experiment");
  std::string b_preset, b_out;
  BenchOptions bopt;
  int b_parallel = 1;
  bench->add_option("--preset", b_preset, "fig2..fig6, table2:<system>, fig13, fig13b, fig14, fig15, fig16..fig19")
      ->required();
  bench->add_option("--out", b_out, "Output directory")->required();
  bench->add_option("--runs", bopt.runs, "Seeds per sweep value");
  bench->add_option("--parallel", b_parallel, "Worker threads");
  bench->add_option("--grid-step", bopt.grid_step, "Coarser sweep grid step");
  bench->add_option("--iters", bopt.iters_per_loop, "Override Adam iterations per loop");

  // emit-figure
  auto* emit = app.add_subcommand("emit-figure", "Write per-panel CSVs from a bench directory");
  std::string e_from, e_figure;
  emit->add_option("--from", e_from, "Bench output directory")->required();
  emit->add_option("--figure", e_figure, "Figure id used in the file names")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      return cmd_simulate(sim_system, sim_x0, sim_t, sim_dt, sim_out, sim_noise, sim_family, sim_mode,
                          sim_noise_out);
    }
    if (*idf) {
      req.data = read_trajectory_csv(id_input);
      req.method = id_method;
      req.joint.loss_variant =
          parse_loss_variant(id_variant.empty() ? (id_method == "msindy" ? "msindy" : "wmsindy") : id_variant);
      req.wsindy_lambda = id_wsindy_lambda;
      if (!id_known.empty()) req.known_model = id_known;
      req.seed = master_seed_from_env();
      req.joint.seed = req.seed;
      req.system = id_input;
      const IdentifyOutput out = identify(req);
      write_text(id_out, out.document + "\n");
      if (!id_noise_out.empty() && out.estimate.noise) {
        std::vector<std::string> header;
        for (int d = 1; d <= req.data.dimension(); ++d) header.push_back("n" + std::to_string(d));
        write_matrix_csv(id_noise_out, header, *out.estimate.noise);
      }
      for (int d = 0; d < out.estimate.coeffs.xi.cols(); ++d) {
        std::cout << "dx" << d + 1 << "/dt =";
        for (int j = 0; j < out.estimate.coeffs.xi.rows(); ++j) {
          const double v = out.estimate.coeffs.xi(j, d);
          if (v != 0.0) std::cout << ' ' << (v < 0 ? "- " : "+ ") << std::abs(v) << ' ' << out.spec.term_name(j);
        }
        std::cout << '\n';
      }
      return 0;
    }
    if (*bench) {
      bopt.master_seed = master_seed_from_env();
      const auto configs = make_preset(b_preset, bopt);
      const SweepOutcome outcome = sweep(configs, b_out, b_parallel);
      std::cout << outcome.results.size() << " runs completed, " << outcome.failures.size() << " failed\n";
      return outcome.failures.empty() ? 0 : 3;
    }
    if (*emit) {
      for (const auto& p : emit_figure_data(e_from, e_figure)) std::cout << p.string() << '\n';
      return 0;
    }
  } catch (const IntegrationError& e) {
    std::cerr << "integration failed at t=" << e.last_valid_time() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
