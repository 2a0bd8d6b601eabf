#include "wmsindy/harness.hpp"

#include "wmsindy/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace wmsindy {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::none: return "none";
    case SweepAxis::noise_level: return "noise_level";
    case SweepAxis::data_length: return "data_length";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::q: return "q";
    case SweepAxis::n_loop: return "n_loop";
  }
  return "none";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::none, SweepAxis::noise_level, SweepAxis::data_length, SweepAxis::lambda,
                    SweepAxis::q, SweepAxis::n_loop}) {
    if (name == to_string(axis)) return axis;
  }
  throw ContractViolation("unknown sweep axis: " + std::string(name));
}

std::string ExperimentConfig::label() const {
  return method == "wsindy" ? std::string("wsindy") : to_string(joint.loss_variant);
}

LibrarySpec ExperimentConfig::library() const {
  return build_library(make_system(system).dimension, library_degree, library_constant);
}

void validate(const ExperimentConfig& cfg) {
  const SystemSpec sys = make_system(cfg.system);
  require(cfg.method == "wsindy" || cfg.method == "msindy" || cfg.method == "wmsindy",
          "unknown method: " + cfg.method);
  if (cfg.method != "wsindy") {
    const bool weak = uses_weak_form(cfg.joint.loss_variant);
    require(weak == (cfg.method == "wmsindy"), "loss variant " + to_string(cfg.joint.loss_variant) +
                                                   " does not belong to method " + cfg.method);
  }
  require(static_cast<int>(cfg.x0.size()) == sys.dimension, "x0 has the wrong dimension for " + cfg.system);
  require(cfg.t_total > 0.0 && cfg.dt > 0.0, "t_total and dt must be positive");
  require(cfg.library_degree >= 1, "library degree must be >= 1");
  require(cfg.joint.n_loop >= 1 && cfg.joint.q >= 1 && cfg.joint.lambda >= 0.0, "invalid joint configuration");
  require(cfg.runs_per_point >= 1, "runs_per_point must be >= 1");
  require(static_cast<int>(cfg.seeds.size()) == cfg.runs_per_point, "seed count must equal runs_per_point");
  if (cfg.axis != SweepAxis::none) require(!cfg.grid.empty(), "sweep grid is empty");
  if (cfg.axis == SweepAxis::data_length) {
    const auto n_max = static_cast<int>(std::llround(cfg.t_total / cfg.dt)) + 1;
    for (double v : cfg.grid) {
      require(v >= 3 && v <= n_max, "data length outside the simulated record");
    }
  }
  if (cfg.known_model) make_known_model(*cfg.known_model);
  require(cfg.horizon_seconds >= 0.0, "horizon must be non-negative");
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t master, int count) {
  std::vector<std::uint64_t> out;
  std::uint64_t state = master;
  for (int k = 0; k < count; ++k) {
    // splitmix64
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    out.push_back(z ^ (z >> 31));
  }
  return out;
}

std::uint64_t master_seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("WMSINDY_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw ContractViolation(std::string("WMSINDY_SEED is not an unsigned integer: ") + env);
  }
}

namespace {

std::vector<double> range(double lo, double hi, double step) {
  require(step > 0.0, "grid step must be positive");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double v = lo + k * step;
    if (v > hi + 1e-9 * std::max(1.0, std::abs(hi))) break;
    out.push_back(v);
  }
  return out;
}

ExperimentConfig lorenz_base(std::vector<double> x0) {
  ExperimentConfig c;
  c.system = "lorenz";
  c.x0 = std::move(x0);
  c.t_total = 25.0;
  c.dt = 0.01;
  c.library_degree = 2;
  c.library_constant = false;
  c.noise.family = NoiseFamily::gaussian;
  c.noise.level_percent = 40.0;
  c.joint.n_loop = 6;
  c.joint.lambda = 0.2;
  c.joint.q = 1;
  c.horizon_seconds = 6.0;
  return c;
}

std::vector<ExperimentConfig> with_methods(const ExperimentConfig& base, const std::vector<std::string>& labels) {
  std::vector<ExperimentConfig> out;
  for (const auto& label : labels) {
    ExperimentConfig c = base;
    if (label == "wsindy") {
      c.method = "wsindy";
    } else {
      c.joint.loss_variant = parse_loss_variant(label);
      c.method = uses_weak_form(c.joint.loss_variant) ? "wmsindy" : "msindy";
    }
    out.push_back(std::move(c));
  }
  return out;
}

struct Table2Row {
  const char* system;
  double noise;
  std::vector<double> x0;
  double t_total;
  int n_loop;
  double lambda;
  int q;
};

const std::vector<Table2Row>& table2() {
  static const std::vector<Table2Row> rows = {
      {"rossler", 40.0, {3, 5, 0}, 25.0, 6, 0.08, 3},
      {"lorenz96", 40.0, {1, 8, 8, 8, 8, 8}, 25.0, 8, 0.2, 1},
      {"vanderpol", 40.0, {-2, 1}, 10.0, 8, 0.15, 1},
      {"duffing", 40.0, {-2, 2}, 25.0, 5, 0.05, 1},
      {"cubic", 20.0, {0, 2}, 25.0, 5, 0.08, 1},
      {"lotka", 30.0, {1, 2}, 10.0, 5, 0.2, 1},
  };
  return rows;
}

ExperimentConfig table2_base(std::string_view system) {
  for (const auto& row : table2()) {
    if (system != row.system) continue;
    ExperimentConfig c;
    c.system = row.system;
    c.x0 = row.x0;
    c.t_total = row.t_total;
    c.dt = 0.01;
    const LibrarySpec lib = default_library(row.system);
    c.library_degree = lib.max_degree;
    c.library_constant = lib.include_constant;
    c.noise.level_percent = row.noise;
    c.joint.n_loop = row.n_loop;
    c.joint.lambda = row.lambda;
    c.joint.q = row.q;
    c.horizon_seconds = std::min(6.0, row.t_total);
    return c;
  }
  throw ContractViolation("unknown table2 system: " + std::string(system));
}

void apply_options(std::vector<ExperimentConfig>& configs, std::string_view preset, const BenchOptions& opt) {
  const int runs = opt.runs.value_or(10);
  require(runs >= 1, "--runs must be >= 1");
  const auto seeds = derive_seeds(opt.master_seed, runs);
  for (auto& c : configs) {
    c.preset = std::string(preset);
    c.runs_per_point = runs;
    c.seeds = seeds;
    c.joint.seed = opt.master_seed;
    if (opt.iters_per_loop) c.joint.iters_per_loop = *opt.iters_per_loop;
    if (opt.grid_step && c.axis != SweepAxis::none && c.grid.size() > 1) {
      c.grid = range(c.grid.front(), c.grid.back(), *opt.grid_step);
    }
  }
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names = {"fig2", "fig3", "fig4", "fig5", "fig6"};
  for (const auto& row : table2()) names.push_back(std::string("table2:") + row.system);
  for (const char* n : {"fig13", "fig13b", "fig14", "fig15", "fig16", "fig17", "fig18", "fig19"}) names.push_back(n);
  return names;
}

std::vector<ExperimentConfig> make_preset(std::string_view name, const BenchOptions& options) {
  const std::vector<std::string> all3 = {"wsindy", "msindy", "wmsindy"};
  const std::vector<std::string> joint2 = {"msindy", "wmsindy"};
  std::vector<ExperimentConfig> configs;

  if (name == "fig2") {
    ExperimentConfig c = lorenz_base({5, 5, 25});
    c.axis = SweepAxis::noise_level;
    c.grid = range(0.0, 50.0, 5.0);
    configs = with_methods(c, all3);
  } else if (name == "fig3") {
    ExperimentConfig c = lorenz_base({-5, 5, 25});
    c.joint.q = 3;
    c.axis = SweepAxis::data_length;
    c.grid = range(500.0, 2500.0, 250.0);
    c.horizon_fraction = 0.24;
    configs = with_methods(c, all3);
  } else if (name == "fig4") {
    ExperimentConfig c = lorenz_base({-5, 5, 25});
    c.axis = SweepAxis::lambda;
    c.grid = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    configs = with_methods(c, joint2);
  } else if (name == "fig5") {
    ExperimentConfig c = lorenz_base({-5, 5, 25});
    c.axis = SweepAxis::q;
    c.grid = range(1.0, 10.0, 1.0);
    configs = with_methods(c, joint2);
  } else if (name == "fig6") {
    ExperimentConfig c = lorenz_base({5, 5, 25});
    c.axis = SweepAxis::n_loop;
    c.grid = range(1.0, 8.0, 1.0);
    configs = with_methods(c, joint2);
  } else if (name.starts_with("table2:")) {
    configs = with_methods(table2_base(name.substr(7)), joint2);
  } else if (name == "fig13" || name == "fig13b") {
    ExperimentConfig c = lorenz_base({5, 5, 25});
    c.system = "lorenz_modified";
    c.t_total = 30.0;
    c.joint.n_loop = 5;
    c.joint.lambda = 0.4;
    c.joint.q = 4;
    c.horizon_seconds = 7.0;
    if (name == "fig13") c.known_model = "lorenz_known";
    configs = with_methods(c, joint2);
  } else if (name == "fig14") {
    ExperimentConfig c = lorenz_base({5, 5, 25});
    c.joint.n_loop = 8;
    configs = with_methods(c, {"msindy", "msindy_no_ed", "wmsindy", "wmsindy_no_er"});
  } else if (name == "fig15") {
    ExperimentConfig c = table2_base("vanderpol");
    c.noise.family = NoiseFamily::gamma;
    c.noise.mode = NoiseMode::natural;
    c.noise.level_percent = 30.0;
    c.joint.q = 2;
    c.nonzero_mean = true;
    c.horizon_seconds = 10.0;
    configs = with_methods(c, joint2);
  } else if (name == "fig16" || name == "fig17" || name == "fig18" || name == "fig19") {
    static const std::map<std::string_view, NoiseFamily> families = {{"fig16", NoiseFamily::uniform},
                                                                     {"fig17", NoiseFamily::rayleigh},
                                                                     {"fig18", NoiseFamily::gamma},
                                                                     {"fig19", NoiseFamily::dweibull}};
    ExperimentConfig c = lorenz_base({5, 5, 25});
    c.noise.family = families.at(name);
    c.axis = SweepAxis::noise_level;
    c.grid = range(0.0, 50.0, 5.0);
    configs = with_methods(c, all3);
  } else {
    throw ContractViolation("unknown preset: " + std::string(name));
  }
  apply_options(configs, name, options);
  return configs;
}

namespace {

struct PreparedRun {
  SystemSpec system;
  Trajectory truth;
  Matrix noise;
  Trajectory data;
  LibrarySpec spec;
  std::optional<KnownModel> known;
  Matrix true_coeffs;
  JointConfig joint;
};

Matrix true_model_coefficients(const SystemSpec& system, const LibrarySpec& spec,
                               const std::optional<std::string>& known_name) {
  Matrix xi = true_coefficients(system, spec);
  if (known_name) xi -= true_coefficients(make_system(*known_name), spec);
  return xi;
}

json coeffs_json(const LibrarySpec& spec, const Matrix& xi) {
  json out = json::array();
  for (int d = 0; d < xi.cols(); ++d) {
    for (int j = 0; j < xi.rows(); ++j) {
      if (xi(j, d) == 0.0) continue;
      out.push_back({{"component", d + 1}, {"term", spec.term_name(j)}, {"value", xi(j, d)}});
    }
  }
  return out;
}

json testfn_json(const std::vector<TestFunctionDiagnostics>& diags) {
  json out = json::array();
  for (const auto& t : diags) {
    out.push_back({{"component", t.component + 1},
                   {"k_star", t.k_star},
                   {"m", t.m},
                   {"p", t.p},
                   {"sigma", t.sigma},
                   {"fallback", t.fallback_used}});
  }
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const RunMetrics& m) {
  return {{"e_noise", optional_number(m.e_noise)},
          {"e_field", m.e_field},
          {"e_forward", optional_number(m.e_forward)},
          {"e_param", optional_number(m.e_param)},
          {"success", m.success}};
}

json joint_json(const JointConfig& j) {
  return {{"n_loop", j.n_loop},       {"lambda", j.lambda},
          {"q", j.q},                 {"learning_rate", j.learning_rate},
          {"iters_per_loop", j.iters_per_loop}, {"omega_base", j.omega_base},
          {"loss_variant", to_string(j.loss_variant)}, {"tau", j.tau},
          {"tau_hat", j.tau_hat}};
}

}  // namespace

IdentifyOutput identify(const IdentifyRequest& request) {
  IdentifyOutput out;
  const int dims = request.data.dimension();
  out.spec = build_library(dims, request.library_degree, request.library_constant);
  std::optional<KnownModel> known;
  if (request.known_model) {
    known = make_known_model(*request.known_model);
    require(known->spec.dimension == dims, "known model dimension does not match the data");
  }

  const auto start = std::chrono::steady_clock::now();
  json doc;
  doc["system"] = request.system;
  doc["method"] = request.method;
  if (request.method == "wsindy") {
    const WsindyResult r = wsindy_identify(request.data, out.spec, request.joint.tau, request.joint.tau_hat,
                                           request.wsindy_lambda, known);
    out.estimate = as_estimate(r);
    doc["config"] = {{"tau", request.joint.tau}, {"tau_hat", request.joint.tau_hat}, {"lambdas", r.lambdas}};
    doc["testfns"] = testfn_json(r.testfns.diagnostics);
  } else {
    require(request.method == "msindy" || request.method == "wmsindy", "unknown method: " + request.method);
    JointConfig joint = request.joint;
    require(uses_weak_form(joint.loss_variant) == (request.method == "wmsindy"),
            "loss variant does not belong to method " + request.method);
    const IdentificationResult r = request.nonzero_mean
                                       ? run_nonzero_mean(request.data, out.spec, joint, known,
                                                          request.nonzero_mean_iterations)
                                       : run_joint(request.data, out.spec, joint, known);
    out.estimate = as_estimate(r);
    out.result = r;
    json cfg = joint_json(joint);
    cfg["nonzero_mean"] = request.nonzero_mean;
    doc["config"] = cfg;
    json trace = json::array();
    for (const auto& l : r.loop_trace) {
      trace.push_back({{"loop", l.loop},
                       {"loss", l.loss},
                       {"loss_min", l.loss_min},
                       {"residual", l.residual},
                       {"simulation", l.simulation},
                       {"active_count", l.active_count},
                       {"testfns", testfn_json(l.testfns)}});
    }
    doc["loop_trace"] = trace;
    doc["empty_model"] = r.empty_model;
    if (!r.mean_shifts.empty()) doc["mean_shifts"] = r.mean_shifts;
  }
  doc["config"]["library_degree"] = request.library_degree;
  doc["config"]["library_constant"] = request.library_constant;
  if (request.known_model) doc["config"]["known_model"] = *request.known_model;
  doc["coeffs"] = coeffs_json(out.spec, out.estimate.coeffs.xi);
  if (out.estimate.noise) {
    const NoiseSummary s = summarize_noise(*out.estimate.noise);
    doc["noise_summary"] = {{"mean", s.mean}, {"std", s.std}, {"skewness", s.skewness}};
  } else {
    doc["noise_summary"] = nullptr;
  }
  doc["seed"] = request.seed;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.document = doc.dump(2);
  return out;
}

CellResult run_cell(const ExperimentConfig& cfg, int sweep_index, int seed_index) {
  require(seed_index >= 0 && seed_index < static_cast<int>(cfg.seeds.size()), "seed index out of range");
  const double value = cfg.axis == SweepAxis::none ? 0.0 : cfg.grid.at(sweep_index);

  const SystemSpec system = make_system(cfg.system);
  const Vector x0 = Eigen::Map<const Vector>(cfg.x0.data(), static_cast<Eigen::Index>(cfg.x0.size()));
  Trajectory truth = simulate_truth(system, x0, cfg.t_total, cfg.dt);
  if (cfg.axis == SweepAxis::data_length) {
    truth.states = Matrix(truth.states.topRows(static_cast<Eigen::Index>(std::llround(value))));
  }

  NoiseSpec noise_spec = cfg.noise;
  noise_spec.seed = cfg.seeds[seed_index];
  if (cfg.axis == SweepAxis::noise_level) noise_spec.level_percent = value;
  const Matrix noise = generate_noise(noise_spec, truth.states);

  IdentifyRequest request;
  request.system = cfg.system;
  request.method = cfg.method;
  request.data = truth;
  request.data.states += noise;
  request.joint = cfg.joint;
  request.joint.seed = cfg.seeds[seed_index];
  if (cfg.axis == SweepAxis::lambda) request.joint.lambda = value;
  if (cfg.axis == SweepAxis::q) request.joint.q = static_cast<int>(std::llround(value));
  if (cfg.axis == SweepAxis::n_loop) request.joint.n_loop = static_cast<int>(std::llround(value));
  request.library_degree = cfg.library_degree;
  request.library_constant = cfg.library_constant;
  request.known_model = cfg.known_model;
  request.nonzero_mean = cfg.nonzero_mean;
  request.nonzero_mean_iterations = cfg.nonzero_mean_iterations;
  request.seed = cfg.seeds[seed_index];

  const IdentifyOutput out = identify(request);

  GroundTruth gt;
  gt.states = truth.states;
  gt.noise = noise;
  gt.coeffs = true_model_coefficients(system, out.spec, cfg.known_model);
  gt.field = system.rhs;
  gt.dt = cfg.dt;
  Horizon horizon;
  horizon.seconds = cfg.horizon_fraction ? *cfg.horizon_fraction * (truth.size() - 1) * cfg.dt : cfg.horizon_seconds;
  std::optional<KnownModel> known;
  if (cfg.known_model) known = make_known_model(*cfg.known_model);
  std::optional<Horizon> window;
  if (out.estimate.noise) window = horizon;  // forward prediction is scored for the denoising methods only

  CellResult cell;
  cell.label = cfg.label();
  cell.sweep_value = value;
  cell.sweep_index = sweep_index;
  cell.seed_index = seed_index;
  cell.seed = cfg.seeds[seed_index];
  cell.metrics = compute_metrics(gt, out.estimate, out.spec, known, window);
  cell.wall_time = out.wall_time;

  json doc = json::parse(out.document);
  doc["method"] = cell.label;
  doc["preset"] = cfg.preset;
  doc["sweep_axis"] = to_string(cfg.axis);
  doc["sweep_value"] = value;
  doc["metrics"] = metrics_json(cell.metrics);
  doc["wall_time"] = cell.wall_time;
  cell.json = doc.dump(2);
  return cell;
}

namespace {

std::string cell_or_empty(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string run_file_name(const CellResult& c) {
  return c.label + "_" + std::to_string(c.sweep_index) + "_" + std::to_string(c.seed_index) + ".json";
}

}  // namespace

SweepOutcome sweep(const std::vector<ExperimentConfig>& configs, const fs::path& output_dir, int parallelism) {
  require(!configs.empty(), "sweep needs at least one config");
  require(parallelism >= 1, "parallelism must be >= 1");
  for (const auto& c : configs) validate(c);
  ensure_writable_directory(output_dir);
  ensure_writable_directory(output_dir / "runs");

  struct Cell {
    int config;
    int sweep;
    int seed;
  };
  std::vector<Cell> cells;
  for (int c = 0; c < static_cast<int>(configs.size()); ++c) {
    const int points = configs[c].axis == SweepAxis::none ? 1 : static_cast<int>(configs[c].grid.size());
    for (int s = 0; s < points; ++s) {
      for (int r = 0; r < configs[c].runs_per_point; ++r) cells.push_back({c, s, r});
    }
  }

  std::vector<std::optional<CellResult>> results(cells.size());
  std::vector<std::optional<std::string>> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      try {
        results[i] = run_cell(configs[cell.config], cell.sweep, cell.seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int threads = std::min<int>(parallelism, static_cast<int>(cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  SweepOutcome outcome;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (results[i]) {
      outcome.results.push_back(std::move(*results[i]));
    } else {
      const ExperimentConfig& cfg = configs[cells[i].config];
      outcome.failures.push_back({cfg.label(),
                                  cfg.axis == SweepAxis::none ? 0.0 : cfg.grid[cells[i].sweep],
                                  cfg.seeds[cells[i].seed], errors[i].value_or("unknown error")});
    }
  }
  std::stable_sort(outcome.results.begin(), outcome.results.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.label, a.sweep_index, a.seed_index) < std::tie(b.label, b.sweep_index, b.seed_index);
  });

  std::vector<std::string> labels;
  for (const auto& c : configs) {
    if (std::find(labels.begin(), labels.end(), c.label()) == labels.end()) labels.push_back(c.label());
  }
  for (const auto& label : labels) {
    std::string aggregate = "sweep_value,seed,e_noise,e_field,e_forward,e_param,success\n";
    std::string timing = "sweep_value,seed,wall_time\n";
    for (const auto& r : outcome.results) {
      if (r.label != label) continue;
      aggregate += format_double(r.sweep_value) + "," + std::to_string(r.seed) + "," +
                   cell_or_empty(r.metrics.e_noise) + "," + format_double(r.metrics.e_field) + "," +
                   cell_or_empty(r.metrics.e_forward) + "," + cell_or_empty(r.metrics.e_param) + "," +
                   (r.metrics.success ? "1" : "0") + "\n";
      timing += format_double(r.sweep_value) + "," + std::to_string(r.seed) + "," + format_double(r.wall_time) + "\n";
      write_text(output_dir / "runs" / run_file_name(r), r.json + "\n");
    }
    write_text(output_dir / ("aggregate_" + label + ".csv"), aggregate);
    write_text(output_dir / ("timing_" + label + ".csv"), timing);
  }

  std::string failures = "method,sweep_value,seed,error\n";
  for (const auto& f : outcome.failures) {
    std::string msg = f.error;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::replace(msg.begin(), msg.end(), '"', '\'');
    failures += f.label + "," + format_double(f.sweep_value) + "," + std::to_string(f.seed) + ",\"" + msg + "\"\n";
  }
  write_text(output_dir / "failures.csv", failures);

  const ExperimentConfig& first = configs.front();
  json manifest;
  manifest["preset"] = first.preset;
  manifest["system"] = first.system;
  manifest["axis"] = to_string(first.axis);
  manifest["grid"] = first.grid;
  manifest["methods"] = labels;
  manifest["runs_per_point"] = first.runs_per_point;
  manifest["seeds"] = first.seeds;
  manifest["horizon_seconds"] = first.horizon_seconds;
  if (first.horizon_fraction) manifest["horizon_fraction"] = *first.horizon_fraction;
  manifest["noise_family"] = to_string(first.noise.family);
  manifest["noise_mode"] = to_string(first.noise.mode);
  manifest["joint"] = joint_json(first.joint);
  write_text(output_dir / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

SweepOutcome run_experiment(const ExperimentConfig& cfg, int parallelism) {
  return sweep({cfg}, cfg.output_dir, parallelism);
}

namespace {

struct AggregateRow {
  double sweep_value = 0.0;
  std::optional<double> metric[4];  // e_noise, e_field, e_forward, e_param
  bool success = false;
};

std::vector<AggregateRow> read_aggregate(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing aggregate file: " + path.string());
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() == 6) cells.emplace_back();
    if (cells.size() != 7) throw IoError(path.string() + ": malformed row: " + line);
    AggregateRow row;
    row.sweep_value = std::stod(cells[0]);
    for (int k = 0; k < 4; ++k) {
      if (!cells[k + 2].empty()) row.metric[k] = std::stod(cells[k + 2]);
    }
    row.success = cells[6] == "1";
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<fs::path> emit_figure_data(const fs::path& dir, std::string_view figure) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("missing manifest: " + manifest_path.string());
  const json manifest = json::parse(read_text(manifest_path));
  const std::string axis = manifest.at("axis").get<std::string>();
  const std::string column = axis == "none" ? "sweep_value" : axis;
  const auto labels = manifest.at("methods").get<std::vector<std::string>>();

  std::vector<std::pair<std::string, std::vector<AggregateRow>>> data;
  for (const auto& label : labels) data.emplace_back(label, read_aggregate(dir / ("aggregate_" + label + ".csv")));

  static const char* panel_names[] = {"a_e_noise", "b_e_field", "c_e_forward", "d_e_param"};
  std::vector<fs::path> written;
  for (int k = 0; k < 4; ++k) {
    std::string text = column + ",method,median,min,max\n";
    for (const auto& [label, rows] : data) {
      std::map<double, std::vector<double>> by_value;
      for (const auto& r : rows) {
        if (r.metric[k]) by_value[r.sweep_value].push_back(*r.metric[k]);
      }
      for (const auto& [value, values] : by_value) {
        const Spread s = spread(values);
        text += format_double(value) + "," + label + "," + format_double(s.median) + "," + format_double(s.min) +
                "," + format_double(s.max) + "\n";
      }
    }
    const fs::path out = dir / (std::string(figure) + "_" + panel_names[k] + ".csv");
    write_text(out, text);
    written.push_back(out);
  }
  std::string text = column + ",method,success_fraction\n";
  for (const auto& [label, rows] : data) {
    std::map<double, std::pair<int, int>> by_value;
    for (const auto& r : rows) {
      auto& [hits, total] = by_value[r.sweep_value];
      hits += r.success ? 1 : 0;
      total += 1;
    }
    for (const auto& [value, counts] : by_value) {
      text += format_double(value) + "," + label + "," +
              format_double(static_cast<double>(counts.first) / counts.second) + "\n";
    }
  }
  const fs::path out = dir / (std::string(figure) + "_e_success.csv");
  write_text(out, text);
  written.push_back(out);
  return written;
}

}  // namespace wmsindy
