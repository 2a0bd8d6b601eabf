#include "wmsindy/dynamics.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace wmsindy {

namespace odeint = boost::numeric::odeint;

namespace {

using Terms = std::vector<PolyTerm>;

std::vector<int> mono(std::initializer_list<int> e) { return std::vector<int>(e); }

Rhs rhs_from_terms(int dimension, Terms terms) {
  return [dimension, terms = std::move(terms)](const Vector& x) {
    Vector dx = Vector::Zero(dimension);
    for (const auto& t : terms) {
      double v = t.coeff;
      for (int d = 0; d < dimension; ++d) {
        for (int k = 0; k < t.exponents[d]; ++k) v *= x[d];
      }
      dx[t.component] += v;
    }
    return dx;
  };
}

SystemSpec lorenz(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0) {
  SystemSpec s;
  s.name = "lorenz";
  s.dimension = 3;
  s.parameters = {{"sigma", sigma}, {"rho", rho}, {"beta", beta}};
  s.rhs = [=](const Vector& x) {
    Vector dx(3);
    dx << sigma * (x[1] - x[0]), x[0] * (rho - x[2]) - x[1], x[0] * x[1] - beta * x[2];
    return dx;
  };
  s.terms = {{0, mono({1, 0, 0}), -sigma}, {0, mono({0, 1, 0}), sigma},
             {1, mono({1, 0, 0}), rho},    {1, mono({0, 1, 0}), -1.0},
             {1, mono({1, 0, 1}), -1.0},   {2, mono({1, 1, 0}), 1.0},
             {2, mono({0, 0, 1}), -beta}};
  return s;
}

SystemSpec rossler() {
  const double a = 0.2, b = 0.2, c = 5.7;
  SystemSpec s;
  s.name = "rossler";
  s.dimension = 3;
  s.parameters = {{"a", a}, {"b", b}, {"c", c}};
  s.rhs = [=](const Vector& x) {
    Vector dx(3);
    dx << -x[1] - x[2], x[0] + a * x[1], b + x[2] * (x[0] - c);
    return dx;
  };
  s.terms = {{0, mono({0, 1, 0}), -1.0}, {0, mono({0, 0, 1}), -1.0}, {1, mono({1, 0, 0}), 1.0},
             {1, mono({0, 1, 0}), a},    {2, mono({0, 0, 0}), b},    {2, mono({1, 0, 1}), 1.0},
             {2, mono({0, 0, 1}), -c}};
  return s;
}

SystemSpec lorenz96(int size = 6, double forcing = 8.0) {
  SystemSpec s;
  s.name = "lorenz96";
  s.dimension = size;
  s.parameters = {{"F", forcing}, {"S", static_cast<double>(size)}};
  auto wrap = [size](int i) { return ((i % size) + size) % size; };
  s.rhs = [=](const Vector& x) {
    Vector dx(size);
    for (int i = 0; i < size; ++i) {
      dx[i] = (x[wrap(i + 1)] - x[wrap(i - 2)]) * x[wrap(i - 1)] - x[i] + forcing;
    }
    return dx;
  };
  for (int i = 0; i < size; ++i) {
    std::vector<int> e(size, 0);
    auto with = [&](int a, int b) {
      std::vector<int> out(size, 0);
      out[wrap(a)] += 1;
      out[wrap(b)] += 1;
      return out;
    };
    s.terms.push_back({i, with(i + 1, i - 1), 1.0});
    s.terms.push_back({i, with(i - 2, i - 1), -1.0});
    e[i] = 1;
    s.terms.push_back({i, e, -1.0});
    s.terms.push_back({i, std::vector<int>(size, 0), forcing});
  }
  return s;
}

SystemSpec vanderpol() {
  const double mu = 0.5;
  SystemSpec s;
  s.name = "vanderpol";
  s.dimension = 2;
  s.parameters = {{"mu", mu}};
  s.rhs = [=](const Vector& x) {
    Vector dx(2);
    dx << x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0];
    return dx;
  };
  s.terms = {{0, mono({0, 1}), 1.0},
             {1, mono({0, 1}), mu},
             {1, mono({2, 1}), -mu},
             {1, mono({1, 0}), -1.0}};
  return s;
}

SystemSpec duffing() {
  const double p1 = 0.2, p2 = 0.1, p3 = 1.0;
  SystemSpec s;
  s.name = "duffing";
  s.dimension = 2;
  s.parameters = {{"p1", p1}, {"p2", p2}, {"p3", p3}};
  s.rhs = [=](const Vector& x) {
    Vector dx(2);
    dx << x[1], -p1 * x[1] - p2 * x[0] - p3 * x[0] * x[0] * x[0];
    return dx;
  };
  s.terms = {{0, mono({0, 1}), 1.0},
             {1, mono({0, 1}), -p1},
             {1, mono({1, 0}), -p2},
             {1, mono({3, 0}), -p3}};
  return s;
}

SystemSpec cubic() {
  const double p1 = -0.1, p2 = 2.0, p3 = -2.0, p4 = -1.0;
  SystemSpec s;
  s.name = "cubic";
  s.dimension = 2;
  s.parameters = {{"p1", p1}, {"p2", p2}, {"p3", p3}, {"p4", p4}};
  // ẏ uses p3: the printed p2 there leaves p3 unused and the orbit unbounded.
  s.rhs = [=](const Vector& x) {
    const double x3 = x[0] * x[0] * x[0];
    const double y3 = x[1] * x[1] * x[1];
    Vector dx(2);
    dx << p1 * x3 + p2 * y3, p3 * x3 + p4 * y3;
    return dx;
  };
  s.terms = {{0, mono({3, 0}), p1}, {0, mono({0, 3}), p2}, {1, mono({3, 0}), p3}, {1, mono({0, 3}), p4}};
  return s;
}

SystemSpec lotka(bool printed) {
  const double p1 = 1.0, p2 = 0.5;
  SystemSpec s;
  s.name = printed ? "lotka_printed" : "lotka";
  s.dimension = 2;
  s.parameters = {{"p1", p1}, {"p2", p2}};
  const int death = printed ? 0 : 1;
  s.rhs = [=](const Vector& x) {
    Vector dx(2);
    dx << p1 * x[0] - p2 * x[0] * x[1], p2 * x[0] * x[1] - 2.0 * p1 * x[death];
    return dx;
  };
  s.terms = {{0, mono({1, 0}), p1},
             {0, mono({1, 1}), -p2},
             {1, mono({1, 1}), p2},
             {1, death == 0 ? mono({1, 0}) : mono({0, 1}), -2.0 * p1}};
  return s;
}

SystemSpec from_terms(std::string name, int dimension, Terms terms) {
  SystemSpec s;
  s.name = std::move(name);
  s.dimension = dimension;
  s.rhs = rhs_from_terms(dimension, terms);
  s.terms = std::move(terms);
  return s;
}

SystemSpec lorenz_modified() {
  SystemSpec s = from_terms("lorenz_modified", 3,
                            {{0, mono({1, 0, 0}), -10.0},
                             {0, mono({0, 1, 0}), 10.0},
                             {0, mono({1, 1, 0}), 1.0},
                             {1, mono({1, 0, 0}), 28.0},
                             {1, mono({1, 0, 1}), -1.0},
                             {1, mono({0, 1, 0}), -1.0},
                             {1, mono({0, 0, 1}), 3.0},
                             {2, mono({1, 1, 0}), 1.0},
                             {2, mono({0, 0, 1}), -8.0 / 3.0}});
  return s;
}

SystemSpec lorenz_known() {
  return from_terms("lorenz_known", 3,
                    {{0, mono({1, 0, 0}), -9.5},
                     {0, mono({0, 1, 0}), 10.5},
                     {1, mono({1, 0, 0}), 27.6},
                     {1, mono({1, 0, 1}), -1.1},
                     {1, mono({0, 1, 0}), -0.9},
                     {2, mono({1, 1, 0}), 1.05},
                     {2, mono({0, 0, 1}), -2.6}});
}

int max_degree_of(const Terms& terms) {
  int deg = 1;
  for (const auto& t : terms) {
    int d = 0;
    for (int e : t.exponents) d += e;
    deg = std::max(deg, d);
  }
  return deg;
}

}  // namespace

double SystemSpec::parameter(std::string_view key) const {
  for (const auto& [k, v] : parameters) {
    if (k == key) return v;
  }
  throw ContractViolation("system " + name + " has no parameter " + std::string(key));
}

SystemSpec make_system(std::string_view name) {
  if (name == "lorenz") return lorenz();
  if (name == "rossler") return rossler();
  if (name == "lorenz96") return lorenz96();
  if (name == "vanderpol") return vanderpol();
  if (name == "duffing") return duffing();
  if (name == "cubic") return cubic();
  if (name == "lotka") return lotka(false);
  if (name == "lotka_printed") return lotka(true);
  if (name == "lorenz_modified") return lorenz_modified();
  if (name == "lorenz_known") return lorenz_known();
  throw ContractViolation("unknown system preset: " + std::string(name));
}

std::vector<std::string> system_names() {
  return {"lorenz", "rossler",       "lorenz96",        "vanderpol",   "duffing",
          "cubic",  "lotka",         "lotka_printed",   "lorenz_modified", "lorenz_known"};
}

KnownModel make_known_model(std::string_view name) {
  require(name == "lorenz_known", "unknown known-model preset: " + std::string(name));
  const SystemSpec sys = make_system(name);
  KnownModel model;
  model.name = sys.name;
  model.spec = build_library(sys.dimension, max_degree_of(sys.terms), false);
  model.coeffs = true_coefficients(sys, model.spec);
  return model;
}

Vector eval_rhs(const SystemSpec& system, const Vector& x) {
  require(x.size() == system.dimension,
          "state has dimension " + std::to_string(x.size()) + ", system " + system.name + " expects " +
              std::to_string(system.dimension));
  return system.rhs(x);
}

Matrix true_coefficients(const std::vector<PolyTerm>& terms, const LibrarySpec& spec) {
  Matrix xi = Matrix::Zero(spec.size(), spec.dimension);
  for (const auto& t : terms) {
    const int j = spec.index_of(t.exponents);
    require(j >= 0, "library lacks a term needed by the system");
    xi(j, t.component) += t.coeff;
  }
  return xi;
}

Matrix true_coefficients(const SystemSpec& system, const LibrarySpec& spec) {
  require(spec.dimension == system.dimension, "library dimension does not match system");
  return true_coefficients(system.terms, spec);
}

Trajectory simulate_truth(const SystemSpec& system, const Vector& x0, double t_total, double dt) {
  require(t_total > 0.0 && dt > 0.0, "simulation horizon and dt must be positive");
  require(x0.size() == system.dimension, "initial condition dimension mismatch");

  const int steps = static_cast<int>(std::llround(t_total / dt));
  const int n = steps + 1;
  std::vector<double> times(n);
  for (int k = 0; k < n; ++k) times[k] = k * dt;

  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  traj.states.resize(n, system.dimension);

  using State = std::vector<double>;
  const int dim = system.dimension;
  auto rhs = [&](const State& x, State& dxdt, double /*t*/) {
    const Vector dx = system.rhs(Eigen::Map<const Vector>(x.data(), dim));
    std::copy(dx.data(), dx.data() + dim, dxdt.begin());
  };

  int written = 0;
  double last_time = 0.0;
  auto observer = [&](const State& x, double t) {
    for (int d = 0; d < dim; ++d) {
      if (!std::isfinite(x[d]) || std::abs(x[d]) > 1e12) {
        throw IntegrationError("state diverged in " + system.name, last_time);
      }
      traj.states(written, d) = x[d];
    }
    last_time = t;
    ++written;
  };

  State x(x0.data(), x0.data() + dim);
  auto stepper = odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt / 10.0, observer,
                            odeint::max_step_checker(100000));
  } catch (const IntegrationError&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("integration failed for ") + system.name + ": " + e.what(),
                           last_time);
  }
  if (written != n) throw IntegrationError("integration stopped early for " + system.name, last_time);
  return traj;
}

Vector rk4_step(const Rhs& f, const Vector& x, double dt) {
  const Vector k1 = f(x);
  const Vector k2 = f(x + 0.5 * dt * k1);
  const Vector k3 = f(x + 0.5 * dt * k2);
  const Vector k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector flow_map(const Matrix& coeffs, const LibrarySpec& spec, const std::optional<KnownModel>& known,
                const Vector& x, int q, double dt, Direction direction) {
  require(q >= 1, "flow map needs q >= 1");
  require(coeffs.rows() == spec.size() && coeffs.cols() == spec.dimension, "coefficient shape mismatch");
  require(x.size() == spec.dimension, "state dimension mismatch");
  const VectorField field(spec, known);
  const double h = direction == Direction::forward ? dt : -dt;
  Matrix state = x.transpose();
  Matrix next;
  for (int s = 0; s < q; ++s) {
    rk4_forward(field, coeffs, state, h, next, nullptr);
    state.swap(next);
  }
  return state.transpose();
}

LibrarySpec default_library(std::string_view system) {
  static const std::map<std::string, std::pair<int, bool>, std::less<>> table = {
      {"lorenz", {2, false}},   {"rossler", {2, true}},         {"lorenz96", {2, true}},
      {"vanderpol", {3, false}}, {"duffing", {3, false}},       {"cubic", {3, false}},
      {"lotka", {2, false}},    {"lotka_printed", {2, false}},  {"lorenz_modified", {2, false}},
      {"lorenz_known", {2, false}}};
  auto it = table.find(system);
  require(it != table.end(), "unknown system preset: " + std::string(system));
  const SystemSpec sys = make_system(system);
  return build_library(sys.dimension, it->second.first, it->second.second);
}

}  // namespace wmsindy
