#include "qds/dynamics.hpp"

#include "qds/errors.hpp"
#include "qds/fock.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace qds::dynamics {

std::string_view to_string(Method m) { return m == Method::expm ? "expm" : "rk"; }

double Trajectory::max_trace_drift() const {
  return trace_drift.empty() ? 0.0 : *std::max_element(trace_drift.begin(), trace_drift.end());
}

double Trajectory::min_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : states) m = std::min(m, s.min_eigenvalue());
  return m;
}

bool Trajectory::boundary_affected() const {
  return std::any_of(boundary_flags.begin(), boundary_flags.end(), [](bool b) { return b; });
}

ExpmPropagator::ExpmPropagator(gksl::Superoperator superop) : superop_(std::move(superop)) {}

const ComplexMatrix& ExpmPropagator::step(double t) {
  auto it = cache_.find(t);
  if (it == cache_.end()) {
    const ComplexMatrix scaled = t * superop_.matrix();
    it = cache_.emplace(t, scaled.exp()).first;
  }
  return it->second;
}

std::vector<double> uniform_grid(double t0, double t1, int points) {
  if (points < 2 || !(t1 > t0)) throw InvalidInput("uniform_grid: need points >= 2 and t1 > t0");
  std::vector<double> t(points);
  const double dt = (t1 - t0) / (points - 1);
  for (int i = 0; i < points; ++i) t[i] = t0 + dt * i;
  t.back() = t1;
  return t;
}

namespace {

void validate_times(std::span<const double> times) {
  if (times.empty()) throw InvalidInput("propagation: empty time grid");
  if (!(times[0] >= 0.0)) throw InvalidInput("propagation: times must start at t >= 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidInput("propagation: times must be strictly increasing");
  }
}

void record(Trajectory& traj, double t, const ComplexMatrix& raw, const PropagationOptions& opt) {
  const double drift = std::abs(raw.trace().real() - 1.0);
  if (drift > opt.trace_fail) {
    throw TraceDriftError("propagation: trace drift " + std::to_string(drift) + " at t = " + std::to_string(t));
  }
  if (drift > opt.trace_report) spdlog::warn("propagation: trace drift {:.3e} at t = {}", drift, t);
  gksl::DensityOperator state = gksl::DensityOperator::from_matrix(raw, {1e-8, opt.psd_tol, opt.trace_fail});
  traj.times.push_back(t);
  traj.trace_drift.push_back(drift);
  traj.boundary_flags.push_back(opt.boundary_levels > 0 &&
                                fock::top_level_mass(state.matrix(), opt.boundary_levels) > opt.boundary_mass);
  traj.states.push_back(std::move(state));
}

}  // namespace

std::vector<Trajectory> propagate_expm_batch(ExpmPropagator& propagator,
                                             std::span<const gksl::DensityOperator> initial,
                                             std::span<const double> times,
                                             const PropagationOptions& options) {
  validate_times(times);
  const int dim = propagator.superoperator().dim();
  const auto k = static_cast<Eigen::Index>(initial.size());
  ComplexMatrix columns(static_cast<Eigen::Index>(dim) * dim, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    if (initial[c].dim() != dim) throw InvalidInput("propagate_expm: initial state dimension mismatch");
    columns.col(c) = gksl::vec(initial[c].matrix());
  }

  // Grids produced by uniform_grid differ from exact spacing by rounding
  // only; one step matrix serves the whole grid.
  double dt = 0.0;
  bool uniform = times.size() >= 2;
  if (uniform) {
    dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size() && uniform; ++i) {
      uniform = std::abs((times[i] - times[i - 1]) - dt) <= 1e-9 * dt;
    }
  }

  std::vector<Trajectory> out(initial.size());
  for (auto& traj : out) {
    traj.method = Method::expm;
    traj.dt = uniform ? dt : 0.0;
    traj.boundary_levels = options.boundary_levels;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double delta = i == 0 ? times[0] : (uniform ? dt : times[i] - times[i - 1]);
    if (delta > 0.0) columns = kernels::advance(propagator.step(delta), columns, options.exec);
    for (Eigen::Index c = 0; c < k; ++c) {
      record(out[c], times[i], gksl::unvec(columns.col(c), dim), options);
    }
  }
  return out;
}

Trajectory propagate_expm(const gksl::SystemModel& model, const gksl::DensityOperator& rho0,
                          std::span<const double> times, const PropagationOptions& options) {
  ExpmPropagator propagator{gksl::Superoperator(model, options.exec)};
  std::vector<gksl::DensityOperator> init{rho0};
  return std::move(propagate_expm_batch(propagator, init, times, options).front());
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// fifth-order minus embedded fourth-order weights
constexpr std::array<double, 7> kE{71.0 / 57600,  0.0, -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

}  // namespace

Trajectory propagate_rk(const gksl::SystemModel& model, const gksl::DensityOperator& rho0,
                        double t_end, double rel_tol, const PropagationOptions& options) {
  if (!(rel_tol >= 1e-12 && rel_tol <= 1e-3)) throw InvalidInput("propagate_rk: rel_tol must lie in [1e-12, 1e-3]");
  if (!(t_end > 0.0)) throw InvalidInput("propagate_rk: t_end must be positive");
  if (rho0.dim() != model.dim()) throw InvalidInput("propagate_rk: initial state dimension mismatch");
  std::vector<double> outputs = options.output_times;
  if (!outputs.empty()) {
    validate_times(outputs);
    if (outputs.back() > t_end * (1 + 1e-12)) throw InvalidInput("propagate_rk: output time beyond t_end");
  }

  Trajectory traj;
  traj.method = Method::rk;
  traj.rel_tol = rel_tol;
  traj.boundary_levels = options.boundary_levels;

  auto rhs = [&model](const ComplexMatrix& y) { return gksl::predual_generator(model, y); };
  const double scale = std::max(1.0, model.hamiltonian().norm() + model.decay().norm());
  double h = std::min(t_end, 1e-2 / scale);
  double t = 0.0;
  ComplexMatrix y = rho0.matrix();

  std::size_t next_out = 0;
  if (outputs.empty() || outputs.front() == 0.0) {
    record(traj, 0.0, y, options);
    if (!outputs.empty()) next_out = 1;
  }

  std::array<ComplexMatrix, 7> k;
  long steps = 0;
  while (t < t_end) {
    if (++steps > 50'000'000) throw StiffnessError("propagate_rk: step budget exhausted", t);
    const double target = next_out < outputs.size() ? outputs[next_out] : t_end;
    bool lands = false;
    if (t + h >= target) {
      h = target - t;
      lands = true;
    }
    if (h < 1e-12) throw StiffnessError("propagate_rk: step size underflow at t = " + std::to_string(t), t);

    k[0] = rhs(y);
    for (int s = 1; s < 6; ++s) {
      ComplexMatrix stage = y;
      for (int j = 0; j < s; ++j) {
        if (kA[s][j] != 0.0) stage += (h * kA[s][j]) * k[j];
      }
      k[s] = rhs(stage);
    }
    ComplexMatrix y5 = y;
    for (int j = 0; j < 6; ++j) {
      if (kA[6][j] != 0.0) y5 += (h * kA[6][j]) * k[j];
    }
    k[6] = rhs(y5);
    ComplexMatrix err = ComplexMatrix::Zero(y.rows(), y.cols());
    for (int j = 0; j < 7; ++j) {
      if (kE[j] != 0.0) err += (h * kE[j]) * k[j];
    }
    const double denom = rel_tol + rel_tol * std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
    const double err_norm = err.cwiseAbs().maxCoeff() / denom;

    if (err_norm > 1.0) {
      h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 1.0);
      continue;
    }
    ComplexMatrix candidate = opalg::hermitize(y5);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(candidate, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -options.psd_tol) {
      h *= 0.5;
      continue;
    }
    y = std::move(candidate);
    t = lands ? target : t + h;
    if (lands && next_out < outputs.size()) {
      record(traj, t, y, options);
      ++next_out;
    } else if (outputs.empty()) {
      record(traj, t, y, options);
    }
    const double grow = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    h *= grow;
    if (lands && next_out >= outputs.size() && t >= t_end) break;
  }
  return traj;
}

const std::vector<Complex>& ExpectationTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw InvalidInput("expectations: no observable named '" + std::string(name) + "'");
}

std::vector<double> ExpectationTable::real_column(std::string_view name) const {
  const auto& c = column(name);
  std::vector<double> out(c.size());
  std::transform(c.begin(), c.end(), out.begin(), [](Complex z) { return z.real(); });
  return out;
}

ExpectationTable expectations(const Trajectory& traj, const std::vector<NamedObservable>& observables) {
  ExpectationTable table;
  table.times = traj.times;
  for (const auto& obs : observables) {
    opalg::require_square(obs.op, "expectations");
    if (!traj.states.empty() && obs.op.rows() != traj.states.front().dim()) {
      throw InvalidInput("expectations: observable '" + obs.name + "' has the wrong dimension");
    }
    const double scale = std::max(1.0, obs.op.norm());
    const bool herm = (obs.op - obs.op.adjoint()).norm() <= 1e-12 * scale;
    std::vector<Complex> series;
    series.reserve(traj.size());
    for (const auto& s : traj.states) {
      const Complex v = opalg::trace_product(obs.op, s.matrix());
      if (herm && std::abs(v.imag()) > 1e-10 * scale) {
        throw ContractViolation("expectations: Hermitian observable '" + obs.name + "' has imaginary expectation");
      }
      series.push_back(herm ? Complex(v.real(), 0.0) : v);
    }
    table.names.push_back(obs.name);
    table.hermitian.push_back(herm);
    table.values.push_back(std::move(series));
  }
  return table;
}

std::vector<double> drift_residual(const Trajectory& traj, const gksl::SystemModel& model,
                                   const ComplexMatrix& x) {
  const std::size_t n = traj.size();
  if (n < 3) throw InvalidInput("drift_residual: need at least 3 samples");
  const double dt = traj.times[1] - traj.times[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((traj.times[i] - traj.times[i - 1]) - dt) > 1e-9 * dt) {
      throw InvalidInput("drift_residual: sampling is not uniform");
    }
  }
  const ComplexMatrix lx = gksl::adjoint_generator(model, x);
  std::vector<Complex> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = opalg::trace_product(x, traj.states[i].matrix());
  std::vector<double> out(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Complex fd = (f[i + 1] - f[i - 1]) / (2.0 * dt);
    out[i - 1] = std::abs(fd - opalg::trace_product(lx, traj.states[i].matrix()));
  }
  return out;
}

}  // namespace qds::dynamics
