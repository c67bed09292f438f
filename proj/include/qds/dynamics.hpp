#pragma once

// Propagation of rho_t = S_t(rho) and observable trajectories.

#include "qds/gksl.hpp"
#include "qds/kernels.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace qds::dynamics {

enum class Method { expm, rk };

std::string_view to_string(Method m);

struct Trajectory {
  std::vector<double> times;
  std::vector<gksl::DensityOperator> states;
  Method method = Method::expm;
  double dt = 0.0;       // uniform expm step, 0 for non-uniform or rk grids
  double rel_tol = 0.0;  // rk only
  std::vector<double> trace_drift;  // |tr rho_t - 1|, never renormalized away
  std::vector<bool> boundary_flags; // population on the top Fock levels above threshold
  int boundary_levels = 0;

  std::size_t size() const { return times.size(); }
  double max_trace_drift() const;
  double min_eigenvalue() const;
  bool boundary_affected() const;
};

struct PropagationOptions {
  double psd_tol = 1e-7;
  double trace_fail = 1e-6;    // TraceDriftError above this
  double trace_report = 1e-9;  // warning above this
  int boundary_levels = 0;     // 0 disables boundary flagging
  double boundary_mass = 1e-6;
  kernels::Exec exec = kernels::Exec::parallel;
  /// rk only: land exactly on these times and record only them.
  std::vector<double> output_times;
};

/// Caches exp(dt S) per step length.
class ExpmPropagator {
 public:
  explicit ExpmPropagator(gksl::Superoperator superop);

  const gksl::Superoperator& superoperator() const { return superop_; }
  /// exp(t S), cached by exact t.
  const ComplexMatrix& step(double t);

 private:
  gksl::Superoperator superop_;
  std::map<double, ComplexMatrix> cache_;
};

/// n equally spaced points from t0 to t1 inclusive.
std::vector<double> uniform_grid(double t0, double t1, int points);

/// rho_t = exp(t S) vec(rho0) on the given ascending times (times[0] >= 0).
/// Near-uniform grids reuse a single exp(dt S).
Trajectory propagate_expm(const gksl::SystemModel& model, const gksl::DensityOperator& rho0,
                          std::span<const double> times, const PropagationOptions& options = {});

/// Independent initial states sharing one propagator; columns advance
/// together through kernels::advance.
std::vector<Trajectory> propagate_expm_batch(ExpmPropagator& propagator,
                                             std::span<const gksl::DensityOperator> initial,
                                             std::span<const double> times,
                                             const PropagationOptions& options = {});

/// Dormand-Prince 5(4) on the master equation with rtol = atol = rel_tol.
/// Accepted steps are hermitized; a step whose minimum eigenvalue falls
/// below -psd_tol is rejected and halved. Throws StiffnessError when the
/// step drops below 1e-12.
Trajectory propagate_rk(const gksl::SystemModel& model, const gksl::DensityOperator& rho0,
                        double t_end, double rel_tol, const PropagationOptions& options = {});

struct NamedObservable {
  std::string name;
  ComplexMatrix op;
};

struct ExpectationTable {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<bool> hermitian;
  std::vector<std::vector<Complex>> values;  // values[observable][time]

  const std::vector<Complex>& column(std::string_view name) const;
  std::vector<double> real_column(std::string_view name) const;
};

/// tr(A rho_t). Hermitian observables must come out real to 1e-10 ||A||.
ExpectationTable expectations(const Trajectory& traj, const std::vector<NamedObservable>& observables);

/// |d/dt tr(X rho_t) - tr(L(X) rho_t)| at interior samples, the derivative
/// taken by central differences. Entry i belongs to traj.times[i + 1].
std::vector<double> drift_residual(const Trajectory& traj, const gksl::SystemModel& model,
                                   const ComplexMatrix& x);

}  // namespace qds::dynamics
