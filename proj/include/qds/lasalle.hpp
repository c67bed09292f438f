#pragma once

// Invariance-principle diagnostics: semi-norm convergence probes, the
// support of the set where L(V) vanishes, forward-invariant supports and
// the resulting convergence verdict.

#include "qds/dynamics.hpp"
#include "qds/fock.hpp"
#include "qds/gksl.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qds::lasalle {

/// Named Hermitian test observables.
class ObservableDictionary {
 public:
  /// Throws ContractViolation for a non-Hermitian entry, InvalidInput for
  /// empty input or mixed dimensions.
  explicit ObservableDictionary(std::vector<dynamics::NamedObservable> items);

  const std::vector<dynamics::NamedObservable>& items() const { return items_; }
  int dim() const { return dim_; }
  /// True when the entries span all Hermitian dim x dim matrices.
  bool complete() const { return complete_; }
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<dynamics::NamedObservable> items_;
  int dim_ = 0;
  bool complete_ = false;
};

/// Hilbert-Schmidt orthonormal Hermitian basis of dim x dim matrices.
std::vector<dynamics::NamedObservable> hermitian_basis(int dim);

/// {1, q, p, N, N^2, V}, plus a complete Hermitian basis when dim <= 8.
ObservableDictionary default_dictionary(int dim, const ComplexMatrix& v,
                                        fock::QuadratureConvention convention = fock::QuadratureConvention::unit);

struct SeminormTable {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[observable][time] = |tr((rho_t - sigma) A)|
  std::vector<double> max_series;           // max over the dictionary per time
};

SeminormTable seminorm_series(const dynamics::Trajectory& traj, const ObservableDictionary& dict,
                              const gksl::DensityOperator& sigma);
/// Reference state varying along its own trajectory on the same grid.
SeminormTable seminorm_series(const dynamics::Trajectory& traj, const ObservableDictionary& dict,
                              const dynamics::Trajectory& sigma);

struct LaSalleOptions {
  double psd_tol_rel = 1e-9;
  double kernel_tol_rel = 1e-8;
  /// Tests are restricted to the first dim - boundary_levels number states.
  int boundary_levels = 0;
  double leak_threshold = 1e-8;
  double inclusion_tol = 1e-7;
  int probe_states = 3;
  double probe_time = 1.0;
  double probe_tol = 1e-6;
  std::uint64_t seed = 0x5EED;
  gksl::StationaryOptions stationary;
};

/// Projector onto ker L(V). Requires -L(V) PSD (ContractViolation otherwise).
ComplexMatrix e_set_support(const gksl::SystemModel& model, const ComplexMatrix& v, const LaSalleOptions& options = {});

struct InvariantSupport {
  ComplexMatrix projector;
  int rank = 0;
  int iterations = 0;
  /// Worst population found outside the support after propagating random
  /// states supported on it for probe_time.
  double probe_leak = 0.0;
  bool probe_passed = true;
};

/// Largest subspace of range(S0) that no coupling and no effective
/// Hamiltonian term maps out of.
InvariantSupport invariant_support(const gksl::SystemModel& model, const ComplexMatrix& s0,
                                   const LaSalleOptions& options = {});

struct InvarianceVerdict {
  ComplexMatrix e_support;
  ComplexMatrix stationary_in_e;
  ComplexMatrix forward_invariant;
  int e_rank = 0;
  int stationary_in_e_rank = 0;
  int forward_invariant_rank = 0;
  /// Every operator supported on the forward-invariant support is stationary.
  bool forward_support_stationary = false;
  double probe_leak = 0.0;
  bool corollary2_applies = false;
  std::vector<std::string> caveats;
};

InvarianceVerdict corollary2_verdict(const gksl::SystemModel& model, const ComplexMatrix& v,
                                     const LaSalleOptions& options = {},
                                     const gksl::StationarySet* stationary = nullptr);

struct PositiveLimitEstimate {
  std::vector<gksl::DensityOperator> representatives;
  std::vector<double> generator_residuals;  // ||L_*(rep)||_1
  std::size_t tail_samples = 0;
  double radius = 1e-3;
  std::string label = "diagnostic, not certificate";
};

/// Clusters the final tail_fraction of a trajectory at trace-norm radius.
PositiveLimitEstimate positive_limit_estimate(const dynamics::Trajectory& traj, const gksl::SystemModel& model,
                                              double tail_fraction = 0.1, double radius = 1e-3);

}  // namespace qds::lasalle
