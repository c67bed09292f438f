#pragma once

// GKSL semigroup core: the adjoint generator acting on observables, the
// predual generator (master equation) acting on states, the vectorized
// superoperator, its null space and its spectral gap.

#include "qds/kernels.hpp"
#include "qds/opalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qds::gksl {

/// Hamiltonian plus coupling operators on a common Hilbert dimension.
class SystemModel {
 public:
  /// Validates: H Hermitian within 1e-10 (relative), all matrices dim x dim
  /// and finite. H is stored hermitized.
  SystemModel(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> couplings,
              std::string label = {});

  int dim() const { return dim_; }
  const ComplexMatrix& hamiltonian() const { return hamiltonian_; }
  const std::vector<ComplexMatrix>& couplings() const { return couplings_; }
  const std::string& label() const { return label_; }
  /// sum_k L_k^dagger L_k
  const ComplexMatrix& decay() const { return decay_; }

 private:
  int dim_;
  ComplexMatrix hamiltonian_;
  std::vector<ComplexMatrix> couplings_;
  std::string label_;
  ComplexMatrix decay_;
};

struct DensityTolerances {
  double hermitian = 1e-10;
  double psd = 1e-9;
  double trace = 1e-9;
};

/// Hermitian, positive semidefinite, unit-trace matrix.
class DensityOperator {
 public:
  /// Validates against `tol` and stores the hermitized matrix.
  static DensityOperator from_matrix(const ComplexMatrix& m, DensityTolerances tol = {});
  /// |psi><psi| / <psi|psi>
  static DensityOperator pure(const ComplexVector& psi);
  /// |n><n|
  static DensityOperator number_state(int dim, int n);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const ComplexMatrix& matrix() const { return matrix_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  DensityOperator(ComplexMatrix m, double min_eig) : matrix_(std::move(m)), min_eigenvalue_(min_eig) {}
  ComplexMatrix matrix_;
  double min_eigenvalue_ = 0.0;
};

/// L(X) = i[H,X] + sum_k (L_k^dagger X L_k - {L_k^dagger L_k, X}/2)
ComplexMatrix adjoint_generator(const SystemModel& model, const ComplexMatrix& x);

/// L_*(rho) = -i[H,rho] + sum_k (L_k rho L_k^dagger - {L_k^dagger L_k, rho}/2).
/// Linear, so any square matrix of the model's dimension is accepted.
ComplexMatrix predual_generator(const SystemModel& model, const ComplexMatrix& rho);
ComplexMatrix predual_generator(const SystemModel& model, const DensityOperator& rho);

/// Column-major vectorization.
ComplexVector vec(const ComplexMatrix& m);
ComplexMatrix unvec(const ComplexVector& v, int dim);

inline constexpr int kMaxSuperoperatorDim = 64;

/// dim^2 x dim^2 matrix of the predual generator on column-stacked operators.
/// Construction runs a 20-sample self-test against predual_generator.
class Superoperator {
 public:
  explicit Superoperator(const SystemModel& model, kernels::Exec exec = kernels::Exec::parallel);

  int dim() const { return dim_; }
  const ComplexMatrix& matrix() const { return matrix_; }
  /// Worst relative action mismatch seen by the construction self-test.
  double self_test_error() const { return self_test_error_; }
  ComplexMatrix apply(const ComplexMatrix& rho) const;

 private:
  int dim_;
  ComplexMatrix matrix_;
  double self_test_error_ = 0.0;
};

struct StationaryOptions {
  /// Singular values <= null_tol_rel * sigma_max span the null space.
  double null_tol_rel = 1e-8;
  /// Eigenvalues of the summed positive parts below this are zero.
  double support_threshold = 1e-8;
  /// Basis elements with more than this mass on the top boundary_levels
  /// number states are flagged as possible truncation artifacts.
  double boundary_mass_flag = 1e-6;
  int boundary_levels = 2;
};

struct StationarySet {
  /// Hermitian, Hilbert-Schmidt orthonormal basis of ker L_* restricted to
  /// Hermitian operators.
  std::vector<ComplexMatrix> operator_basis;
  ComplexMatrix support_projector;
  int support_rank = 0;
  double null_tol = 0.0;  // absolute singular-value threshold used
  double sigma_max = 0.0;
  std::vector<double> null_singular_values;
  /// Smallest singular value above the threshold (0 if none).
  double next_singular_value = 0.0;
  /// Normalized positive parts of basis elements that passed the residual
  /// check; empty means no density operator could be extracted.
  std::vector<DensityOperator> density_witnesses;
  std::vector<std::size_t> boundary_flagged;

  int dimension() const { return static_cast<int>(operator_basis.size()); }
  bool has_density() const { return !density_witnesses.empty(); }
};

StationarySet stationary_states(const Superoperator& superop, const SystemModel& model,
                                const StationaryOptions& options = {});
StationarySet stationary_states(const SystemModel& model, const StationaryOptions& options = {});

/// -max{Re lambda : Re lambda < -null_tol} over superoperator eigenvalues,
/// 0 if there is no decaying mode. Default null_tol is 1e-8 * sigma_max.
double spectral_gap(const Superoperator& superop, std::optional<double> null_tol = std::nullopt);
double spectral_gap(const SystemModel& model, std::optional<double> null_tol = std::nullopt);

/// Largest singular value by power iteration on S^dagger S.
double estimate_sigma_max(const ComplexMatrix& s, int iterations = 200);

/// Choi matrix sum_ij |i><j| (x) Phi(|i><j|) of a map given as a matrix on
/// column-major vec. Row index i*dim + k, column index j*dim + l.
ComplexMatrix choi_matrix(const ComplexMatrix& map, int dim);

}  // namespace qds::gksl
