#pragma once

// Lyapunov-operator certificates: ground sets, the strict-minimum test,
// stability classification and distance brackets to the stationary set.

#include "qds/gksl.hpp"
#include "qds/kernels.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qds::lyapunov {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// Lowest spectral cluster of a Hermitian A and the gap above it.
struct GroundSet {
  ComplexMatrix projector;  // P0
  int rank = 0;
  double p0 = 0.0;
  double p1 = 0.0;
  double kappa = 0.0;  // (p1 - p0) / 4
  std::vector<double> levels;
  double gap_tol = 0.0;
};

/// Throws DegenerateGroundSet when A has a single spectral cluster.
GroundSet ground_set(const ComplexMatrix& a, std::optional<double> gap_tol = std::nullopt);

struct StrictMinimumReport {
  bool holds = false;
  int stationary_rank = 0;
  int ground_rank = 0;
  double subspace_distance = 0.0;  // ||P* - P0||
  double tolerance = 1e-7;
};

/// Stationary support projector equal to the ground projector of A.
StrictMinimumReport strict_minimum_check(const gksl::StationarySet& stationary, const GroundSet& ground,
                                         double tolerance = 1e-7);
StrictMinimumReport strict_minimum_check(const gksl::SystemModel& model, const ComplexMatrix& a,
                                         std::optional<double> gap_tol = std::nullopt,
                                         const gksl::StationaryOptions& options = {});

enum class Verdict { lyapunov, global_asymptotic, global_exponential, inconclusive };

std::string_view to_string(Verdict v);

struct CertifyOptions {
  std::optional<double> gap_tol;
  gksl::StationaryOptions stationary;
  /// PSD tests accept eigenvalues >= -psd_tol_rel * max(1, ||L(V)||).
  double psd_tol_rel = 1e-9;
  /// Eigenvalues of -L(V) below kernel_tol_rel * max(1, ||L(V)||) span its kernel.
  double kernel_tol_rel = 1e-8;
  /// Feasibility of -L(V) - gamma (V - p0) during the gamma search accepts
  /// eigenvalues >= -gamma_tol_rel * max(1, ||L(V)||), a rounding-level slack.
  double gamma_tol_rel = 1e-12;
  double inclusion_tol = 1e-7;
  /// Operator inequalities are tested on the first dim - boundary_levels
  /// number states, where truncated ladder products are exact.
  int boundary_levels = 0;
  int bisection_steps = 40;
};

struct StabilityReport {
  Verdict verdict = Verdict::inconclusive;
  bool lyapunov_holds = false;
  bool asymptotic_holds = false;
  bool exponential_holds = false;
  double gamma = 0.0;
  double zeta = 0.0;  // gamma * p0, the unshifted constant
  double p0 = 0.0;
  double p1 = 0.0;
  double min_eig_neg_lv = 0.0;  // smallest eigenvalue of -L(V) on the tested block
  double psd_tol = 0.0;
  double gamma_tol = 0.0;
  int kernel_dimension = 0;
  double kernel_inclusion = 0.0;  // ||(1 - P0) K||
  StrictMinimumReport strict_minimum;
  int tested_dim = 0;
  int boundary_levels = 0;
  std::vector<std::string> caveats;
};

/// Sufficient-condition certificates decided at operator level.
StabilityReport classify_stability(const gksl::SystemModel& model, const ComplexMatrix& v,
                                   const CertifyOptions& options = {},
                                   const gksl::StationarySet* stationary = nullptr);

struct DistanceBracket {
  double lower = 0.0;
  double upper = 0.0;
  double ground_bound = 0.0;       // sqrt((tr(A rho) - p0) / kappa)
  std::optional<double> projection_bound;  // ||rho - P rho P / tr(P rho P)||_1
  std::string lower_method = "ground-projector witness";
  std::string upper_method;
};

/// Bounds on min ||rho - sigma||_1 over states sigma supported on P0.
DistanceBracket distance_bracket(const ComplexMatrix& rho, const GroundSet& ground, const ComplexMatrix& a);

struct SearchBudget {
  int starts = 32;
  int evals_per_start = 300;
  int polish_evals = 4000;
  std::uint64_t seed = kDefaultSeed;
};

/// min ||rho - sigma||_1 over density operators supported on range(P0) by
/// Nelder-Mead over a Cholesky parameterization. rank(P0) must be 1..3.
double brute_force_distance(const ComplexMatrix& rho, const ComplexMatrix& p0, const SearchBudget& budget = {});

/// Independent instances; instance i uses seed budget.seed + i.
std::vector<double> brute_force_distance_batch(std::span<const ComplexMatrix> rhos,
                                               std::span<const ComplexMatrix> projectors,
                                               const SearchBudget& budget = {},
                                               kernels::Exec exec = kernels::Exec::parallel);

}  // namespace qds::lyapunov
