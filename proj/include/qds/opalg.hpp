#pragma once

// Dense complex-matrix kernel shared by every other module.

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

namespace qds {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

}  // namespace qds

namespace qds::opalg {

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& m, std::string_view what);

/// Throws InvalidInput unless m is square.
void require_square(const ComplexMatrix& m, std::string_view what);

/// Largest singular value.
double opnorm(const ComplexMatrix& m);

/// Operator norm of m - m^dagger.
double asymmetry(const ComplexMatrix& m);

/// (m + m^dagger) / 2
ComplexMatrix hermitize(const ComplexMatrix& m);

/// Sum of singular values. For Hermitian input this is the sum of
/// |eigenvalues|, which is the path taken whenever m is Hermitian to
/// rounding.
double trace_norm(const ComplexMatrix& m);

struct HermitianEigen {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // orthonormal columns, same order as values
  double asymmetry = 0.0; // raw ||M - M^dagger|| before hermitization
};

/// Eigendecomposition of a Hermitian matrix. The input must satisfy
/// ||M - M^dagger|| <= 1e-10 ||M||; it is hermitized before the solve.
HermitianEigen eig_hermitian(const ComplexMatrix& m);

/// Eigenvalues only, ascending. Same precondition as eig_hermitian.
RealVector eigvals_hermitian(const ComplexMatrix& m);

struct SpectrumClusters {
  std::vector<double> levels;               // strictly ascending
  std::vector<ComplexMatrix> projectors;    // orthogonal, summing to identity
  std::vector<ComplexMatrix> bases;         // orthonormal columns per cluster
  double gap_tol = 0.0;

  std::size_t size() const { return levels.size(); }
};

/// 1e-8 * max(1, ||M||)
double default_gap_tol(const ComplexMatrix& m);

/// Groups eigenvalues whose adjacent gap is <= gap_tol. Ties always merge,
/// so consecutive levels differ by more than gap_tol. A cluster's level is
/// the mean of its eigenvalues.
SpectrumClusters cluster_spectrum(const ComplexMatrix& m,
                                  std::optional<double> gap_tol = std::nullopt);

struct PsdResult {
  bool is_psd = false;
  double min_eigenvalue = 0.0;
};

PsdResult psd_check(const ComplexMatrix& m, double tol);

// ---- subspace helpers -----------------------------------------------------

/// Orthogonal projector onto the span of orthonormal columns.
ComplexMatrix projector_from_basis(const ComplexMatrix& basis);

/// Orthonormal basis of the eigenspace of a PSD matrix with eigenvalues
/// above threshold. Works for projectors (threshold 0.5) and for general
/// positive combinations.
ComplexMatrix range_basis(const ComplexMatrix& psd, double threshold);

/// Rank of an orthogonal projector (eigenvalues above 1/2).
int projector_rank(const ComplexMatrix& p);

/// ||P - Q|| in operator norm.
double subspace_distance(const ComplexMatrix& p, const ComplexMatrix& q);

/// Projector onto the intersection of range(P) and range(Q).
ComplexMatrix intersect_projectors(const ComplexMatrix& p, const ComplexMatrix& q,
                                   double tol = 1e-7);

/// Positive part of a Hermitian matrix.
ComplexMatrix positive_part(const ComplexMatrix& m);

/// Hilbert-Schmidt inner product tr(A^dagger B).
Complex hs_inner(const ComplexMatrix& a, const ComplexMatrix& b);

/// tr(A B) without forming the product.
Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Projector onto the first `levels` basis vectors.
ComplexMatrix leading_projector(int dim, int levels);

}  // namespace qds::opalg
