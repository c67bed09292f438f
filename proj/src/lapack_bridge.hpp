#pragma once

// Thin wrappers over LAPACKE for the dim^2 x dim^2 superoperator
// decompositions, where Eigen's native solvers are too slow.

#include "qds/opalg.hpp"

namespace qds::lapack {

/// Descending singular values (zgesdd, no vectors).
RealVector singular_values(const ComplexMatrix& m);

struct Svd {
  ComplexMatrix u;
  RealVector s;  // descending
  ComplexMatrix v;  // right singular vectors as columns (not V^dagger)
};

/// Thin SVD of a square matrix (zgesdd).
Svd svd(const ComplexMatrix& m);

/// Eigenvalues of a general complex matrix (zgeev, no vectors).
ComplexVector eigenvalues(const ComplexMatrix& m);

}  // namespace qds::lapack
