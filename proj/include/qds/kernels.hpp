#pragma once

// Data-parallel inner loops. Each kernel has a serial reference path that
// the tests and benchmarks compare against the OpenMP path.

#include "qds/opalg.hpp"

#include <vector>

namespace qds::kernels {

enum class Exec { serial, parallel };

/// Matrix of rho -> -i[H,rho] + sum_k (L_k rho L_k^dagger - {L_k^dagger L_k, rho}/2)
/// acting on column-major vec(rho).
///
/// serial:   textbook Kronecker form  -i(1 x H) + i(H^T x 1) + sum conj(L) x L - ...
/// parallel: entrywise S[(i,j),(k,l)] = d_jl G_ik + d_ik conj(G_jl) + sum_m L_ik conj(L_jl)
///           with G = -iH - K/2, filled column by column under OpenMP.
ComplexMatrix assemble_superoperator(const ComplexMatrix& hamiltonian,
                                     const std::vector<ComplexMatrix>& couplings, Exec exec);

/// step * columns. serial is a plain per-column loop; parallel splits the
/// rows of `step` across OpenMP threads, each doing one block product.
ComplexMatrix advance(const ComplexMatrix& step, const ComplexMatrix& columns, Exec exec);

/// Number of OpenMP threads the parallel paths will use.
int max_threads();

}  // namespace qds::kernels
