#pragma once

// Truncated single-mode Fock space: ladder operators, quadratures and the
// coherent / cat vectors used by the displaced-oscillator and two-photon
// loss models.

#include "qds/opalg.hpp"

#include <string_view>

namespace qds::fock {

inline constexpr double kDefaultTailTol = 1e-10;

/// Number states |0>..|n_max>; dim() = n_max + 1.
struct FockTruncation {
  int n_max = 1;
  double tail_tol = kDefaultTailTol;

  int dim() const { return n_max + 1; }
  void validate() const;
};

/// a|n> = sqrt(n)|n-1>. Throws InvalidInput for dim < 2.
ComplexMatrix annihilation(int dim);
ComplexMatrix creation(int dim);
/// diag(0, 1, ..., dim-1)
ComplexMatrix number(int dim);

/// Poisson tail sum_{n >= dim} e^{-|alpha|^2} |alpha|^{2n} / n!.
double coherent_tail_mass(int dim, Complex alpha);

/// Smallest dim whose coherent tail mass is <= tail_tol.
int required_dim(Complex alpha, double tail_tol);

/// Truncated, renormalized coherent vector. Throws TruncationTooSmall when
/// the discarded tail exceeds tail_tol.
ComplexVector coherent_vector(int dim, Complex alpha, double tail_tol = kDefaultTailTol);

/// Even/odd superpositions of |alpha> and |-alpha>, spanning the kernel of
/// a^2 - alpha^2. c0 and c1 are the number-basis prefactors of the even and
/// odd series, fixed by |c0|^2 cosh|alpha|^2 = 1 and |c1|^2 sinh|alpha|^2 = 1.
struct CatPair {
  ComplexVector even;
  ComplexVector odd;      // zero vector when odd_degenerate
  bool odd_degenerate = false;
  double c0 = 0.0;
  double c1 = 0.0;
};

CatPair cat_vectors(int dim, Complex alpha, double tail_tol = kDefaultTailTol);

/// unit:      q = a + a^dagger,           p = -i(a - a^dagger),  [q,p] = 2i
/// symmetric: q = (a + a^dagger)/sqrt 2,  p = -i(a - a^dagger)/sqrt 2, [q,p] = i
enum class QuadratureConvention { unit, symmetric };

std::string_view to_string(QuadratureConvention c);
QuadratureConvention quadrature_convention_from_string(std::string_view s);

struct Quadratures {
  ComplexMatrix q;
  ComplexMatrix p;
  QuadratureConvention convention = QuadratureConvention::unit;
};

Quadratures quadratures(int dim, QuadratureConvention convention = QuadratureConvention::unit);

/// Population on the top `levels` number states. Identities that hold in the
/// untruncated space are only trusted when this is negligible.
double top_level_mass(const ComplexMatrix& rho, int levels = 2);
double top_level_mass(const ComplexVector& psi, int levels = 2);

}  // namespace qds::fock
