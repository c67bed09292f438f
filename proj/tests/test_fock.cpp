#include "qds/errors.hpp"
#include "qds/fock.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace qds;
using qds::testing::interior;
using qds::testing::max_abs;

TEST_CASE("annihilation at dim 2") {
  ComplexMatrix expected(2, 2);
  expected << 0.0, 1.0, 0.0, 0.0;
  CHECK(max_abs(fock::annihilation(2) - expected) == 0.0);
  CHECK_THROWS_AS(fock::annihilation(1), InvalidInput);
}

TEST_CASE("canonical commutator holds below the truncation") {
  const int dim = 8;
  const ComplexMatrix a = fock::annihilation(dim);
  const ComplexMatrix comm = a * fock::creation(dim) - fock::creation(dim) * a;
  CHECK(max_abs(interior(comm, 1) - ComplexMatrix::Identity(dim - 1, dim - 1)) < 1e-14);
  CHECK(comm(dim - 1, dim - 1).real() == doctest::Approx(1.0 - dim));
}

TEST_CASE("number operator eigenvector") {
  const int dim = 8;
  ComplexVector n3 = ComplexVector::Zero(dim);
  n3(3) = 1.0;
  CHECK((fock::number(dim) * n3 - 3.0 * n3).norm() < 1e-15);
  CHECK(max_abs(fock::creation(dim) * fock::annihilation(dim) - fock::number(dim)) < 1e-14);
}

TEST_CASE("coherent vectors") {
  const ComplexVector vac = fock::coherent_vector(10, 0.0);
  CHECK(std::abs(vac(0) - 1.0) < 1e-15);
  CHECK(vac.tail(9).norm() < 1e-15);

  const ComplexVector psi = fock::coherent_vector(40, 1.0);
  const double mean_n = (psi.adjoint() * fock::number(40) * psi)(0).real();
  CHECK(mean_n == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(fock::coherent_tail_mass(40, 2.0) < 1e-10);
}

TEST_CASE("coherent tail mass matches the Poisson partial sum") {
  const double x = 4.0;  // |alpha|^2
  double head = 0.0, term = std::exp(-x);
  for (int n = 0; n < 12; ++n) {
    head += term;
    term *= x / (n + 1);
  }
  CHECK(fock::coherent_tail_mass(12, 2.0) == doctest::Approx(1.0 - head).epsilon(1e-9));
}

TEST_CASE("coherent vector refuses a truncation that is too small") {
  try {
    fock::coherent_vector(6, 2.0);
    FAIL("expected TruncationTooSmall");
  } catch (const TruncationTooSmall& e) {
    CHECK(e.required_dim() == fock::required_dim(2.0, fock::kDefaultTailTol));
    CHECK(e.required_dim() > 6);
  }
}

TEST_CASE("cat vectors") {
  const auto zero = fock::cat_vectors(6, 0.0);
  CHECK(std::abs(zero.even(0) - 1.0) < 1e-15);
  CHECK(zero.odd_degenerate);

  const int dim = 40;
  const Complex alpha = 2.0;
  const auto cats = fock::cat_vectors(dim, alpha);
  const ComplexMatrix a = fock::annihilation(dim);
  CHECK((a * a * cats.even - alpha * alpha * cats.even).norm() < 1e-8);
  CHECK((a * a * cats.odd - alpha * alpha * cats.odd).norm() < 1e-8);
  CHECK(std::abs(cats.even.dot(cats.odd)) < 1e-12);
  CHECK(cats.even.norm() == doctest::Approx(1.0).epsilon(1e-12));

  const double x = std::norm(alpha);
  CHECK(cats.c0 * cats.c0 * std::cosh(x) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cats.c1 * cats.c1 * std::sinh(x) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cat vectors span the coherent pair") {
  const int dim = 40;
  const Complex alpha(1.2, 0.7);
  const auto cats = fock::cat_vectors(dim, alpha);
  ComplexMatrix basis(dim, 2);
  basis << cats.even, cats.odd;
  const ComplexMatrix p = opalg::projector_from_basis(basis);
  for (const Complex z : {alpha, -alpha}) {
    const ComplexVector v = fock::coherent_vector(dim, z);
    CHECK((p * v - v).norm() < 1e-10);
  }
}

TEST_CASE("quadratures") {
  const int dim = 40;
  const auto unit = fock::quadratures(dim);
  CHECK(opalg::asymmetry(unit.q) < 1e-14);
  CHECK(opalg::asymmetry(unit.p) < 1e-14);
  const ComplexMatrix comm = unit.q * unit.p - unit.p * unit.q;
  CHECK(max_abs(interior(comm, 1) - Complex(0, 2) * ComplexMatrix::Identity(dim - 1, dim - 1)) < 1e-12);

  const Complex alpha(1.0, 0.5);
  const ComplexVector psi = fock::coherent_vector(dim, alpha);
  CHECK((psi.adjoint() * unit.q * psi)(0).real() == doctest::Approx(2.0 * alpha.real()).epsilon(1e-9));
  CHECK((psi.adjoint() * unit.p * psi)(0).real() == doctest::Approx(2.0 * alpha.imag()).epsilon(1e-9));

  const auto sym = fock::quadratures(dim, fock::QuadratureConvention::symmetric);
  const ComplexMatrix comm_sym = sym.q * sym.p - sym.p * sym.q;
  CHECK(max_abs(interior(comm_sym, 1) - Complex(0, 1) * ComplexMatrix::Identity(dim - 1, dim - 1)) < 1e-12);
  CHECK(fock::quadrature_convention_from_string(fock::to_string(sym.convention)) == sym.convention);
  CHECK_THROWS_AS(fock::quadrature_convention_from_string("bogus"), InvalidInput);
}

TEST_CASE("top level mass") {
  ComplexVector psi = ComplexVector::Zero(5);
  psi(4) = 1.0;
  CHECK(fock::top_level_mass(psi, 2) == doctest::Approx(1.0));
  CHECK(fock::top_level_mass(fock::coherent_vector(40, 1.0), 2) < 1e-20);
}
