#include "qds/fock.hpp"

#include "qds/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace qds::fock {

void FockTruncation::validate() const {
  if (n_max < 1) throw InvalidInput("FockTruncation: n_max must be >= 1");
  if (!(tail_tol > 0.0)) throw InvalidInput("FockTruncation: tail_tol must be positive");
}

namespace {

void require_ladder_dim(int dim) {
  if (dim < 2) throw InvalidInput("Fock operators need dim >= 2, got " + std::to_string(dim));
}

}  // namespace

ComplexMatrix annihilation(int dim) {
  require_ladder_dim(dim);
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

ComplexMatrix creation(int dim) { return annihilation(dim).adjoint(); }

ComplexMatrix number(int dim) {
  require_ladder_dim(dim);
  ComplexMatrix n = ComplexMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

double coherent_tail_mass(int dim, Complex alpha) {
  const double x = std::norm(alpha);
  if (x == 0.0) return 0.0;
  if (dim <= 0) return 1.0;
  // log of the Poisson weight e^{-x} x^n / n!
  auto log_term = [x](int n) { return -x + n * std::log(x) - std::lgamma(n + 1.0); };
  double sum = 0.0;
  for (int n = dim;; ++n) {
    const double t = std::exp(log_term(n));
    sum += t;
    if (n > x && t <= 1e-18 * sum) break;
    if (n > dim + 100000) break;
  }
  return sum;
}

int required_dim(Complex alpha, double tail_tol) {
  int dim = 1;
  while (coherent_tail_mass(dim, alpha) > tail_tol) ++dim;
  return dim;
}

namespace {

void require_tail(int dim, Complex alpha, double tail_tol, const char* what) {
  if (!(tail_tol > 0.0)) throw InvalidInput(std::string(what) + ": tail_tol must be positive");
  const double tail = coherent_tail_mass(dim, alpha);
  if (tail > tail_tol) {
    const int need = required_dim(alpha, tail_tol);
    std::ostringstream msg;
    msg << what << ": tail mass " << tail << " exceeds " << tail_tol << " at dim " << dim
        << "; need dim >= " << need;
    throw TruncationTooSmall(msg.str(), need);
  }
}

// alpha^n / sqrt(n!) by recurrence, times `prefactor`.
ComplexVector scaled_series(int dim, Complex alpha, double prefactor) {
  ComplexVector v(dim);
  Complex c = prefactor;
  for (int n = 0; n < dim; ++n) {
    if (n > 0) c *= alpha / std::sqrt(static_cast<double>(n));
    v(n) = c;
  }
  return v;
}

}  // namespace

ComplexVector coherent_vector(int dim, Complex alpha, double tail_tol) {
  if (dim < 1) throw InvalidInput("coherent_vector: dim must be >= 1");
  require_tail(dim, alpha, tail_tol, "coherent_vector");
  ComplexVector v = scaled_series(dim, alpha, std::exp(-0.5 * std::norm(alpha)));
  v /= v.norm();
  return v;
}

CatPair cat_vectors(int dim, Complex alpha, double tail_tol) {
  if (dim < 2) throw InvalidInput("cat_vectors: dim must be >= 2");
  require_tail(dim, alpha, tail_tol, "cat_vectors");
  CatPair out;
  const double x = std::norm(alpha);
  out.c0 = 1.0 / std::sqrt(std::cosh(x));
  out.even = scaled_series(dim, alpha, out.c0);
  for (int n = 1; n < dim; n += 2) out.even(n) = 0.0;
  out.even /= out.even.norm();

  if (x == 0.0) {
    out.odd_degenerate = true;
    out.odd = ComplexVector::Zero(dim);
    return out;
  }
  out.c1 = 1.0 / std::sqrt(std::sinh(x));
  out.odd = scaled_series(dim, alpha, out.c1);
  for (int n = 0; n < dim; n += 2) out.odd(n) = 0.0;
  out.odd /= out.odd.norm();
  return out;
}

std::string_view to_string(QuadratureConvention c) {
  return c == QuadratureConvention::unit ? "unit" : "symmetric";
}

QuadratureConvention quadrature_convention_from_string(std::string_view s) {
  if (s == "unit") return QuadratureConvention::unit;
  if (s == "symmetric") return QuadratureConvention::symmetric;
  throw InvalidInput("unknown quadrature convention '" + std::string(s) +
                     "' (expected 'unit' or 'symmetric')");
}

Quadratures quadratures(int dim, QuadratureConvention convention) {
  const ComplexMatrix a = annihilation(dim);
  const ComplexMatrix ad = a.adjoint();
  const double s = convention == QuadratureConvention::unit ? 1.0 : 1.0 / std::sqrt(2.0);
  return {s * (a + ad), Complex(0.0, -s) * (a - ad), convention};
}

double top_level_mass(const ComplexMatrix& rho, int levels) {
  const int dim = static_cast<int>(rho.rows());
  double mass = 0.0;
  for (int i = std::max(0, dim - levels); i < dim; ++i) mass += std::abs(rho(i, i));
  return mass;
}

double top_level_mass(const ComplexVector& psi, int levels) {
  const int dim = static_cast<int>(psi.size());
  double mass = 0.0;
  for (int i = std::max(0, dim - levels); i < dim; ++i) mass += std::norm(psi(i));
  return mass;
}

}  // namespace qds::fock
