#include "lapack_bridge.hpp"

#include "qds/errors.hpp"

#include <lapacke.h>

#include <string>

namespace qds::lapack {

namespace {

lapack_complex_double* as_lapack(Complex* p) { return reinterpret_cast<lapack_complex_double*>(p); }

void check(lapack_int info, const char* routine) {
  if (info != 0) {
    throw Error(std::string(routine) + " failed with info = " + std::to_string(info));
  }
}

}  // namespace

RealVector singular_values(const ComplexMatrix& m) {
  ComplexMatrix work = m;
  const auto rows = static_cast<lapack_int>(m.rows());
  const auto cols = static_cast<lapack_int>(m.cols());
  RealVector s(std::min(m.rows(), m.cols()));
  check(LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, as_lapack(work.data()), rows, s.data(),
                       nullptr, 1, nullptr, 1),
        "zgesdd");
  return s;
}

Svd svd(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("lapack::svd: square input expected");
  ComplexMatrix work = m;
  const auto n = static_cast<lapack_int>(m.rows());
  Svd out;
  out.s.resize(n);
  out.u.resize(n, n);
  ComplexMatrix vt(n, n);
  check(LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', n, n, as_lapack(work.data()), n, out.s.data(),
                       as_lapack(out.u.data()), n, as_lapack(vt.data()), n),
        "zgesdd");
  out.v = vt.adjoint();
  return out;
}

ComplexVector eigenvalues(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("lapack::eigenvalues: square input expected");
  ComplexMatrix work = m;
  const auto n = static_cast<lapack_int>(m.rows());
  ComplexVector w(n);
  check(LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, as_lapack(work.data()), n, as_lapack(w.data()),
                      nullptr, 1, nullptr, 1),
        "zgeev");
  return w;
}

}  // namespace qds::lapack
