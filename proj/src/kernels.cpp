#include "qds/kernels.hpp"

#include "qds/errors.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <omp.h>

namespace qds::kernels {

namespace {

ComplexMatrix assemble_serial(const ComplexMatrix& h, const std::vector<ComplexMatrix>& couplings) {
  const Eigen::Index d = h.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const Complex i(0.0, 1.0);
  ComplexMatrix s = -i * Eigen::kroneckerProduct(id, h).eval() +
                    i * Eigen::kroneckerProduct(h.transpose(), id).eval();
  for (const auto& l : couplings) {
    const ComplexMatrix ll = l.adjoint() * l;
    s += Eigen::kroneckerProduct(l.conjugate(), l).eval();
    s -= 0.5 * Eigen::kroneckerProduct(id, ll).eval();
    s -= 0.5 * Eigen::kroneckerProduct(ll.transpose(), id).eval();
  }
  return s;
}

ComplexMatrix assemble_parallel(const ComplexMatrix& h, const std::vector<ComplexMatrix>& couplings) {
  const Eigen::Index d = h.rows();
  ComplexMatrix g = Complex(0.0, -1.0) * h;
  for (const auto& l : couplings) g -= 0.5 * (l.adjoint() * l);
  const ComplexMatrix gc = g.conjugate();
  std::vector<ComplexMatrix> lc;
  lc.reserve(couplings.size());
  for (const auto& l : couplings) lc.push_back(l.conjugate());

  ComplexMatrix s(d * d, d * d);
  Complex* out = s.data();
  const Eigen::Index n = d * d;
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index l = 0; l < d; ++l) {
    for (Eigen::Index k = 0; k < d; ++k) {
      Complex* column = out + (k + l * d) * n;
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) {
          Complex v = 0.0;
          if (j == l) v += g(i, k);
          if (i == k) v += gc(j, l);
          for (std::size_t m = 0; m < couplings.size(); ++m) v += couplings[m](i, k) * lc[m](j, l);
          column[i + j * d] = v;
        }
      }
    }
  }
  return s;
}

}  // namespace

ComplexMatrix assemble_superoperator(const ComplexMatrix& hamiltonian,
                                     const std::vector<ComplexMatrix>& couplings, Exec exec) {
  return exec == Exec::serial ? assemble_serial(hamiltonian, couplings)
                              : assemble_parallel(hamiltonian, couplings);
}

ComplexMatrix advance(const ComplexMatrix& step, const ComplexMatrix& columns, Exec exec) {
  if (step.cols() != columns.rows()) throw InvalidInput("advance: dimension mismatch");
  const Eigen::Index rows = step.rows();
  ComplexMatrix out(rows, columns.cols());
  if (exec == Exec::serial) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        Complex acc = 0.0;
        for (Eigen::Index k = 0; k < step.cols(); ++k) acc += step(r, k) * columns(k, c);
        out(r, c) = acc;
      }
    }
    return out;
  }
#pragma omp parallel
  {
    const Eigen::Index threads = omp_get_num_threads();
    const Eigen::Index t = omp_get_thread_num();
    const Eigen::Index chunk = (rows + threads - 1) / threads;
    const Eigen::Index begin = std::min(rows, t * chunk);
    const Eigen::Index count = std::min(rows, begin + chunk) - begin;
    if (count > 0) out.middleRows(begin, count).noalias() = step.middleRows(begin, count) * columns;
  }
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace qds::kernels
