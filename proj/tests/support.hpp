#pragma once

// Model builders and random-instance generators shared by the test suites.

#include "qds/fock.hpp"
#include "qds/gksl.hpp"
#include "qds/opalg.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace qds::testing {

inline ComplexMatrix identity(int dim) { return ComplexMatrix::Identity(dim, dim); }

/// Displaced oscillator: H = (a - alpha)^dagger (a - alpha), L = sqrt(kappa) (a - alpha).
inline gksl::SystemModel displaced_model(int dim, Complex alpha, double kappa) {
  const ComplexMatrix shifted = fock::annihilation(dim) - alpha * identity(dim);
  return gksl::SystemModel(shifted.adjoint() * shifted, {std::sqrt(kappa) * shifted}, "displaced");
}

/// (a - alpha)^dagger (a - alpha)
inline ComplexMatrix displaced_number(int dim, Complex alpha) {
  const ComplexMatrix shifted = fock::annihilation(dim) - alpha * identity(dim);
  return shifted.adjoint() * shifted;
}

/// Damped oscillator: H = N, L = a.
inline gksl::SystemModel damped_model(int dim) {
  return gksl::SystemModel(fock::number(dim), {fock::annihilation(dim)}, "damped");
}

/// Two-photon loss: H = 0, L = a^2 - alpha^2.
inline ComplexMatrix two_photon_coupling(int dim, Complex alpha) {
  const ComplexMatrix a = fock::annihilation(dim);
  return a * a - alpha * alpha * identity(dim);
}

inline gksl::SystemModel two_photon_model(int dim, Complex alpha) {
  return gksl::SystemModel(ComplexMatrix::Zero(dim, dim), {two_photon_coupling(dim, alpha)}, "two-photon");
}

/// Top-left block on the first dim - levels number states.
inline ComplexMatrix interior(const ComplexMatrix& m, int levels) {
  const auto n = m.rows() - levels;
  return m.topLeftCorner(n, n);
}

inline double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

inline ComplexVector random_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(g(rng), g(rng));
  return v / v.norm();
}

inline ComplexMatrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline ComplexMatrix random_hermitian(int dim, std::mt19937_64& rng) {
  return opalg::hermitize(random_matrix(dim, dim, rng));
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
inline ComplexMatrix random_unitary(int dim, std::mt19937_64& rng) {
  Eigen::HouseholderQR<ComplexMatrix> qr(random_matrix(dim, dim, rng));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR();
  for (int i = 0; i < dim; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
  return q;
}

/// G G^dagger / tr with G a dim x rank Ginibre matrix.
inline ComplexMatrix random_density_matrix(int dim, int rank, std::mt19937_64& rng) {
  const ComplexMatrix g = random_matrix(dim, rank, rng);
  const ComplexMatrix rho = g * g.adjoint();
  return opalg::hermitize(rho / rho.trace().real());
}

inline gksl::DensityOperator random_density(int dim, std::mt19937_64& rng) {
  return gksl::DensityOperator::from_matrix(random_density_matrix(dim, dim, rng));
}

/// Random Lyapunov-suite instance: Hermitian A with p0 = 0, a ground
/// cluster of rank 1..3 and 3..5 strictly increasing levels in total.
struct GroundInstance {
  ComplexMatrix a;
  ComplexMatrix projector;
  ComplexMatrix rho;
  int ground_rank = 0;
  double p1 = 0.0;
};

inline GroundInstance random_ground_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_dist(3, 6);
  const int dim = dim_dist(rng);
  const int clusters = std::uniform_int_distribution<int>(3, std::min(5, dim))(rng);
  const int ground = std::uniform_int_distribution<int>(1, std::min(3, dim - clusters + 1))(rng);
  std::vector<int> sizes(clusters, 1);
  sizes[0] = ground;
  int remaining = dim - ground - (clusters - 1);
  std::uniform_int_distribution<int> pick(1, clusters - 1);
  while (remaining-- > 0) ++sizes[pick(rng)];
  std::uniform_real_distribution<double> step(0.2, 2.0);
  RealVector diag(dim);
  double level = 0.0;
  int k = 0;
  double p1 = 0.0;
  for (int c = 0; c < clusters; ++c) {
    if (c > 0) level += step(rng);
    if (c == 1) p1 = level;
    for (int s = 0; s < sizes[c]; ++s) diag(k++) = level;
  }
  const ComplexMatrix u = random_unitary(dim, rng);
  GroundInstance inst;
  inst.a = opalg::hermitize(u * diag.cast<Complex>().asDiagonal() * u.adjoint());
  inst.projector = opalg::projector_from_basis(u.leftCols(ground));
  inst.ground_rank = ground;
  inst.p1 = p1;
  const int rank = std::uniform_int_distribution<int>(1, dim)(rng);
  inst.rho = random_density_matrix(dim, rank, rng);
  return inst;
}

}  // namespace qds::testing
