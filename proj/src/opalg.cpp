#include "qds/opalg.hpp"

#include "qds/errors.hpp"
#include "lapack_bridge.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace qds::opalg {

void require_finite(const ComplexMatrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": matrix has non-finite entries");
  }
}

void require_square(const ComplexMatrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string(what) + ": expected a non-empty square matrix, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

double opnorm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() <= 128 && m.cols() <= 128) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(0);
  }
  return lapack::singular_values(m)(0);
}

double asymmetry(const ComplexMatrix& m) { return opnorm(m - m.adjoint()); }

ComplexMatrix hermitize(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

namespace {

// ||D||_2 <= ||D||_F and ||M||_2 >= ||M||_F / sqrt(n): the cheap test is
// sufficient; the exact operator norms are only computed in the grey zone.
bool hermitian_within(const ComplexMatrix& m, double rel_tol, double* raw_asym) {
  const ComplexMatrix d = m - m.adjoint();
  const double d_fro = d.norm();
  const double m_fro = m.norm();
  *raw_asym = d_fro;
  if (d_fro == 0.0) return true;
  const double n = static_cast<double>(m.rows());
  if (d_fro <= rel_tol * m_fro / std::sqrt(n)) return true;
  const double d_op = opnorm(d);
  *raw_asym = d_op;
  return d_op <= rel_tol * opnorm(m);
}

constexpr double kHermitianRelTol = 1e-10;

void require_hermitian(const ComplexMatrix& m, std::string_view what, double* raw_asym) {
  require_square(m, what);
  require_finite(m, what);
  if (!hermitian_within(m, kHermitianRelTol, raw_asym)) {
    throw ContractViolation(std::string(what) + ": matrix is not Hermitian (||M - M^dagger|| = " +
                            std::to_string(*raw_asym) + ")");
  }
  if (*raw_asym > 0.0) spdlog::debug("{}: hermitized, raw asymmetry {:.3e}", what, *raw_asym);
}

}  // namespace

double trace_norm(const ComplexMatrix& m) {
  require_square(m, "trace_norm");
  require_finite(m, "trace_norm");
  const double scale = m.norm();
  if ((m - m.adjoint()).norm() <= 1e-13 * scale) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().sum();
}

HermitianEigen eig_hermitian(const ComplexMatrix& m) {
  HermitianEigen out;
  require_hermitian(m, "eig_hermitian", &out.asymmetry);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(m));
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

RealVector eigvals_hermitian(const ComplexMatrix& m) {
  double asym = 0.0;
  require_hermitian(m, "eigvals_hermitian", &asym);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double default_gap_tol(const ComplexMatrix& m) { return 1e-8 * std::max(1.0, opnorm(m)); }

SpectrumClusters cluster_spectrum(const ComplexMatrix& m, std::optional<double> gap_tol) {
  const double tol = gap_tol ? *gap_tol : default_gap_tol(m);
  if (!(tol > 0.0)) throw InvalidInput("cluster_spectrum: gap_tol must be positive");
  const HermitianEigen eig = eig_hermitian(m);
  const Eigen::Index n = eig.values.size();

  SpectrumClusters out;
  out.gap_tol = tol;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    if (i == n || eig.values(i) - eig.values(i - 1) > tol) {
      const Eigen::Index count = i - start;
      const ComplexMatrix basis = eig.vectors.middleCols(start, count);
      out.levels.push_back(eig.values.segment(start, count).mean());
      out.bases.push_back(basis);
      out.projectors.push_back(projector_from_basis(basis));
      start = i;
    }
  }
  return out;
}

PsdResult psd_check(const ComplexMatrix& m, double tol) {
  const RealVector ev = eigvals_hermitian(m);
  return {ev(0) >= -tol, ev(0)};
}

ComplexMatrix projector_from_basis(const ComplexMatrix& basis) {
  return basis * basis.adjoint();
}

ComplexMatrix range_basis(const ComplexMatrix& psd, double threshold) {
  const HermitianEigen eig = eig_hermitian(psd);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) > threshold) keep.push_back(i);
  }
  ComplexMatrix basis(psd.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    basis.col(static_cast<Eigen::Index>(k)) = eig.vectors.col(keep[k]);
  }
  return basis;
}

int projector_rank(const ComplexMatrix& p) {
  const RealVector ev = eigvals_hermitian(hermitize(p));
  return static_cast<int>((ev.array() > 0.5).count());
}

double subspace_distance(const ComplexMatrix& p, const ComplexMatrix& q) {
  return opnorm(p - q);
}

ComplexMatrix intersect_projectors(const ComplexMatrix& p, const ComplexMatrix& q, double tol) {
  const ComplexMatrix pqp = hermitize(p * q * p);
  return projector_from_basis(range_basis(pqp, 1.0 - tol));
}

ComplexMatrix positive_part(const ComplexMatrix& m) {
  const HermitianEigen eig = eig_hermitian(m);
  const RealVector pos = eig.values.cwiseMax(0.0);
  return eig.vectors * pos.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

Complex hs_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

ComplexMatrix leading_projector(int dim, int levels) {
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < std::min(dim, levels); ++i) p(i, i) = 1.0;
  return p;
}

}  // namespace qds::opalg
