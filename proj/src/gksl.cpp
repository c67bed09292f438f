#include "qds/gksl.hpp"

#include "qds/errors.hpp"
#include "qds/fock.hpp"
#include "lapack_bridge.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace qds::gksl {

namespace {

void require_dim(const ComplexMatrix& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw InvalidInput(std::string(what) + ": expected " + std::to_string(dim) + "x" +
                       std::to_string(dim) + ", got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
}

ComplexMatrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix m(dim, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
  ComplexMatrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

}  // namespace

SystemModel::SystemModel(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> couplings,
                         std::string label)
    : dim_(static_cast<int>(hamiltonian.rows())),
      couplings_(std::move(couplings)),
      label_(std::move(label)) {
  opalg::require_square(hamiltonian, "SystemModel hamiltonian");
  opalg::require_finite(hamiltonian, "SystemModel hamiltonian");
  const double scale = std::max(1.0, hamiltonian.norm());
  if ((hamiltonian - hamiltonian.adjoint()).norm() > 1e-10 * scale) {
    throw ContractViolation("SystemModel: Hamiltonian is not Hermitian");
  }
  hamiltonian_ = opalg::hermitize(hamiltonian);
  decay_ = ComplexMatrix::Zero(dim_, dim_);
  for (const auto& l : couplings_) {
    require_dim(l, dim_, "SystemModel coupling");
    opalg::require_finite(l, "SystemModel coupling");
    decay_ += l.adjoint() * l;
  }
}

DensityOperator DensityOperator::from_matrix(const ComplexMatrix& m, DensityTolerances tol) {
  opalg::require_square(m, "DensityOperator");
  opalg::require_finite(m, "DensityOperator");
  const double asym = (m - m.adjoint()).norm();
  if (asym > tol.hermitian * std::max(1.0, m.norm())) {
    throw ContractViolation("DensityOperator: not Hermitian (asymmetry " + std::to_string(asym) + ")");
  }
  ComplexMatrix h = opalg::hermitize(m);
  const double tr = h.trace().real();
  if (std::abs(tr - 1.0) > tol.trace) {
    throw ContractViolation("DensityOperator: trace " + std::to_string(tr) + " differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues()(0);
  if (min_eig < -tol.psd) {
    throw ContractViolation("DensityOperator: negative eigenvalue " + std::to_string(min_eig));
  }
  return DensityOperator(std::move(h), min_eig);
}

DensityOperator DensityOperator::pure(const ComplexVector& psi) {
  const double n2 = psi.squaredNorm();
  if (!(n2 > 0.0) || !psi.allFinite()) throw InvalidInput("DensityOperator::pure: zero or non-finite vector");
  return DensityOperator((psi * psi.adjoint()) / n2, 0.0);
}

DensityOperator DensityOperator::number_state(int dim, int n) {
  if (n < 0 || n >= dim) throw InvalidInput("number_state: level outside the truncation");
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(n, n) = 1.0;
  return DensityOperator(std::move(m), 0.0);
}

ComplexMatrix adjoint_generator(const SystemModel& model, const ComplexMatrix& x) {
  require_dim(x, model.dim(), "adjoint_generator");
  const ComplexMatrix& h = model.hamiltonian();
  ComplexMatrix out = Complex(0.0, 1.0) * (h * x - x * h);
  for (const auto& l : model.couplings()) out.noalias() += l.adjoint() * x * l;
  out -= 0.5 * (model.decay() * x + x * model.decay());
  return out;
}

ComplexMatrix predual_generator(const SystemModel& model, const ComplexMatrix& rho) {
  require_dim(rho, model.dim(), "predual_generator");
  const ComplexMatrix& h = model.hamiltonian();
  ComplexMatrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
  for (const auto& l : model.couplings()) out.noalias() += l * rho * l.adjoint();
  out -= 0.5 * (model.decay() * rho + rho * model.decay());
  return out;
}

ComplexMatrix predual_generator(const SystemModel& model, const DensityOperator& rho) {
  return predual_generator(model, rho.matrix());
}

ComplexVector vec(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

ComplexMatrix unvec(const ComplexVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) throw InvalidInput("unvec: size mismatch");
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

Superoperator::Superoperator(const SystemModel& model, kernels::Exec exec) : dim_(model.dim()) {
  if (dim_ > kMaxSuperoperatorDim) {
    throw ResourceLimit("superoperator: dim " + std::to_string(dim_) + " exceeds the cap of " +
                        std::to_string(kMaxSuperoperatorDim));
  }
  matrix_ = kernels::assemble_superoperator(model.hamiltonian(), model.couplings(), exec);

  double scale = 1.0 + model.hamiltonian().norm() + model.decay().norm();
  for (const auto& l : model.couplings()) scale += l.squaredNorm();
  std::mt19937_64 rng(0x5EED);
  for (int sample = 0; sample < 20; ++sample) {
    const ComplexMatrix rho = random_density(dim_, rng);
    const ComplexVector direct = vec(predual_generator(model, rho));
    const double err = (matrix_ * vec(rho) - direct).norm() / (scale * rho.norm());
    self_test_error_ = std::max(self_test_error_, err);
  }
  if (self_test_error_ > 1e-12) {
    throw Error("superoperator self-test failed: relative mismatch " + std::to_string(self_test_error_));
  }
}

ComplexMatrix Superoperator::apply(const ComplexMatrix& rho) const {
  require_dim(rho, dim_, "Superoperator::apply");
  return unvec(matrix_ * vec(rho), dim_);
}

namespace {

Eigen::VectorXd real_stack(const ComplexMatrix& h) {
  Eigen::VectorXd r(2 * h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    r(i) = h.data()[i].real();
    r(h.size() + i) = h.data()[i].imag();
  }
  return r;
}

ComplexMatrix real_unstack(const Eigen::VectorXd& r, int dim) {
  ComplexMatrix h(dim, dim);
  const Eigen::Index n = h.size();
  for (Eigen::Index i = 0; i < n; ++i) h.data()[i] = Complex(r(i), r(n + i));
  return opalg::hermitize(h);
}

}  // namespace

StationarySet stationary_states(const Superoperator& superop, const SystemModel& model,
                                const StationaryOptions& options) {
  const int dim = superop.dim();
  StationarySet out;
  const lapack::Svd svd = lapack::svd(superop.matrix());
  const Eigen::Index n = svd.s.size();
  out.sigma_max = svd.s(0);
  out.null_tol = options.null_tol_rel * out.sigma_max;

  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (svd.s(i) <= out.null_tol) {
      null_cols.push_back(i);
      out.null_singular_values.push_back(svd.s(i));
    } else {
      out.next_singular_value = svd.s(i);  // descending: last one kept is the smallest
    }
  }
  const auto k = static_cast<Eigen::Index>(null_cols.size());
  if (k == 0) {
    spdlog::warn("stationary_states: empty null space for '{}'", model.label());
    out.support_projector = ComplexMatrix::Zero(dim, dim);
    return out;
  }

  // Hermitian and anti-Hermitian parts of each null vector span the real
  // space of Hermitian null elements; re-orthogonalize in real coordinates.
  Eigen::MatrixXd stacked(2 * static_cast<Eigen::Index>(dim) * dim, 2 * k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const ComplexMatrix b = unvec(svd.v.col(null_cols[c]), dim);
    stacked.col(2 * c) = real_stack(0.5 * (b + b.adjoint()));
    stacked.col(2 * c + 1) = real_stack(Complex(0.0, -0.5) * (b - b.adjoint()));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> rsvd(stacked, Eigen::ComputeThinU);
  const Eigen::VectorXd& rs = rsvd.singularValues();
  Eigen::Index keep = 0;
  while (keep < std::min<Eigen::Index>(k, rs.size()) && rs(keep) > 1e-8 * rs(0)) ++keep;
  if (keep != k) {
    spdlog::warn("stationary_states: Hermitian basis has rank {} for a {}-dimensional null space", keep, k);
  }

  ComplexMatrix abs_sum = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index c = 0; c < keep; ++c) {
    ComplexMatrix b = real_unstack(rsvd.matrixU().col(c), dim);
    b /= b.norm();
    const ComplexMatrix pos = opalg::positive_part(b);
    const ComplexMatrix neg = opalg::positive_part(-b);
    abs_sum += pos + neg;
    if (options.boundary_levels > 0 &&
        fock::top_level_mass(ComplexMatrix(pos + neg), options.boundary_levels) > options.boundary_mass_flag) {
      out.boundary_flagged.push_back(out.operator_basis.size());
    }
    out.operator_basis.push_back(std::move(b));

    for (const ComplexMatrix* part : {&pos, &neg}) {
      const double tr = part->trace().real();
      if (tr <= 1e-8) continue;
      const ComplexMatrix rho = *part / tr;
      const double residual = opalg::trace_norm(predual_generator(model, rho));
      const double accept = std::max(1e-6, 10.0 * std::sqrt(static_cast<double>(dim)) * out.null_tol);
      if (residual > accept) continue;
      const bool duplicate = std::any_of(out.density_witnesses.begin(), out.density_witnesses.end(),
                                         [&](const DensityOperator& w) {
                                           return opalg::trace_norm(w.matrix() - rho) < 1e-6;
                                         });
      if (!duplicate) out.density_witnesses.push_back(DensityOperator::from_matrix(rho, {1e-10, 1e-9, 1e-8}));
    }
  }
  const ComplexMatrix basis = opalg::range_basis(opalg::hermitize(abs_sum), options.support_threshold);
  out.support_projector = opalg::projector_from_basis(basis);
  out.support_rank = static_cast<int>(basis.cols());
  if (out.density_witnesses.empty()) {
    spdlog::warn("stationary_states: no density operator found in the null space of '{}'", model.label());
  }
  return out;
}

StationarySet stationary_states(const SystemModel& model, const StationaryOptions& options) {
  return stationary_states(Superoperator(model), model, options);
}

double estimate_sigma_max(const ComplexMatrix& s, int iterations) {
  if (s.size() == 0) return 0.0;
  ComplexVector v = ComplexVector::Ones(s.cols()) / std::sqrt(static_cast<double>(s.cols()));
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    ComplexVector w = s.adjoint() * (s * v);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    sigma = std::sqrt(nrm);
    v = w / nrm;
  }
  return sigma;
}

double spectral_gap(const Superoperator& superop, std::optional<double> null_tol) {
  const double tol = null_tol ? *null_tol : 1e-8 * estimate_sigma_max(superop.matrix());
  const ComplexVector ev = lapack::eigenvalues(superop.matrix());
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double re = ev(i).real();
    if (re < -tol) best = std::max(best, re);
  }
  return std::isfinite(best) ? -best : 0.0;
}

double spectral_gap(const SystemModel& model, std::optional<double> null_tol) {
  return spectral_gap(Superoperator(model), null_tol);
}

ComplexMatrix choi_matrix(const ComplexMatrix& map, int dim) {
  const Eigen::Index d = dim;
  if (map.rows() != d * d || map.cols() != d * d) throw InvalidInput("choi_matrix: size mismatch");
  ComplexMatrix c(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l) c(i * d + k, j * d + l) = map(k + l * d, i + j * d);
  return c;
}

}  // namespace qds::gksl
