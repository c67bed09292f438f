#include "qds/lasalle.hpp"

#include "qds/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>

namespace qds::lasalle {

namespace {

// Real coordinates of a Hermitian matrix in which the Hilbert-Schmidt
// inner product is the Euclidean one.
Eigen::VectorXd hermitian_coordinates(const ComplexMatrix& a) {
  const Eigen::Index d = a.rows();
  Eigen::VectorXd x(d * d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) x(k++) = a(i, i).real();
  for (Eigen::Index j = 1; j < d; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      x(k++) = std::sqrt(2.0) * a(i, j).real();
      x(k++) = std::sqrt(2.0) * a(i, j).imag();
    }
  }
  return x;
}

}  // namespace

ObservableDictionary::ObservableDictionary(std::vector<dynamics::NamedObservable> items)
    : items_(std::move(items)) {
  if (items_.empty()) throw InvalidInput("ObservableDictionary: empty dictionary");
  dim_ = static_cast<int>(items_.front().op.rows());
  for (const auto& it : items_) {
    opalg::require_square(it.op, "ObservableDictionary");
    opalg::require_finite(it.op, "ObservableDictionary");
    if (it.op.rows() != dim_) throw InvalidInput("ObservableDictionary: mixed dimensions ('" + it.name + "')");
    if (opalg::asymmetry(it.op) > 1e-10 * std::max(1.0, it.op.norm())) {
      throw ContractViolation("ObservableDictionary: observable '" + it.name + "' is not Hermitian");
    }
  }
  const auto n = static_cast<Eigen::Index>(dim_) * dim_;
  if (static_cast<Eigen::Index>(items_.size()) >= n) {
    Eigen::MatrixXd coords(n, static_cast<Eigen::Index>(items_.size()));
    for (std::size_t c = 0; c < items_.size(); ++c) {
      coords.col(static_cast<Eigen::Index>(c)) = hermitian_coordinates(items_[c].op);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(coords);
    qr.setThreshold(1e-10);
    complete_ = qr.rank() == n;
  }
}

std::vector<dynamics::NamedObservable> hermitian_basis(int dim) {
  if (dim < 1) throw InvalidInput("hermitian_basis: dim must be positive");
  std::vector<dynamics::NamedObservable> out;
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < dim; ++i) {
    ComplexMatrix e = ComplexMatrix::Zero(dim, dim);
    e(i, i) = 1.0;
    out.push_back({"E" + std::to_string(i) + "_" + std::to_string(i), e});
  }
  for (int j = 1; j < dim; ++j) {
    for (int i = 0; i < j; ++i) {
      ComplexMatrix x = ComplexMatrix::Zero(dim, dim);
      x(i, j) = s;
      x(j, i) = s;
      out.push_back({"X" + std::to_string(i) + "_" + std::to_string(j), x});
      ComplexMatrix y = ComplexMatrix::Zero(dim, dim);
      y(i, j) = Complex(0.0, -s);
      y(j, i) = Complex(0.0, s);
      out.push_back({"Y" + std::to_string(i) + "_" + std::to_string(j), y});
    }
  }
  return out;
}

ObservableDictionary default_dictionary(int dim, const ComplexMatrix& v, fock::QuadratureConvention convention) {
  const fock::Quadratures quad = fock::quadratures(dim, convention);
  const ComplexMatrix n = fock::number(dim);
  std::vector<dynamics::NamedObservable> items{
      {"1", ComplexMatrix::Identity(dim, dim)}, {"q", quad.q}, {"p", quad.p}, {"N", n}, {"N^2", n * n}, {"V", v}};
  if (dim <= 8) {
    for (auto& b : hermitian_basis(dim)) items.push_back(std::move(b));
  }
  return ObservableDictionary(std::move(items));
}

namespace {

SeminormTable seminorms(const dynamics::Trajectory& traj, const ObservableDictionary& dict,
                        const std::function<const ComplexMatrix&(std::size_t)>& sigma_at) {
  if (!traj.states.empty() && traj.states.front().dim() != dict.dim()) {
    throw InvalidInput("seminorm_series: dictionary dimension does not match the trajectory");
  }
  SeminormTable t;
  t.times = traj.times;
  t.max_series.assign(traj.size(), 0.0);
  for (const auto& obs : dict.items()) {
    std::vector<double> col(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      col[i] = std::abs(opalg::trace_product(obs.op, traj.states[i].matrix() - sigma_at(i)));
      t.max_series[i] = std::max(t.max_series[i], col[i]);
    }
    t.names.push_back(obs.name);
    t.values.push_back(std::move(col));
  }
  return t;
}

}  // namespace

SeminormTable seminorm_series(const dynamics::Trajectory& traj, const ObservableDictionary& dict,
                              const gksl::DensityOperator& sigma) {
  if (sigma.dim() != dict.dim()) throw InvalidInput("seminorm_series: reference state dimension mismatch");
  return seminorms(traj, dict, [&](std::size_t) -> const ComplexMatrix& { return sigma.matrix(); });
}

SeminormTable seminorm_series(const dynamics::Trajectory& traj, const ObservableDictionary& dict,
                              const dynamics::Trajectory& sigma) {
  if (sigma.size() != traj.size()) throw InvalidInput("seminorm_series: reference trajectory length mismatch");
  if (!sigma.states.empty() && sigma.states.front().dim() != dict.dim()) {
    throw InvalidInput("seminorm_series: reference state dimension mismatch");
  }
  return seminorms(traj, dict, [&](std::size_t i) -> const ComplexMatrix& { return sigma.states[i].matrix(); });
}

namespace {

int tested_dim(int dim, int boundary_levels) {
  if (boundary_levels < 0 || dim - boundary_levels < 1) {
    throw InvalidInput("lasalle: boundary_levels leaves no levels to test");
  }
  return dim - boundary_levels;
}

ComplexMatrix pad(const ComplexMatrix& block, int dim) {
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  out.topLeftCorner(block.rows(), block.cols()) = block;
  return out;
}

}  // namespace

ComplexMatrix e_set_support(const gksl::SystemModel& model, const ComplexMatrix& v, const LaSalleOptions& options) {
  const int dim = model.dim();
  if (v.rows() != dim || v.cols() != dim) throw InvalidInput("e_set_support: V dimension does not match the model");
  const int n = tested_dim(dim, options.boundary_levels);
  const ComplexMatrix neg = opalg::hermitize(-gksl::adjoint_generator(model, v)).topLeftCorner(n, n);
  const double scale = std::max(1.0, opalg::opnorm(neg));
  const opalg::HermitianEigen eig = opalg::eig_hermitian(neg);
  if (eig.values(0) < -options.psd_tol_rel * scale) {
    throw ContractViolation("e_set_support: -L(V) is not positive semidefinite (min eigenvalue " +
                            std::to_string(eig.values(0)) + ")");
  }
  const double tol = options.kernel_tol_rel * scale;
  ComplexMatrix block = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) <= tol) block += eig.vectors.col(i) * eig.vectors.col(i).adjoint();
  }
  return pad(block, dim);
}

InvariantSupport invariant_support(const gksl::SystemModel& model, const ComplexMatrix& s0,
                                   const LaSalleOptions& options) {
  const int dim = model.dim();
  if (s0.rows() != dim || s0.cols() != dim) throw InvalidInput("invariant_support: projector dimension mismatch");
  const ComplexMatrix p_in = opalg::hermitize(s0);
  if ((p_in * p_in - p_in).norm() > 1e-8 * std::max(1.0, p_in.norm())) {
    throw ContractViolation("invariant_support: S0 is not a projector");
  }
  InvariantSupport out;
  ComplexMatrix basis = opalg::range_basis(p_in, 0.5);
  const ComplexMatrix heff = model.hamiltonian() - Complex(0.0, 0.5) * model.decay();
  std::vector<const ComplexMatrix*> generators{&heff};
  for (const auto& l : model.couplings()) generators.push_back(&l);
  double scale = 1.0;
  for (const auto* g : generators) scale = std::max(scale, opalg::opnorm(*g));
  const double threshold = options.leak_threshold * scale;

  for (int it = 0; it <= dim && basis.cols() > 0; ++it) {
    out.iterations = it + 1;
    const ComplexMatrix p = opalg::projector_from_basis(basis);
    const ComplexMatrix complement = ComplexMatrix::Identity(dim, dim) - p;
    const auto r = basis.cols();
    ComplexMatrix stacked(static_cast<Eigen::Index>(generators.size()) * dim, r);
    for (std::size_t g = 0; g < generators.size(); ++g) {
      stacked.middleRows(static_cast<Eigen::Index>(g) * dim, dim) = complement * (*generators[g]) * basis;
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(stacked, Eigen::ComputeFullV);
    const RealVector& sv = svd.singularValues();
    Eigen::Index leaking = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > threshold) ++leaking;
    }
    if (leaking == 0) break;
    // Keep the right singular directions that no generator moves outside.
    const ComplexMatrix keep = svd.matrixV().rightCols(r - leaking);
    basis = basis * keep;
    if (basis.cols() > 0) {
      Eigen::HouseholderQR<ComplexMatrix> qr(basis);
      basis = qr.householderQ() * ComplexMatrix::Identity(dim, basis.cols());
    }
  }
  out.rank = static_cast<int>(basis.cols());
  out.projector = out.rank > 0 ? opalg::projector_from_basis(basis) : ComplexMatrix::Zero(dim, dim);

  if (out.rank > 0 && options.probe_states > 0) {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    dynamics::PropagationOptions prop;
    prop.output_times = {options.probe_time};
    const ComplexMatrix outside = ComplexMatrix::Identity(dim, dim) - out.projector;
    for (int s = 0; s < options.probe_states; ++s) {
      ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
      const int terms = std::min(out.rank, 2);
      for (int t = 0; t < terms; ++t) {
        ComplexVector c(out.rank);
        for (auto& z : c) z = Complex(normal(rng), normal(rng));
        const ComplexVector psi = basis * c;
        rho += psi * psi.adjoint();
      }
      rho /= rho.trace().real();
      const dynamics::Trajectory traj =
          dynamics::propagate_rk(model, gksl::DensityOperator::from_matrix(rho), options.probe_time, 1e-9, prop);
      const double leak = opalg::trace_product(outside, traj.states.back().matrix()).real();
      out.probe_leak = std::max(out.probe_leak, leak);
    }
    out.probe_passed = out.probe_leak < options.probe_tol;
    if (!out.probe_passed) {
      spdlog::warn("invariant_support: simulation probe leaked {:.3e} outside the support", out.probe_leak);
    }
  }
  return out;
}

InvarianceVerdict corollary2_verdict(const gksl::SystemModel& model, const ComplexMatrix& v,
                                     const LaSalleOptions& options, const gksl::StationarySet* stationary) {
  const int dim = model.dim();
  InvarianceVerdict r;
  r.e_support = e_set_support(model, v, options);
  r.e_rank = opalg::projector_rank(r.e_support);

  std::optional<gksl::StationarySet> owned;
  if (stationary == nullptr) {
    owned = gksl::stationary_states(model, options.stationary);
    stationary = &*owned;
  }
  r.stationary_in_e = opalg::intersect_projectors(stationary->support_projector, r.e_support, options.inclusion_tol);
  r.stationary_in_e_rank = opalg::projector_rank(r.stationary_in_e);

  const InvariantSupport inv = invariant_support(model, r.e_support, options);
  r.forward_invariant = inv.projector;
  r.forward_invariant_rank = inv.rank;
  r.probe_leak = inv.probe_leak;
  if (!inv.probe_passed) {
    r.caveats.push_back("simulation probe found population leaving the forward-invariant support");
  }

  // All operators X = F E_jk F^dagger on the forward support must be fixed by the generator.
  if (inv.rank > 0) {
    const ComplexMatrix basis = opalg::range_basis(inv.projector, 0.5);
    const double scale = 1.0 + opalg::opnorm(model.hamiltonian()) + opalg::opnorm(model.decay());
    double worst = 0.0;
    for (int j = 0; j < inv.rank; ++j) {
      for (int k = 0; k < inv.rank; ++k) {
        const ComplexMatrix x = basis.col(j) * basis.col(k).adjoint();
        worst = std::max(worst, gksl::predual_generator(model, x).norm());
      }
    }
    r.forward_support_stationary = worst <= 1e-7 * scale;
  }

  const bool supports_match =
      opalg::subspace_distance(r.stationary_in_e, r.forward_invariant) <= options.inclusion_tol;
  r.corollary2_applies = supports_match && r.forward_support_stationary;

  r.caveats.push_back(
      "two-side invariance is evaluated as forward invariance of the support intersected with stationarity; a "
      "reading that only requires trajectories entering the set to stay in it for all later times admits every "
      "forward-invariant support as invariant, so both supports are reported");
  if (r.forward_invariant_rank > r.stationary_in_e_rank) {
    r.caveats.push_back("forward-invariant support (rank " + std::to_string(r.forward_invariant_rank) +
                        ") is strictly larger than the stationary support inside the E-set (rank " +
                        std::to_string(r.stationary_in_e_rank) + "); the " +
                        std::to_string(r.forward_invariant_rank - r.stationary_in_e_rank) +
                        " extra directions are invariant forward in time but not backward-extendable, so the "
                        "convergence conclusion is not certified under the forward reading");
  } else if (supports_match && !r.forward_support_stationary) {
    r.caveats.push_back("operators supported on the invariant support are not all stationary; states there "
                        "keep evolving, so the largest invariant set exceeds the stationary set");
  }
  if (options.boundary_levels > 0) {
    r.caveats.push_back("E-set computed on number states 0.." + std::to_string(dim - options.boundary_levels - 1) +
                        "; the top truncation levels are excluded");
  }
  return r;
}

PositiveLimitEstimate positive_limit_estimate(const dynamics::Trajectory& traj, const gksl::SystemModel& model,
                                              double tail_fraction, double radius) {
  if (traj.size() == 0) throw InvalidInput("positive_limit_estimate: empty trajectory");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw InvalidInput("positive_limit_estimate: tail_fraction must lie in (0, 1]");
  }
  PositiveLimitEstimate est;
  est.radius = radius;
  const auto n = traj.size();
  const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * n)));
  est.tail_samples = tail;
  for (std::size_t i = n - tail; i < n; ++i) {
    const auto& s = traj.states[i];
    const bool known = std::any_of(est.representatives.begin(), est.representatives.end(), [&](const auto& rep) {
      return opalg::trace_norm(s.matrix() - rep.matrix()) <= radius;
    });
    if (!known) {
      est.representatives.push_back(s);
      est.generator_residuals.push_back(opalg::trace_norm(gksl::predual_generator(model, s)));
    }
  }
  return est;
}

}  // namespace qds::lasalle
