#include "qds/lyapunov.hpp"

#include "qds/errors.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>

namespace qds::lyapunov {

GroundSet ground_set(const ComplexMatrix& a, std::optional<double> gap_tol) {
  opalg::require_square(a, "ground_set");
  opalg::require_finite(a, "ground_set");
  const opalg::SpectrumClusters clusters = opalg::cluster_spectrum(a, gap_tol);
  if (clusters.size() < 2) {
    throw DegenerateGroundSet("ground_set: operator has a single spectral level; every state is a ground state");
  }
  GroundSet g;
  g.projector = clusters.projectors.front();
  g.rank = static_cast<int>(clusters.bases.front().cols());
  g.p0 = clusters.levels[0];
  g.p1 = clusters.levels[1];
  g.kappa = (g.p1 - g.p0) / 4.0;
  g.levels = clusters.levels;
  g.gap_tol = clusters.gap_tol;
  return g;
}

StrictMinimumReport strict_minimum_check(const gksl::StationarySet& stationary, const GroundSet& ground,
                                         double tolerance) {
  StrictMinimumReport r;
  r.tolerance = tolerance;
  r.stationary_rank = stationary.support_rank;
  r.ground_rank = ground.rank;
  r.subspace_distance = opalg::subspace_distance(stationary.support_projector, ground.projector);
  r.holds = r.subspace_distance <= tolerance;
  return r;
}

StrictMinimumReport strict_minimum_check(const gksl::SystemModel& model, const ComplexMatrix& a,
                                         std::optional<double> gap_tol, const gksl::StationaryOptions& options) {
  if (a.rows() != model.dim() || a.cols() != model.dim()) {
    throw InvalidInput("strict_minimum_check: operator dimension does not match the model");
  }
  const GroundSet g = ground_set(a, gap_tol);
  return strict_minimum_check(gksl::stationary_states(model, options), g);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::lyapunov: return "lyapunov";
    case Verdict::global_asymptotic: return "global_asymptotic";
    case Verdict::global_exponential: return "global_exponential";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

StabilityReport classify_stability(const gksl::SystemModel& model, const ComplexMatrix& v,
                                   const CertifyOptions& options, const gksl::StationarySet* stationary) {
  const int dim = model.dim();
  if (v.rows() != dim || v.cols() != dim) throw InvalidInput("classify_stability: V dimension does not match the model");
  opalg::require_finite(v, "classify_stability");
  if (opalg::asymmetry(v) > 1e-10 * std::max(1.0, v.norm())) {
    throw ContractViolation("classify_stability: V is not Hermitian");
  }
  const int b = options.boundary_levels;
  if (b < 0 || dim - b < 2) throw InvalidInput("classify_stability: boundary_levels leaves fewer than 2 levels");

  StabilityReport r;
  r.boundary_levels = b;
  const int n = dim - b;
  r.tested_dim = n;

  const GroundSet g = ground_set(v, options.gap_tol);
  r.p0 = g.p0;
  r.p1 = g.p1;

  std::optional<gksl::StationarySet> owned;
  if (stationary == nullptr) {
    owned = gksl::stationary_states(model, options.stationary);
    stationary = &*owned;
  }
  r.strict_minimum = strict_minimum_check(*stationary, g);
  if (!stationary->boundary_flagged.empty()) {
    r.caveats.push_back("some stationary basis elements carry population on the top truncation levels");
  }

  const ComplexMatrix lv = gksl::adjoint_generator(model, v);
  const ComplexMatrix neg = opalg::hermitize(-lv).topLeftCorner(n, n);
  const ComplexMatrix shifted =
      (v - g.p0 * ComplexMatrix::Identity(dim, dim)).topLeftCorner(n, n);
  const ComplexMatrix p0 = g.projector.topLeftCorner(n, n);
  const double scale = std::max(1.0, opalg::opnorm(neg));
  r.psd_tol = options.psd_tol_rel * scale;
  r.gamma_tol = options.gamma_tol_rel * scale;
  if (b > 0) {
    r.caveats.push_back("operator inequalities tested on number states 0.." + std::to_string(n - 1) +
                        "; the top " + std::to_string(b) + " truncation levels are excluded");
  }

  const opalg::HermitianEigen eig = opalg::eig_hermitian(neg);
  r.min_eig_neg_lv = eig.values(0);
  r.lyapunov_holds = r.min_eig_neg_lv >= -r.psd_tol;

  const double kernel_tol = options.kernel_tol_rel * scale;
  std::vector<Eigen::Index> kernel_cols;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) <= kernel_tol) kernel_cols.push_back(i);
  }
  r.kernel_dimension = static_cast<int>(kernel_cols.size());
  if (!kernel_cols.empty()) {
    ComplexMatrix k(n, r.kernel_dimension);
    for (std::size_t c = 0; c < kernel_cols.size(); ++c) k.col(static_cast<Eigen::Index>(c)) = eig.vectors.col(kernel_cols[c]);
    r.kernel_inclusion = opalg::opnorm(k - p0 * k);
  }
  r.asymptotic_holds = r.lyapunov_holds && r.kernel_inclusion <= options.inclusion_tol;

  if (r.lyapunov_holds) {
    auto feasible = [&](double gamma) {
      return opalg::eigvals_hermitian(neg - gamma * shifted)(0) >= -r.gamma_tol;
    };
    double lo = 0.0;
    double hi = opalg::opnorm(lv) / (g.p1 - g.p0) + 1.0;
    if (feasible(hi)) {
      lo = hi;
    } else {
      for (int i = 0; i < options.bisection_steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
      }
    }
    // Rates this small are indistinguishable from the feasibility slack.
    if (lo > 10.0 * r.gamma_tol / (g.p1 - g.p0)) r.gamma = lo;
  }
  r.exponential_holds = r.asymptotic_holds && r.gamma > 0.0;
  r.zeta = r.gamma * g.p0;
  if (r.gamma > 0.0 && g.p0 != 0.0) {
    r.caveats.push_back("V is shifted by -p0 internally; zeta = gamma * p0 restores the unshifted constant");
  }

  if (!r.strict_minimum.holds) {
    r.verdict = Verdict::inconclusive;
    r.caveats.push_back("stationary support (rank " + std::to_string(r.strict_minimum.stationary_rank) +
                        ") differs from the ground space of V (rank " + std::to_string(r.strict_minimum.ground_rank) +
                        "); V has no strict minimum on the stationary set");
  } else if (!r.lyapunov_holds) {
    r.verdict = Verdict::inconclusive;
    r.caveats.push_back("-L(V) is not positive semidefinite; the expectation of V can increase");
  } else if (!r.asymptotic_holds) {
    r.verdict = Verdict::lyapunov;
  } else if (r.exponential_holds) {
    r.verdict = Verdict::global_exponential;
  } else {
    r.verdict = Verdict::global_asymptotic;
  }
  r.caveats.push_back("verdicts are sufficient conditions only; asymptotic and exponential verdicts hold globally");
  spdlog::debug("classify_stability: verdict {} gamma {:.10g} min eig {:.3e}", to_string(r.verdict), r.gamma,
                r.min_eig_neg_lv);
  return r;
}

DistanceBracket distance_bracket(const ComplexMatrix& rho, const GroundSet& ground, const ComplexMatrix& a) {
  if (rho.rows() != a.rows() || rho.rows() != ground.projector.rows() || rho.rows() != rho.cols()) {
    throw InvalidInput("distance_bracket: dimension mismatch");
  }
  const double excess = opalg::trace_product(a, rho).real() - ground.p0;
  if (excess < -1e-10 * std::max(1.0, std::abs(ground.p0))) {
    throw ContractViolation("distance_bracket: tr(A rho) lies below the ground level; wrong A/rho pairing");
  }
  DistanceBracket d;
  const double outside = 1.0 - opalg::trace_product(ground.projector, rho).real();
  d.lower = std::clamp(2.0 * outside, 0.0, 2.0);
  d.ground_bound = std::sqrt(std::max(0.0, excess) / ground.kappa);
  d.upper = std::min(2.0, d.ground_bound);
  d.upper_method = "ground-gap bound";
  const ComplexMatrix prp = ground.projector * rho * ground.projector;
  const double inside = prp.trace().real();
  if (inside >= 1e-12) {
    d.projection_bound = opalg::trace_norm(opalg::hermitize(rho - prp / inside));
    if (*d.projection_bound < d.upper) {
      d.upper = *d.projection_bound;
      d.upper_method = "projected state";
    }
  }
  if (d.lower > d.upper + 1e-9) {
    throw ContractViolation("distance_bracket: lower bound exceeds upper bound");
  }
  d.lower = std::min(d.lower, d.upper);
  return d;
}

namespace {

struct SearchProblem {
  ComplexMatrix rho;
  ComplexMatrix basis;  // d x r orthonormal
  int r = 0;
  ComplexMatrix t;      // scratch Cholesky factor
};

// Lower-triangular T from r real diagonal entries and r(r-1)/2 complex
// off-diagonal entries; sigma = W T T^dagger W^dagger / tr(T T^dagger).
double objective(const gsl_vector* x, void* params) {
  auto* p = static_cast<SearchProblem*>(params);
  const int r = p->r;
  p->t.setZero();
  std::size_t k = 0;
  for (int i = 0; i < r; ++i) p->t(i, i) = gsl_vector_get(x, k++);
  for (int i = 1; i < r; ++i) {
    for (int j = 0; j < i; ++j) {
      const double re = gsl_vector_get(x, k++);
      const double im = gsl_vector_get(x, k++);
      p->t(i, j) = Complex(re, im);
    }
  }
  const ComplexMatrix omega = p->t * p->t.adjoint();
  const double tr = omega.trace().real();
  if (!(tr > 1e-300)) return 4.0;
  const ComplexMatrix diff = p->rho - p->basis * (omega / tr) * p->basis.adjoint();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

double nelder_mead(SearchProblem& problem, std::vector<double>& x0, double step, int max_evals) {
  const std::size_t n = x0.size();
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> steps(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0[i]);
  gsl_vector_set_all(steps.get(), step);
  gsl_multimin_function f{&objective, n, &problem};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(m.get(), &f, x.get(), steps.get());
  for (int it = 0; it < max_evals; ++it) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_size(m.get()) < 1e-12) break;
  }
  for (std::size_t i = 0; i < n; ++i) x0[i] = gsl_vector_get(m.get()->x, i);
  return m.get()->fval;
}

// Parameters of the Cholesky factor of the projected state, used as one start.
std::vector<double> projected_start(const SearchProblem& p) {
  ComplexMatrix omega = p.basis.adjoint() * p.rho * p.basis;
  omega = opalg::hermitize(omega) + 1e-14 * ComplexMatrix::Identity(p.r, p.r);
  Eigen::LLT<ComplexMatrix> llt(omega);
  ComplexMatrix t = llt.info() == Eigen::Success ? ComplexMatrix(llt.matrixL())
                                                  : ComplexMatrix(ComplexMatrix::Identity(p.r, p.r));
  // T diagonal is real and positive from LLT.
  std::vector<double> x;
  for (int i = 0; i < p.r; ++i) x.push_back(t(i, i).real());
  for (int i = 1; i < p.r; ++i) {
    for (int j = 0; j < i; ++j) {
      x.push_back(t(i, j).real());
      x.push_back(t(i, j).imag());
    }
  }
  return x;
}

}  // namespace

double brute_force_distance(const ComplexMatrix& rho, const ComplexMatrix& p0, const SearchBudget& budget) {
  opalg::require_square(rho, "brute_force_distance");
  if (p0.rows() != rho.rows() || p0.cols() != rho.cols()) throw InvalidInput("brute_force_distance: dimension mismatch");
  SearchProblem problem;
  problem.rho = opalg::hermitize(rho);
  problem.basis = opalg::range_basis(opalg::hermitize(p0), 0.5);
  problem.r = static_cast<int>(problem.basis.cols());
  if (problem.r == 0) throw InvalidInput("brute_force_distance: empty ground projector");
  if (problem.r > 3) throw InvalidInput("brute_force_distance: ground projector rank above 3");
  if (problem.r == 1) {
    const ComplexMatrix sigma = problem.basis * problem.basis.adjoint();
    return opalg::trace_norm(opalg::hermitize(problem.rho - sigma));
  }
  problem.t = ComplexMatrix::Zero(problem.r, problem.r);
  const std::size_t n = static_cast<std::size_t>(problem.r) * problem.r;

  static std::once_flag gsl_quiet;
  std::call_once(gsl_quiet, [] { gsl_set_error_handler_off(); });
  std::mt19937_64 rng(budget.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> best_x = projected_start(problem);
  double best = nelder_mead(problem, best_x, 0.1, budget.evals_per_start);
  for (int s = 0; s < budget.starts; ++s) {
    std::vector<double> x(n);
    for (auto& xi : x) xi = normal(rng);
    const double val = nelder_mead(problem, x, 0.5, budget.evals_per_start);
    if (val < best) {
      best = val;
      best_x = x;
    }
  }
  // Restarting with shrinking steps escapes simplex collapse at the kink
  // of the trace norm.
  double step = 0.1;
  for (int round = 0; round < 6; ++round) {
    std::vector<double> x = best_x;
    const double val = nelder_mead(problem, x, step, budget.polish_evals);
    if (val < best) {
      best = val;
      best_x = x;
    }
    step *= 0.1;
  }
  return best;
}

std::vector<double> brute_force_distance_batch(std::span<const ComplexMatrix> rhos,
                                               std::span<const ComplexMatrix> projectors,
                                               const SearchBudget& budget, kernels::Exec exec) {
  if (rhos.size() != projectors.size()) throw InvalidInput("brute_force_distance_batch: size mismatch");
  std::vector<double> out(rhos.size());
  const auto count = static_cast<long>(rhos.size());
  if (exec == kernels::Exec::serial) {
    for (long i = 0; i < count; ++i) {
      SearchBudget b = budget;
      b.seed = budget.seed + static_cast<std::uint64_t>(i);
      out[i] = brute_force_distance(rhos[i], projectors[i], b);
    }
    return out;
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      SearchBudget b = budget;
      b.seed = budget.seed + static_cast<std::uint64_t>(i);
      out[i] = brute_force_distance(rhos[i], projectors[i], b);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace qds::lyapunov
