#include "qds/dynamics.hpp"
#include "qds/errors.hpp"
#include "qds/fock.hpp"
#include "qds/lasalle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace qds;
using qds::testing::max_abs;

namespace {

lasalle::LaSalleOptions trimmed(int levels) {
  lasalle::LaSalleOptions o;
  o.boundary_levels = levels;
  return o;
}

// P <= Q as projectors: range(P) inside range(Q).
bool contained(const ComplexMatrix& p, const ComplexMatrix& q, double tol = 1e-7) {
  return opalg::opnorm(p - q * p) <= tol;
}

void check_chain(const lasalle::InvarianceVerdict& v) {
  CHECK(contained(v.stationary_in_e, v.forward_invariant));
  CHECK(contained(v.forward_invariant, v.e_support));
}

ComplexMatrix n2_minus_n(int dim) {
  const ComplexMatrix n = fock::number(dim);
  return n * n - n;
}

}  // namespace

TEST_CASE("Hermitian basis is orthonormal and complete") {
  for (int dim : {1, 2, 3, 4}) {
    const auto basis = lasalle::hermitian_basis(dim);
    REQUIRE(basis.size() == static_cast<std::size_t>(dim * dim));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      CHECK(opalg::asymmetry(basis[i].op) < 1e-15);
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const double expected = i == j ? 1.0 : 0.0;
        CHECK(std::abs(opalg::hs_inner(basis[i].op, basis[j].op) - expected) < 1e-14);
      }
    }
    CHECK(lasalle::ObservableDictionary(basis).complete());
  }
}

TEST_CASE("dictionary validation and defaults") {
  CHECK_THROWS_AS(lasalle::ObservableDictionary({}), InvalidInput);
  CHECK_THROWS_AS(lasalle::ObservableDictionary({{"a", fock::annihilation(3)}}), ContractViolation);
  CHECK_THROWS_AS(lasalle::ObservableDictionary({{"n3", fock::number(3)}, {"n4", fock::number(4)}}), InvalidInput);

  const auto small = lasalle::default_dictionary(6, n2_minus_n(6));
  CHECK(small.complete());
  CHECK(small.size() == 6 + 36);
  const auto large = lasalle::default_dictionary(12, n2_minus_n(12));
  CHECK_FALSE(large.complete());
  CHECK(large.size() == 6);
  CHECK(large.items().front().name == "1");
}

TEST_CASE("seminorms against the trajectory itself vanish") {
  const int dim = 6;
  const auto model = testing::damped_model(dim);
  const auto traj = dynamics::propagate_expm(model, gksl::DensityOperator::number_state(dim, 2),
                                             dynamics::uniform_grid(0.0, 2.0, 11));
  const auto table = lasalle::seminorm_series(traj, lasalle::default_dictionary(dim, n2_minus_n(dim)), traj);
  for (double m : table.max_series) CHECK(m == 0.0);
}

TEST_CASE("excited damped oscillator converges weakly to the vacuum") {
  const int dim = 16;
  const auto model = testing::damped_model(dim);
  const auto traj = dynamics::propagate_expm(model, gksl::DensityOperator::number_state(dim, 1),
                                             dynamics::uniform_grid(0.0, 8.0, 81));
  const ComplexMatrix n = fock::number(dim);
  const auto quad = fock::quadratures(dim);
  const lasalle::ObservableDictionary dict({{"N", n}, {"N2", n * n}, {"q", quad.q}, {"p", quad.p}});
  const auto table = lasalle::seminorm_series(traj, dict, gksl::DensityOperator::number_state(dim, 0));
  CHECK(table.max_series.front() == doctest::Approx(1.0));
  CHECK(table.max_series.back() < 1e-3);
  for (std::size_t i = 1; i < table.max_series.size(); ++i) CHECK(table.max_series[i] <= table.max_series[i - 1]);
  CHECK(table.max_series.back() == doctest::Approx(std::exp(-8.0)).epsilon(1e-8));
}

TEST_CASE("complete dictionary seminorm is equivalent to the trace norm") {
  const int dim = 2;
  const gksl::SystemModel model(ComplexMatrix::Zero(dim, dim), {fock::annihilation(dim)});
  const ComplexVector plus = ComplexVector::Ones(dim) / std::sqrt(2.0);
  const auto traj = dynamics::propagate_expm(model, gksl::DensityOperator::pure(plus),
                                             dynamics::uniform_grid(0.0, 20.0, 41));
  const lasalle::ObservableDictionary dict(lasalle::hermitian_basis(dim));
  const auto vacuum = gksl::DensityOperator::number_state(dim, 0);
  const auto table = lasalle::seminorm_series(traj, dict, vacuum);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double tn = opalg::trace_norm(traj.states[i].matrix() - vacuum.matrix());
    CHECK(table.max_series[i] <= tn + 1e-14);
    CHECK(table.max_series[i] >= tn / std::pow(dim, 1.5) - 1e-14);
  }
  CHECK(table.max_series.back() < 1e-4);
}

TEST_CASE("E-set of the damped oscillator with N^2 - N") {
  const int dim = 12;
  const auto e = lasalle::e_set_support(testing::damped_model(dim), n2_minus_n(dim), trimmed(2));
  CHECK(opalg::subspace_distance(e, opalg::leading_projector(dim, 2)) < 1e-10);
}

TEST_CASE("E-set is empty when the generator image is negative definite") {
  const int dim = 6;
  const gksl::SystemModel pump(ComplexMatrix::Zero(dim, dim), {fock::creation(dim)});
  const auto e = lasalle::e_set_support(pump, -fock::number(dim), trimmed(1));
  CHECK(max_abs(e) == 0.0);
}

TEST_CASE("E-set requires -L(V) to be PSD") {
  const int dim = 6;
  const gksl::SystemModel pump(ComplexMatrix::Zero(dim, dim), {fock::creation(dim)});
  CHECK_THROWS_AS(lasalle::e_set_support(pump, fock::number(dim), trimmed(1)), ContractViolation);
}

TEST_CASE("E-set of two-photon loss is the cat span") {
  const int dim = 20;
  const Complex alpha = 1.0;
  const auto model = testing::two_photon_model(dim, alpha);
  const ComplexMatrix& l = model.couplings()[0];
  const auto e = lasalle::e_set_support(model, l.adjoint() * l, trimmed(2));
  const auto cats = fock::cat_vectors(dim, alpha);
  ComplexMatrix basis(dim, 2);
  basis << cats.even, cats.odd;
  CHECK(opalg::subspace_distance(e, opalg::projector_from_basis(basis)) < 1e-6);
}

TEST_CASE("invariant support") {
  const int dim = 10;
  const auto damped = testing::damped_model(dim);
  CHECK(lasalle::invariant_support(damped, ComplexMatrix::Zero(dim, dim)).rank == 0);

  const auto low = lasalle::invariant_support(damped, opalg::leading_projector(dim, 2));
  CHECK(low.rank == 2);
  CHECK(low.probe_passed);

  ComplexMatrix only1 = ComplexMatrix::Zero(dim, dim);
  only1(1, 1) = 1.0;
  CHECK(lasalle::invariant_support(damped, only1).rank == 0);

  const auto displaced = testing::displaced_model(dim, 1.0, 1.0);
  CHECK(lasalle::invariant_support(displaced, ComplexMatrix::Identity(dim, dim)).rank == dim);

  CHECK_THROWS_AS(lasalle::invariant_support(damped, 0.5 * ComplexMatrix::Identity(dim, dim)), ContractViolation);
}

TEST_CASE("states on the invariant support stay there") {
  std::mt19937_64 rng(51);
  const int dim = 10;
  const auto model = testing::two_photon_model(dim, 0.0);
  ComplexMatrix s0 = ComplexMatrix::Zero(dim, dim);
  s0.diagonal().head(4).setOnes();
  const auto inv = lasalle::invariant_support(model, s0);
  REQUIRE(inv.rank == 4);
  const ComplexMatrix basis = opalg::range_basis(inv.projector, 0.5);
  const ComplexMatrix outside = ComplexMatrix::Identity(dim, dim) - inv.projector;
  for (int i = 0; i < 5; ++i) {
    const ComplexVector psi = basis * testing::random_vector(inv.rank, rng);
    const std::vector<double> times = {0.0, 1.0};
    const auto traj = dynamics::propagate_expm(model, gksl::DensityOperator::pure(psi), times);
    CHECK(opalg::trace_product(outside, traj.states.back().matrix()).real() < 1e-6);
  }
}

TEST_CASE("invariance verdict for the damped oscillator is not certified") {
  const int dim = 12;
  const auto v = lasalle::corollary2_verdict(testing::damped_model(dim), n2_minus_n(dim), trimmed(2));
  CHECK(v.e_rank == 2);
  CHECK(v.stationary_in_e_rank == 1);
  CHECK(v.forward_invariant_rank == 2);
  CHECK(opalg::subspace_distance(v.stationary_in_e, opalg::leading_projector(dim, 1)) < 1e-7);
  CHECK_FALSE(v.corollary2_applies);
  check_chain(v);
  bool two_side = false, extra = false;
  for (const auto& c : v.caveats) {
    two_side = two_side || c.find("two-side invariance") != std::string::npos;
    extra = extra || c.find("strictly larger") != std::string::npos;
  }
  CHECK(two_side);
  CHECK(extra);
}

TEST_CASE("invariance verdict applies to two-photon loss") {
  const int dim = 20;
  const auto model = testing::two_photon_model(dim, 1.0);
  const ComplexMatrix& l = model.couplings()[0];
  const auto v = lasalle::corollary2_verdict(model, l.adjoint() * l, trimmed(2));
  CHECK(v.e_rank == 2);
  CHECK(v.stationary_in_e_rank == 2);
  CHECK(v.forward_invariant_rank == 2);
  CHECK(v.forward_support_stationary);
  CHECK(v.corollary2_applies);
  check_chain(v);
}

TEST_CASE("invariance verdict without couplings does not apply") {
  const int dim = 4;
  const gksl::SystemModel model(fock::number(dim), {});
  const auto v = lasalle::corollary2_verdict(model, fock::number(dim));
  CHECK(v.e_rank == dim);
  CHECK(v.forward_invariant_rank == dim);
  CHECK_FALSE(v.forward_support_stationary);
  CHECK_FALSE(v.corollary2_applies);
  check_chain(v);
}

TEST_CASE("damped oscillator trajectories: monotone V and an approximately stationary limit") {
  const int dim = 16;
  const auto model = testing::damped_model(dim);
  const ComplexMatrix v = n2_minus_n(dim);
  const auto traj = dynamics::propagate_expm(model, gksl::DensityOperator::number_state(dim, 1),
                                             dynamics::uniform_grid(0.0, 8.0, 801));
  const auto series = dynamics::expectations(traj, {{"V", v}}).real_column("V");
  for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i] <= series[i - 1] + 1e-12);
  CHECK(opalg::trace_norm(gksl::predual_generator(model, traj.states.back())) < 1e-3);

  const auto limit = lasalle::positive_limit_estimate(traj, model);
  CHECK(limit.label == "diagnostic, not certificate");
  CHECK(limit.tail_samples == 81);
  REQUIRE_FALSE(limit.representatives.empty());
  CHECK(limit.representatives.size() == limit.generator_residuals.size());
  CHECK_THROWS_AS(lasalle::positive_limit_estimate(traj, model, 0.0), InvalidInput);
}
