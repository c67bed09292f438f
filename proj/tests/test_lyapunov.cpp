#include "qds/dynamics.hpp"
#include "qds/errors.hpp"
#include "qds/fock.hpp"
#include "qds/lyapunov.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace qds;
using qds::testing::max_abs;

namespace {

lyapunov::CertifyOptions trimmed(int levels) {
  lyapunov::CertifyOptions o;
  o.boundary_levels = levels;
  return o;
}

ComplexMatrix cat_projector(int dim, Complex alpha) {
  const auto cats = fock::cat_vectors(dim, alpha);
  ComplexMatrix basis(dim, 2);
  basis << cats.even, cats.odd;
  return opalg::projector_from_basis(basis);
}

// Three-level cascade 2 -> 1 -> 0 with V = |1><1| + |2><2|.
gksl::SystemModel cascade() {
  ComplexMatrix l1 = ComplexMatrix::Zero(3, 3), l2 = ComplexMatrix::Zero(3, 3);
  l1(0, 1) = 1.0;
  l2(1, 2) = 1.0;
  return gksl::SystemModel(ComplexMatrix::Zero(3, 3), {l1, l2});
}

}  // namespace

TEST_CASE("ground set of the number operator") {
  const auto g = lyapunov::ground_set(fock::number(6));
  CHECK(g.rank == 1);
  CHECK(g.p0 == doctest::Approx(0.0));
  CHECK(g.p1 == doctest::Approx(1.0));
  CHECK(g.kappa == doctest::Approx(0.25));
  CHECK(max_abs(g.projector - opalg::leading_projector(6, 1)) < 1e-14);
}

TEST_CASE("ground set of the identity is degenerate") {
  CHECK_THROWS_AS(lyapunov::ground_set(ComplexMatrix::Identity(4, 4)), DegenerateGroundSet);
}

TEST_CASE("ground set of the two-photon candidate is the cat span") {
  const int dim = 30;
  const Complex alpha = 1.5;
  const ComplexMatrix l = testing::two_photon_coupling(dim, alpha);
  const auto g = lyapunov::ground_set(l.adjoint() * l);
  CHECK(g.rank == 2);
  CHECK(std::abs(g.p0) <= 1e-8);
  CHECK(opalg::subspace_distance(g.projector, cat_projector(dim, alpha)) < 1e-6);
}

TEST_CASE("strict minimum check") {
  const int dim = 20;
  const auto ex1 = lyapunov::strict_minimum_check(testing::displaced_model(dim, 1.0, 1.0),
                                                  testing::displaced_number(dim, 1.0));
  CHECK(ex1.holds);
  CHECK(ex1.stationary_rank == 1);
  CHECK(ex1.ground_rank == 1);

  const ComplexMatrix n = fock::number(10);
  const auto ex2 = lyapunov::strict_minimum_check(testing::damped_model(10), n * n - n);
  CHECK_FALSE(ex2.holds);
  CHECK(ex2.stationary_rank == 1);
  CHECK(ex2.ground_rank == 2);

  const ComplexMatrix l = testing::two_photon_coupling(24, 1.0);
  const auto ex3 = lyapunov::strict_minimum_check(testing::two_photon_model(24, 1.0), l.adjoint() * l);
  CHECK(ex3.holds);
  CHECK(ex3.stationary_rank == 2);
}

TEST_CASE("displaced oscillator is exponentially stable at rate kappa") {
  const int dim = 20;
  for (double kappa : {1.0, 0.4}) {
    const auto model = testing::displaced_model(dim, 1.0, kappa);
    const auto r = lyapunov::classify_stability(model, testing::displaced_number(dim, 1.0), trimmed(2));
    CHECK(r.verdict == lyapunov::Verdict::global_exponential);
    CHECK(r.gamma == doctest::Approx(kappa).epsilon(1e-6));
    CHECK(std::abs(r.zeta) < 1e-6);
    CHECK(r.tested_dim == dim - 2);
  }
}

TEST_CASE("damped oscillator with N^2 - N is inconclusive") {
  const ComplexMatrix n = fock::number(12);
  const auto r = lyapunov::classify_stability(testing::damped_model(12), n * n - n, trimmed(2));
  CHECK(r.verdict == lyapunov::Verdict::inconclusive);
  CHECK(r.lyapunov_holds);
  CHECK_FALSE(r.strict_minimum.holds);
}

TEST_CASE("two-photon loss is exponentially stable with rate at least 2") {
  const int dim = 24;
  const auto model = testing::two_photon_model(dim, 1.0);
  const ComplexMatrix& l = model.couplings()[0];
  const auto r = lyapunov::classify_stability(model, l.adjoint() * l, trimmed(2));
  CHECK(r.verdict == lyapunov::Verdict::global_exponential);
  CHECK(r.gamma >= 2.0 - 1e-6);
  CHECK(r.kernel_dimension == 2);
}

TEST_CASE("Lyapunov-only verdict when the kernel leaves the ground space") {
  ComplexMatrix v = ComplexMatrix::Zero(3, 3);
  v(1, 1) = v(2, 2) = 1.0;
  const auto r = lyapunov::classify_stability(cascade(), v);
  CHECK(r.strict_minimum.holds);
  CHECK(r.lyapunov_holds);
  CHECK_FALSE(r.asymptotic_holds);
  CHECK(r.verdict == lyapunov::Verdict::lyapunov);
}

TEST_CASE("indefinite generator image is inconclusive") {
  // Pumping 0 -> 1 raises V = N.
  ComplexMatrix up = ComplexMatrix::Zero(2, 2);
  up(1, 0) = 1.0;
  ComplexMatrix down = up.adjoint();
  const gksl::SystemModel model(ComplexMatrix::Zero(2, 2), {up, 0.1 * down});
  const auto r = lyapunov::classify_stability(model, fock::number(2));
  CHECK(r.verdict == lyapunov::Verdict::inconclusive);
}

TEST_CASE("classify_stability input checks") {
  const auto model = testing::damped_model(4);
  CHECK_THROWS_AS(lyapunov::classify_stability(model, fock::number(3)), InvalidInput);
  CHECK_THROWS_AS(lyapunov::classify_stability(model, fock::annihilation(4)), ContractViolation);
  CHECK_THROWS_AS(lyapunov::classify_stability(model, fock::number(4), trimmed(3)), InvalidInput);
}

TEST_CASE("stationary states sit on the ground level of a strict-minimum candidate") {
  const int dim = 20;
  const auto model = testing::two_photon_model(dim, 1.0);
  const ComplexMatrix& l = model.couplings()[0];
  const ComplexMatrix a = l.adjoint() * l;
  const auto g = lyapunov::ground_set(a);
  const auto st = gksl::stationary_states(model);
  REQUIRE(lyapunov::strict_minimum_check(st, g).holds);
  for (const auto& rho : st.density_witnesses) CHECK(std::abs(opalg::trace_product(a, rho.matrix()).real() - g.p0) <= 1e-7);
}

TEST_CASE("superpositions of ground vectors stay on the ground level") {
  std::mt19937_64 rng(41);
  const int dim = 24;
  const ComplexMatrix l = testing::two_photon_coupling(dim, 1.2);
  const ComplexMatrix a = l.adjoint() * l;
  const auto clusters = opalg::cluster_spectrum(a);
  const ComplexMatrix& basis = clusters.bases.front();
  for (int i = 0; i < 20; ++i) {
    const ComplexVector c = testing::random_vector(static_cast<int>(basis.cols()), rng);
    const ComplexVector psi = basis * c;
    CHECK(std::abs((psi.adjoint() * a * psi)(0).real() - clusters.levels.front()) < 1e-9);
  }
}

TEST_CASE("exponential certificate bounds simulated trajectories") {
  const int dim = 20;
  const auto model = testing::displaced_model(dim, 1.0, 1.0);
  const ComplexMatrix v = testing::displaced_number(dim, 1.0);
  const auto r = lyapunov::classify_stability(model, v, trimmed(2));
  REQUIRE(r.verdict == lyapunov::Verdict::global_exponential);
  const auto times = dynamics::uniform_grid(0.0, 5.0, 51);
  for (int n : {0, 2, 4}) {
    const auto traj = dynamics::propagate_expm(model, gksl::DensityOperator::number_state(dim, n), times);
    const auto series = dynamics::expectations(traj, {{"V", v}}).real_column("V");
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(series[i] - r.p0 <= (series[0] - r.p0) * std::exp(-r.gamma * times[i]) * (1.0 + 1e-3) + 1e-12);
    }
  }
}

TEST_CASE("distance bracket closed cases") {
  const int dim = 6;
  const ComplexMatrix n = fock::number(dim);
  const auto g = lyapunov::ground_set(n);
  const auto b = lyapunov::distance_bracket(gksl::DensityOperator::number_state(dim, 1).matrix(), g, n);
  CHECK(b.lower == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.ground_bound == doctest::Approx(2.0).epsilon(1e-12));

  const auto on = lyapunov::distance_bracket(gksl::DensityOperator::number_state(dim, 0).matrix(), g, n);
  CHECK(on.lower == doctest::Approx(0.0));
  CHECK(on.upper == doctest::Approx(0.0));
  CHECK_THROWS_AS(lyapunov::distance_bracket(ComplexMatrix::Identity(3, 3) / 3.0, g, n), InvalidInput);
}

TEST_CASE("qutrit brackets contain the brute-force distance") {
  std::mt19937_64 rng(42);
  ComplexMatrix a = ComplexMatrix::Zero(3, 3);
  a.diagonal() << 0.0, 1.0, 3.0;
  const auto g = lyapunov::ground_set(a);
  for (int i = 0; i < 200; ++i) {
    const ComplexMatrix rho = testing::random_density_matrix(3, 1 + i % 3, rng);
    const auto b = lyapunov::distance_bracket(rho, g, a);
    const double d = lyapunov::brute_force_distance(rho, g.projector);
    CHECK(d >= b.lower - 1e-4);
    CHECK(d <= b.upper + 1e-4);
  }
  ComplexMatrix a2 = ComplexMatrix::Zero(3, 3);
  a2.diagonal() << 0.0, 0.0, 2.0;
  const auto g2 = lyapunov::ground_set(a2);
  lyapunov::SearchBudget budget;
  budget.starts = 8;
  for (int i = 0; i < 10; ++i) {
    const ComplexMatrix rho = testing::random_density_matrix(3, 3, rng);
    const auto b = lyapunov::distance_bracket(rho, g2, a2);
    const double d = lyapunov::brute_force_distance(rho, g2.projector, budget);
    CHECK(d >= b.lower - 1e-4);
    CHECK(d <= b.upper + 1e-4);
    CHECK(0.25 * g2.p1 * d * d <= opalg::trace_product(a2, rho).real() + 1e-6);
  }
}

TEST_CASE("brute-force distance closed cases") {
  const ComplexMatrix p0 = opalg::leading_projector(2, 1);
  ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
  rho.diagonal() << 0.7, 0.3;
  CHECK(lyapunov::brute_force_distance(rho, p0) == doctest::Approx(0.6).epsilon(1e-6));

  const ComplexMatrix p2 = opalg::leading_projector(4, 2);
  CHECK(lyapunov::brute_force_distance(gksl::DensityOperator::number_state(4, 3).matrix(), p2) ==
        doctest::Approx(2.0).epsilon(1e-8));

  std::mt19937_64 rng(43);
  ComplexMatrix inside = ComplexMatrix::Zero(4, 4);
  inside.topLeftCorner(2, 2) = testing::random_density_matrix(2, 2, rng);
  CHECK(lyapunov::brute_force_distance(inside, p2) < 1e-8);
}

TEST_CASE("brute-force distance rejects unsupported ranks") {
  const ComplexMatrix rho = gksl::DensityOperator::number_state(5, 0).matrix();
  CHECK_THROWS_AS(lyapunov::brute_force_distance(rho, ComplexMatrix::Zero(5, 5)), InvalidInput);
  CHECK_THROWS_AS(lyapunov::brute_force_distance(rho, opalg::leading_projector(5, 4)), InvalidInput);
  CHECK_THROWS_AS(lyapunov::brute_force_distance(rho, opalg::leading_projector(4, 1)), InvalidInput);
}

TEST_CASE("batched brute force is seed-stable and matches the serial path") {
  std::mt19937_64 rng(44);
  std::vector<ComplexMatrix> rhos, projectors;
  for (int i = 0; i < 6; ++i) {
    rhos.push_back(testing::random_density_matrix(4, 2, rng));
    projectors.push_back(opalg::leading_projector(4, 2));
  }
  lyapunov::SearchBudget budget;
  budget.starts = 4;
  const auto serial = lyapunov::brute_force_distance_batch(rhos, projectors, budget, kernels::Exec::serial);
  const auto parallel = lyapunov::brute_force_distance_batch(rhos, projectors, budget, kernels::Exec::parallel);
  REQUIRE(serial.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(serial[i] == parallel[i]);
    lyapunov::SearchBudget b = budget;
    b.seed = budget.seed + static_cast<std::uint64_t>(i);
    CHECK(serial[i] == lyapunov::brute_force_distance(rhos[i], projectors[i], b));
  }
  CHECK_THROWS_AS(lyapunov::brute_force_distance_batch(rhos, std::span<const ComplexMatrix>(projectors).first(2)),
                  InvalidInput);
}

TEST_CASE("verdict names") {
  CHECK(lyapunov::to_string(lyapunov::Verdict::global_exponential) == "global_exponential");
  CHECK(lyapunov::to_string(lyapunov::Verdict::inconclusive) == "inconclusive");
}
