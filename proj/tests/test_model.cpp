#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skinbreather/stationary.hpp"
#include "support.hpp"

using namespace skinbreather;

TEST_CASE("residual of a single site") {
  LatticeParams p = LatticeParams::unidirectional(1);
  Eigen::VectorXd psi(1);
  psi << 1.0;
  const auto r = residual<double>(psi, 2.0, 2.0, p);
  REQUIRE(r.size() == 2);
  CHECK(r(0) == 0.0);
  CHECK(r(1) == 0.0);
}

TEST_CASE("boundary mode solves the unidirectional chain for any Gamma") {
  const auto p = LatticeParams::unidirectional(4);
  for (double g : {-3.0, 0.0, 0.7, 12.0}) {
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(4);
    psi(0) = 1.0;
    CHECK(residual<double>(psi, g, g, p).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("site-2 amplitudes from the cubic roots solve the two-site chain") {
  const auto p = LatticeParams::unidirectional(2);
  const double g = 4.0;
  const auto roots = oracle::site2_cubic(g);
  REQUIRE(roots.size() == 3);
  for (double e : roots) {
    // psi_2 = (E - Gamma psi_1^2) psi_1 fixes the sign of psi_2.
    const double p1 = std::sqrt(1.0 - e / g);
    const double p2 = std::copysign(std::sqrt(e / g), (e - g * p1 * p1) * p1);
    Eigen::VectorXd psi(2);
    psi << p1, p2;
    CHECK(residual<double>(psi, e, g, p).norm() < 1e-12);
  }
}

TEST_CASE("residual uses cyclic neighbours under periodic boundaries") {
  LatticeParams p{3, 1.0, 0.5, Boundary::Periodic, 0.0};
  Eigen::VectorXd psi(3);
  psi << 0.2, -0.3, 0.5;
  const double e = 0.7, g = 1.3;
  const auto r = residual<double>(psi, e, g, p);
  CHECK(r(0) == doctest::Approx(1.0 * psi(1) + 0.5 * psi(2) + g * std::pow(psi(0), 3) - e * psi(0)));
  CHECK(r(2) == doctest::Approx(1.0 * psi(0) + 0.5 * psi(1) + g * std::pow(psi(2), 3) - e * psi(2)));
  CHECK(r(3) == doctest::Approx(psi.squaredNorm() - 1.0));
}

TEST_CASE("residual rejects a length mismatch") {
  const auto p = LatticeParams::unidirectional(4);
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(residual<double>(psi, 1.0, 1.0, p), std::invalid_argument);
}

TEST_CASE("sign map on the boundary mode") {
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(4);
  psi(0) = 1.0;
  const auto s = make_state<double>(psi, 1.0, 1.0);
  const auto m = sign_map(s);
  CHECK(m.gamma == -1.0);
  CHECK(m.energy == -1.0);
  CHECK(m.psi(0) == 1.0);  // (-1, 0, 0, 0) after the phase convention
  CHECK(m.psi.tail(3).isZero());
}

TEST_CASE("sign map preserves the residual norm and is an involution") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = 1 + trial % 6;
    LatticeParams p{L, u(rng), trial % 2 ? 0.0 : u(rng), Boundary::Open, 0.0};
    const auto s = make_state<double>(oracle::random_unit(L, rng), u(rng), u(rng));
    const auto m = sign_map(s);
    CHECK(residual(m, p).norm() == doctest::Approx(residual(s, p).norm()).epsilon(1e-14));
    const auto back = sign_map(m);
    CHECK((back.psi - s.psi).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.energy == s.energy);
    CHECK(back.gamma == s.gamma);
  }
}

TEST_CASE("sign map of solved states gives solutions") {
  const auto p = LatticeParams::unidirectional(4);
  for (int m = 1; m <= 4; ++m) {
    const auto s = solve_sdb_branch(4, m, 2.0);
    CHECK(residual(sign_map(s), p).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("gauge transform is the identity for reciprocal hopping") {
  LatticeParams p{4, 1.0, 1.0, Boundary::Open, 0.0};
  std::mt19937_64 rng(3);
  const auto s = make_state<double>(oracle::random_unit(4, rng), 0.3, 2.0);
  const auto g = gauge_transform(s, p);
  CHECK(g.ratio == 1.0);
  CHECK((g.phi - s.psi).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("gauged amplitudes satisfy the reciprocal equation with site-dependent nonlinearity") {
  LatticeParams p{4, 1.0, 0.25, Boundary::Open, 0.0};
  const auto states = solve_nonreciprocal(p, 2.0);
  REQUIRE(!states.empty());
  for (const auto& s : states) {
    const auto g = gauge_transform(s, p);
    // Hermitian-coefficient residual assembled independently.
    const double t = std::sqrt(p.hop_right / p.hop_left), j = std::sqrt(p.hop_left * p.hop_right);
    double worst = 0.0, weighted = 0.0;
    for (int n = 0; n < 4; ++n) {
      const double next = n + 1 < 4 ? g.phi(n + 1) : 0.0, prev = n > 0 ? g.phi(n - 1) : 0.0;
      const double gamma_n = std::pow(t, 2 * (n + 1)) * s.gamma;
      worst = std::max(worst, std::abs(j * (next + prev) + gamma_n * std::pow(g.phi(n), 3) - s.energy * g.phi(n)));
      weighted += std::pow(t, 2 * (n + 1)) * g.phi(n) * g.phi(n);
    }
    CHECK(worst < 1e-10);
    CHECK(weighted == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((gauge_inverse(g.phi, p) - s.psi).lpNorm<Eigen::Infinity>() < 1e-13);
  }
}

TEST_CASE("gauge transform needs J_R / J_L > 0") {
  const auto s = solve_sdb_branch(4, 2, 1.0);
  CHECK_THROWS_AS(gauge_transform(s, LatticeParams::unidirectional(4)), std::domain_error);
  LatticeParams opposite{4, 1.0, -0.5, Boundary::Open, 0.0};
  CHECK_THROWS_AS(gauge_transform(s, opposite), std::domain_error);
}

TEST_CASE("real-spectrum check flags J_L J_R < 0 only") {
  CHECK_THROWS_AS(require_real_spectrum({4, 1.0, -0.5, Boundary::Open, 0.0}), std::domain_error);
  CHECK_NOTHROW(require_real_spectrum({4, 1.0, 0.0, Boundary::Open, 0.0}));
  CHECK_NOTHROW(require_real_spectrum({4, -1.0, -0.5, Boundary::Periodic, 0.0}));
  CHECK_THROWS_AS(LatticeParams({0, 1.0, 0.0, Boundary::Open, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(LatticeParams({2, 1.0, 0.0, Boundary::Open, -1.0}).validate(), std::invalid_argument);
}

TEST_CASE("mean-field mapping of the lossy boson chain") {
  auto a = lindblad_to_dnlse(1.0, 2.0, 1.0);
  CHECK(a.hop_left == -2.0);
  CHECK(a.hop_right == 0.0);
  CHECK(a.gamma == 1.0);
  CHECK(a.loss == 2.0);
  auto b = lindblad_to_dnlse(1.0, 0.0, 0.0);
  CHECK(b.hop_left == -1.0);
  CHECK(b.hop_right == -1.0);
  auto c = lindblad_to_dnlse(1.0, 1.0, 3.0);
  CHECK(c.hop_left == -1.5);
  CHECK(c.hop_right == -0.5);
  CHECK(c.gamma == 3.0);
  CHECK(c.loss == 1.0);
  CHECK_THROWS_AS(lindblad_to_dnlse(1.0, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("phase convention and labels") {
  Eigen::VectorXd psi(4);
  psi << 0.0, -0.8, 0.6, 0.0;
  const auto s = make_state<double>(psi, 1.0, 1.0);
  CHECK(s.psi(1) == 0.8);
  CHECK(s.pattern == Pattern{2, 3});
  CHECK(s.support == 3);
  CHECK(pattern_from_string(pattern_to_string({1, 3, 4})) == Pattern{1, 3, 4});
  CHECK(boundary_from_string("pbc") == Boundary::Periodic);
  CHECK_THROWS_AS(boundary_from_string("twisted"), std::invalid_argument);
}
