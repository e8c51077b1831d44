#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skinbreather/stability.hpp"
#include "support.hpp"

using namespace skinbreather;

namespace {

bool same_spectrum(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& z : a) {
    bool hit = false;
    for (std::size_t j = 0; j < b.size() && !hit; ++j)
      if (!used[j] && std::abs(z - b[j]) < tol) used[j] = hit = true;
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("single-site linearization") {
  const auto p = LatticeParams::unidirectional(1);
  Eigen::VectorXd psi(1);
  psi << 1.0;
  const auto s = make_state<double>(psi, 2.0, 2.0);
  const auto c = build_stability_matrix(s, p);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.0, 0.0, -4.0, 0.0;
  CHECK((c - expected).norm() == 0.0);
  const auto r = classify(s, p);
  REQUIRE(r.eigenvalues.size() == 2);
  for (const auto& z : r.eigenvalues) CHECK(std::abs(z) < 1e-12);
  CHECK(r.stable);
}

TEST_CASE("boundary-mode linearization entries") {
  const auto p = LatticeParams::unidirectional(4);
  const double g = 3.0;
  const auto s = solve_sdb_branch(4, 1, g);
  const auto c = build_stability_matrix(s, p);
  REQUIRE(c.rows() == 8);
  REQUIRE(c.cols() == 8);
  const Eigen::MatrixXd a = c.topRightCorner(4, 4), b = -c.bottomLeftCorner(4, 4);
  const double da[4] = {g - g, -g, -g, -g}, db[4] = {3 * g - g, -g, -g, -g};
  for (int n = 0; n < 4; ++n) {
    CHECK(a(n, n) == da[n]);
    CHECK(b(n, n) == db[n]);
    if (n + 1 < 4) {
      CHECK(a(n, n + 1) == 1.0);
      CHECK(b(n, n + 1) == 1.0);
    }
  }
  CHECK(c.topLeftCorner(4, 4).isZero());
  CHECK(c.bottomRightCorner(4, 4).isZero());
  CHECK(c.trace() == 0.0);
}

TEST_CASE("non-solutions are rejected") {
  const auto p = LatticeParams::unidirectional(2);
  Eigen::VectorXd psi(2);
  psi << 0.6, 0.8;
  CHECK_THROWS_AS(build_stability_matrix(make_state<double>(psi, 1.0, 1.0), p), std::invalid_argument);
  CHECK_THROWS_AS(classify(make_state<double>(psi, 1.0, 1.0), p), std::invalid_argument);
  StabilityOptions neg;
  neg.tau = -1.0;
  CHECK_THROWS_AS(classify(solve_sdb_branch(2, 1, 1.0), p, neg), std::invalid_argument);
}

TEST_CASE("SDBs are stable at weak, intermediate and strong coupling") {
  const auto p = LatticeParams::unidirectional(4);
  for (double g : {0.5, 2.0, 12.0})
    for (int m = 1; m <= 4; ++m) {
      CAPTURE(g);
      CAPTURE(m);
      const auto r = classify(solve_sdb_branch(4, m, g), p);
      CHECK(r.stable);
      CHECK(r.eigenvalues.size() == 8);
      CHECK(!r.extended_model);
    }
}

TEST_CASE("unidirectional spectrum matches the triangular formula") {
  // -AB is upper triangular, so lambda^2 = -(Gamma psi_n^2 - E)(3 Gamma psi_n^2 - E).
  const auto p = LatticeParams::unidirectional(4);
  for (double g : {0.7, 5.0, 12.0}) {
    for (const auto& f : find_solutions(p, g, {}).solutions) {
      // Compared as lambda^2: the phase mode has Gamma psi_m^2 - E at roundoff
      // level, and a square root would inflate that to ~1e-8 in lambda.
      const auto& s = f.state;
      std::vector<std::complex<double>> expected, squared;
      double formula_max = -1.0;
      for (int n = 0; n < 4; ++n) {
        const double gp = g * s.psi(n) * s.psi(n);
        const double q = -(gp - s.energy) * (3 * gp - s.energy);
        expected.insert(expected.end(), 2, q);
        formula_max = std::max(formula_max, q);
      }
      const auto r = classify(s, p);
      for (const auto& z : r.eigenvalues) squared.push_back(z * z);
      CHECK(same_spectrum(squared, expected, 1e-8 * std::max(1.0, s.energy * s.energy)));
      CHECK(r.stable == (formula_max <= 1e-10));
    }
  }
}

TEST_CASE("eigenvalues of C are +-sqrt of eigenvalues of -AB") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.3, 10.0);
  for (int trial = 0; trial < 12; ++trial) {
    LatticeParams p{3 + trial % 2, 1.0, trial % 3 == 0 ? 0.0 : 0.4, trial % 4 == 3 ? Boundary::Periodic : Boundary::Open,
                    0.0};
    const auto sols = find_solutions(p, u(rng), {}).solutions;
    REQUIRE(!sols.empty());
    const auto& s = sols[rng() % sols.size()].state;
    const Eigen::MatrixXd c = stability_matrix(s, p);
    const int L = p.sites;
    const Eigen::MatrixXd a = c.topRightCorner(L, L), b = -c.bottomLeftCorner(L, L);
    Eigen::EigenSolver<Eigen::MatrixXd> es(-(a * b), false);
    std::vector<std::complex<double>> expected;
    for (int i = 0; i < L; ++i) {
      const auto root = std::sqrt(std::complex<double>(es.eigenvalues()(i)));
      expected.push_back(root);
      expected.push_back(-root);
    }
    const auto r = classify(s, p, {1e-8, 16});
    CHECK(same_spectrum(r.eigenvalues, expected, 1e-5));
    CHECK(r.extended_model == (p.hop_right != 0.0 || p.boundary == Boundary::Periodic));
  }
}

TEST_CASE("spectrum comes in +- pairs and C is traceless") {
  const auto p = LatticeParams::unidirectional(4);
  for (double g : {1.0, 4.0, 12.0})
    for (const auto& f : find_solutions(p, g, {}).solutions) {
      const auto r = classify(f.state, p);
      std::vector<std::complex<double>> negated;
      for (const auto& z : r.eigenvalues) negated.push_back(-z);
      CHECK(same_spectrum(r.eigenvalues, negated, 1e-8));
      CHECK(stability_matrix(f.state, p).trace() == 0.0);
      CHECK(r.stable == (r.max_real <= r.tau));
    }
}

TEST_CASE("a stable site-2 state appears just above Gamma_c") {
  const auto p = LatticeParams::unidirectional(4);
  const double g = bifurcation_gamma_c() + 0.01;
  int stable_new = 0, new_roots = 0;
  for (const auto& f : find_solutions(p, g, {}).solutions) {
    if (f.state.support != 2 || f.sdb_label != 0) continue;
    ++new_roots;
    stable_new += classify(f.state, p).stable;
  }
  CHECK(new_roots == 2);
  CHECK(stable_new >= 1);
}

TEST_CASE("Gamma = 0 is not classified") {
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(3);
  psi(0) = 1.0;
  CHECK_THROWS_AS(classify(make_state<double>(psi, 0.0, 0.0), LatticeParams::unidirectional(3)), std::domain_error);
}

TEST_CASE("stability map") {
  const auto p = LatticeParams::unidirectional(4);
  CHECK(stability_map({}, p).empty());

  const auto sweep = sweep_spectrum(p, {0.0, 11.9, 12.0});
  const auto annotated = stability_map(sweep.branches, p);
  REQUIRE(annotated.size() == sweep.branches.size());
  int stable_at_12 = 0, unclassified = 0;
  for (const auto& b : annotated)
    for (const auto& s : b.samples) {
      if (!s.report) {
        ++unclassified;
        CHECK(s.state.gamma == 0.0);
        CHECK(!s.error.empty());
        continue;
      }
      if (s.state.gamma == 12.0 && s.report->stable) ++stable_at_12;
    }
  CHECK(unclassified == 1);
  CHECK(stable_at_12 == 15);
}

TEST_CASE("periodic stable states come in translation multiplets") {
  LatticeParams p{4, 1.0, 0.0, Boundary::Periodic, 0.0};
  const auto sols = solve_pbc(p, 12.0);
  std::vector<StationaryState> stable;
  for (const auto& s : sols) {
    const auto r = classify(s, p);
    CHECK(r.extended_model);
    if (r.stable) stable.push_back(s);
  }
  REQUIRE(!stable.empty());
  for (const auto& s : stable) {
    Eigen::VectorXd moved(4);
    for (int n = 0; n < 4; ++n) moved((n + 1) % 4) = s.psi(n);
    const auto t = make_state<double>(moved, s.energy, s.gamma);
    bool found = false;
    for (const auto& o : stable) found = found || state_distance(o, t) < 1e-8;
    CHECK(found);
  }
}
