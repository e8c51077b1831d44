#pragma once

// Reference computations used by the tests. None of these call into the
// solvers under test.

#include "skinbreather/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

/// Real roots of a x^3 + b x^2 + c x + d via the companion matrix eigenvalues.
inline std::vector<double> cubic_real_roots(double a, double b, double c, double d, double imag_tol = 1e-7) {
  Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
  comp(0, 0) = -b / a;
  comp(0, 1) = -c / a;
  comp(0, 2) = -d / a;
  comp(1, 0) = 1.0;
  comp(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(comp);
  std::vector<double> out;
  for (int i = 0; i < 3; ++i)
    if (std::abs(es.eigenvalues()(i).imag()) < imag_tol) out.push_back(es.eigenvalues()(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> site2_cubic(double gamma) {
  return cubic_real_roots(4.0, -8.0 * gamma, 5.0 * gamma * gamma + 1.0, -gamma * gamma * gamma);
}

struct Root {
  double energy;
  Eigen::VectorXd psi;
};

/// Every real solution of the unidirectional open chain (J_L = 1, J_R = 0) at
/// Gamma != 0, by brute force. A solution with support k obeys
/// psi_{n+1} = (E - Gamma psi_n^2) psi_n for n < k, E = Gamma psi_k^2 and unit norm,
/// so it is a root of two equations in (E, a = psi_1 > 0). Each (E, a) start of
/// a dense grid runs Newton with a finite-difference Jacobian in the squared
/// variable s = a^2; distinct converged roots are returned.
inline std::vector<Root> unidirectional_roots(int sites, double gamma, int grid = 90) {
  std::vector<Root> roots;
  auto chain = [&](int k, double e, double a, Eigen::VectorXd& psi) {
    psi = Eigen::VectorXd::Zero(sites);
    psi(0) = a;
    for (int n = 0; n + 1 < k; ++n) psi(n + 1) = (e - gamma * psi(n) * psi(n)) * psi(n);
  };
  auto equations = [&](int k, double e, double s, Eigen::Vector2d& f) {
    Eigen::VectorXd psi;
    chain(k, e, std::sqrt(std::max(s, 0.0)), psi);
    f(0) = e - gamma * psi(k - 1) * psi(k - 1);
    f(1) = psi.squaredNorm() - 1.0;
  };
  const double span = std::abs(gamma) + 3.0;
  for (int k = 1; k <= sites; ++k) {
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        double e = -span + 2.0 * span * (i + 0.5) / grid;
        double s = (j + 0.5) / grid;
        Eigen::Vector2d f;
        bool ok = false;
        for (int it = 0; it < 80; ++it) {
          equations(k, e, s, f);
          if (!f.allFinite()) break;
          if (f.lpNorm<Eigen::Infinity>() < 1e-14) {
            ok = true;
            break;
          }
          Eigen::Matrix2d jac;
          const double he = 1e-7 * std::max(1.0, std::abs(e)), hs = 1e-7 * std::max(1e-3, s);
          Eigen::Vector2d fe, fs;
          equations(k, e + he, s, fe);
          equations(k, e, s + hs, fs);
          jac.col(0) = (fe - f) / he;
          jac.col(1) = (fs - f) / hs;
          const Eigen::Vector2d step = jac.fullPivLu().solve(-f);
          if (!step.allFinite()) break;
          e += step(0);
          s = std::clamp(s + step(1), 1e-300, 1.0);
        }
        if (!ok || !(s > 0.0)) continue;
        Eigen::VectorXd psi;
        chain(k, e, std::sqrt(s), psi);
        bool full = true;
        for (int n = 0; n < k; ++n) full = full && std::abs(psi(n)) > 1e-8;
        if (!full) continue;
        bool seen = false;
        for (const auto& r : roots)
          seen = seen || (std::abs(r.energy - e) < 1e-7 && (r.psi - psi).lpNorm<Eigen::Infinity>() < 1e-7);
        if (!seen) roots.push_back({e, psi});
      }
    }
  }
  return roots;
}

/// Energies of the two-site Hermitian chain (J_L = J_R = 1) with psi = (cos t, sin t),
/// from sign changes of g(t) = sin t (sin t + Gamma cos^3 t) - cos t (cos t + Gamma sin^3 t)
/// on a fine grid over [0, pi), refined by bisection.
inline std::vector<double> two_site_hermitian_energies(double gamma, int grid = 20000) {
  const double pi = std::acos(-1.0);
  auto g = [&](double t) {
    const double c = std::cos(t), s = std::sin(t);
    return s * (s + gamma * c * c * c) - c * (c + gamma * s * s * s);
  };
  auto energy = [&](double t) {
    const double c = std::cos(t), s = std::sin(t);
    return std::abs(c) > std::abs(s) ? (s + gamma * c * c * c) / c : (c + gamma * s * s * s) / s;
  };
  std::vector<double> out;
  for (int i = 0; i < grid; ++i) {
    double lo = pi * i / grid, hi = pi * (i + 1) / grid;
    double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) {
      out.push_back(energy(lo));
      continue;
    }
    if (glo * ghi >= 0.0) continue;  // a root sitting on hi is taken by the next interval
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(mid);
      if ((gm < 0) == (glo < 0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    out.push_back(energy(0.5 * (lo + hi)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Eigen::VectorXd random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v.normalized();
}

inline Eigen::VectorXcd random_complex_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = {nd(rng), nd(rng)};
  return v.normalized();
}

/// Multisets equal within tol after sorting (complex: by real, then imaginary part).
inline bool same_multiset(std::vector<double> a, std::vector<double> b, double tol) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace oracle
