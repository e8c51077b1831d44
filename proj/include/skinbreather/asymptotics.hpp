#pragma once

#include "skinbreather/stationary.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace skinbreather {

/// 3^{m-1}, the weak-coupling energy exponent of branch m.
long long alpha_exponent(int m);
/// (3^{n-1} - 1) / 2, the weak-coupling amplitude exponent of site n.
long long beta_exponent(int n);

/// E_m ~ Gamma^{3^{m-1}} for small Gamma.
template <typename Scalar>
Scalar weak_energy(int m, const Scalar& gamma) {
  return ipow<Scalar>(gamma, alpha_exponent(m));
}

/// Unnormalized psi_n = (-Gamma)^{(3^{n-1}-1)/2}, n = 1..m.
template <typename Scalar>
Vector<Scalar> weak_wavefunction(int m, const Scalar& gamma) {
  if (m < 1) throw std::invalid_argument("weak_wavefunction: m must be positive");
  Vector<Scalar> psi(m);
  for (int n = 1; n <= m; ++n) psi(n - 1) = ipow<Scalar>(-gamma, beta_exponent(n));
  return psi;
}

struct StrongCoupling {
  double energy = 0.0;            // Gamma / m
  std::uint64_t degeneracy = 0;   // binomial(L, m)
  double site_intensity = 0.0;    // 1 / m on every occupied site
};

StrongCoupling strong_energy(int sites, int m, double gamma);

std::uint64_t binomial(int n, int k);

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> gamma_range{0.0, 0.0};
};

/// Least-squares line through (log Gamma, log E). The logs and sums are taken
/// in Scalar so that energies below the double range can still be fitted.
template <typename Scalar>
ScalingFit fit_power_law(const std::vector<std::pair<Scalar, Scalar>>& points) {
  using std::log;
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: needs at least 3 points");
  const Scalar count(static_cast<long>(points.size()));
  Scalar sx(0), sy(0);
  std::vector<Scalar> xs, ys;
  for (const auto& [g, e] : points) {
    if (!(g > 0) || !(e > 0)) throw std::domain_error("fit_power_law: Gamma and E must be positive");
    xs.push_back(log(g));
    ys.push_back(log(e));
    sx += xs.back();
    sy += ys.back();
  }
  const Scalar mx = sx / count, my = sy / count;
  Scalar sxx(0), sxy(0), syy(0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw std::domain_error("fit_power_law: all Gamma values coincide");
  const Scalar slope = sxy / sxx;
  Scalar ss_res(0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Scalar r = ys[i] - (my + slope * (xs[i] - mx));
    ss_res += r * r;
  }
  ScalingFit fit;
  fit.exponent = to_double(slope);
  fit.intercept = to_double(my - slope * mx);
  double r2 = syy == 0 ? 1.0 : to_double(Scalar(1) - ss_res / syy);
  fit.r_squared = std::min(1.0, std::max(0.0, r2));
  double lo = to_double(points.front().first), hi = lo;
  for (const auto& p : points) {
    lo = std::min(lo, to_double(p.first));
    hi = std::max(hi, to_double(p.first));
  }
  fit.gamma_range = {lo, hi};
  return fit;
}

struct DecayPoint {
  int site = 0;  // 1-based
  double y = 0.0;
};

/// y_n = log_3[3 log_Gamma(Gamma psi_n^2)]; zero amplitudes are skipped.
template <typename Scalar>
std::vector<DecayPoint> decay_coordinates(const BasicStationaryState<Scalar>& state) {
  using std::log;
  if (!(state.gamma > 0 && state.gamma < 1)) throw std::domain_error("decay_coordinates: needs 0 < Gamma < 1");
  const Scalar log_gamma = log(state.gamma);
  const Scalar log3 = log(Scalar(3));
  std::vector<DecayPoint> out;
  for (Eigen::Index n = 0; n < state.psi.size(); ++n) {
    const Scalar p = state.psi(n);
    if (p == 0) continue;
    const Scalar inner = Scalar(3) * log(state.gamma * p * p) / log_gamma;
    if (!(inner > 0)) continue;
    out.push_back({static_cast<int>(n) + 1, to_double(log(inner) / log3)});
  }
  return out;
}

/// One branch of the weak-coupling scan: energies on a log-spaced Gamma window
/// and the fitted exponent. `energy_text` keeps the full working precision.
struct BranchScaling {
  int m = 0;
  std::vector<double> gammas;
  std::vector<double> energies;
  std::vector<std::string> energy_text;
  ScalingFit fit;
};

std::vector<double> log_spaced(double lo, double hi, int count);

/// Solves branch m of the unidirectional chain on `count` log-spaced points in
/// [lo, hi] and fits log E against log Gamma. Runs in extended precision when
/// cfg.precision_digits > 16.
BranchScaling scan_branch_scaling(int sites, int m, double lo, double hi, int count, const SolverConfig& cfg);

/// decay_coordinates of the SDB m at Gamma, solved at cfg.precision_digits.
std::vector<DecayPoint> sdb_decay_coordinates(int sites, int m, double gamma, const SolverConfig& cfg);

}  // namespace skinbreather
