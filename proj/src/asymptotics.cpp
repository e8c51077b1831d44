#include "skinbreather/asymptotics.hpp"

#include <cmath>

namespace skinbreather {

long long alpha_exponent(int m) {
  if (m < 1 || m > 39) throw std::invalid_argument("alpha_exponent: m out of range");
  return ipow<long long>(3, m - 1);
}

long long beta_exponent(int n) { return (alpha_exponent(n) - 1) / 2; }

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

StrongCoupling strong_energy(int sites, int m, double gamma) {
  if (sites < 1 || m < 1 || m > sites) throw std::invalid_argument("strong_energy: needs 1 <= m <= L");
  return {gamma / m, binomial(sites, m), 1.0 / m};
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw std::invalid_argument("log_spaced: needs 0 < lo <= hi, count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

template <typename Scalar>
BranchScaling scan(int sites, int m, const std::vector<double>& grid, const SolverConfig& cfg) {
  std::optional<PrecisionGuard> guard;
  if constexpr (is_extended_v<Scalar>) guard.emplace(cfg.precision_digits);
  BranchScaling out;
  out.m = m;
  std::vector<std::pair<Scalar, Scalar>> points;
  for (double g : grid) {
    const Scalar gamma(g);
    auto s = solve_sdb_branch<Scalar>(sites, m, gamma, cfg);
    points.emplace_back(gamma, s.energy);
    out.gammas.push_back(g);
    out.energies.push_back(to_double(s.energy));
    out.energy_text.push_back(format_scalar(s.energy));
  }
  out.fit = fit_power_law(points);
  return out;
}

}  // namespace

BranchScaling scan_branch_scaling(int sites, int m, double lo, double hi, int count, const SolverConfig& cfg) {
  const auto grid = log_spaced(lo, hi, count);
  if (cfg.precision_digits > 16) return scan<Extended>(sites, m, grid, cfg);
  return scan<double>(sites, m, grid, cfg);
}

std::vector<DecayPoint> sdb_decay_coordinates(int sites, int m, double gamma, const SolverConfig& cfg) {
  if (cfg.precision_digits > 16) {
    PrecisionGuard guard(cfg.precision_digits);
    return decay_coordinates(solve_sdb_branch<Extended>(sites, m, Extended(gamma), cfg));
  }
  return decay_coordinates(solve_sdb_branch<double>(sites, m, gamma, cfg));
}

}  // namespace skinbreather
