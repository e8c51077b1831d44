#pragma once

#include "skinbreather/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skinbreather {

struct SolverConfig {
  double newton_tol = 1e-12;  // max-norm of the stationary residual
  int max_iter = 100;
  int n_seeds = 24;           // random starts on top of the structured seeds
  double dedup_tol = 1e-6;    // (E, psi) max-norm distance for duplicates
  int precision_digits = 15;  // significand size for extended-precision solves
  std::uint64_t rng_seed = 0x5DB0u;

  void validate() const;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class BranchIdentityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Skin-breather branches of the unidirectional open chain.
//
// With J_R = 0 the stationary equation is a forward recurrence
//   psi_{n+1} = (E - Gamma psi_n^2) psi_n,
// so a state supported on sites 1..m is fixed by (E, psi_1) and the two
// conditions E = Gamma psi_m^2 and sum psi_n^2 = 1. The product form keeps
// full relative accuracy for the tiny tails of the weak-coupling branches.
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
struct SdbNewtonResult {
  bool converged = false;
  Scalar energy{0};
  Scalar psi1{0};
  double merit = 0.0;
  int iterations = 0;
};

/// psi_1..psi_m from the recurrence, plus d/dE and d/dpsi_1.
template <typename Scalar>
void sdb_recurrence(int m, const Scalar& gamma, const Scalar& energy, const Scalar& psi1, Vector<Scalar>& psi,
                    Vector<Scalar>& d_energy, Vector<Scalar>& d_psi1) {
  psi.resize(m);
  d_energy.resize(m);
  d_psi1.resize(m);
  psi(0) = psi1;
  d_energy(0) = Scalar(0);
  d_psi1(0) = Scalar(1);
  for (int n = 0; n + 1 < m; ++n) {
    const Scalar sq = psi(n) * psi(n);
    const Scalar slope = energy - Scalar(3) * gamma * sq;
    psi(n + 1) = (energy - gamma * sq) * psi(n);
    d_energy(n + 1) = psi(n) + slope * d_energy(n);
    d_psi1(n + 1) = slope * d_psi1(n);
  }
}

template <typename Scalar>
SdbNewtonResult<Scalar> sdb_newton(int m, const Scalar& gamma, Scalar energy, Scalar psi1, int max_iter) {
  using std::abs;
  const Scalar eps = unit_roundoff<Scalar>();
  const Scalar step_tol = Scalar(64) * eps;
  const Scalar merit_tol = (Scalar(16) * eps) * (Scalar(16) * eps);
  Vector<Scalar> psi, de, da;

  // Scaled residuals: the energy condition is measured relative to its own size.
  auto evaluate = [&](const Scalar& e, const Scalar& a, Scalar& r1, Scalar& r2, Scalar& scale) {
    sdb_recurrence(m, gamma, e, a, psi, de, da);
    const Scalar pm2 = gamma * psi(m - 1) * psi(m - 1);
    scale = abs(e) + abs(pm2);
    if (scale == 0) scale = Scalar(1);
    r1 = e - pm2;
    r2 = psi.squaredNorm() - Scalar(1);
  };

  SdbNewtonResult<Scalar> out;
  Scalar r1, r2, scale;
  evaluate(energy, psi1, r1, r2, scale);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const Scalar merit = (r1 / scale) * (r1 / scale) + r2 * r2;
    if (!(merit == merit)) break;  // NaN

    const Scalar j11 = Scalar(1) - Scalar(2) * gamma * psi(m - 1) * de(m - 1);
    const Scalar j12 = -Scalar(2) * gamma * psi(m - 1) * da(m - 1);
    const Scalar j21 = Scalar(2) * psi.dot(de);
    const Scalar j22 = Scalar(2) * psi.dot(da);
    const Scalar det = j11 * j22 - j12 * j21;
    if (det == 0) break;
    const Scalar step_e = -(j22 * r1 - j12 * r2) / det;
    const Scalar step_a = -(-j21 * r1 + j11 * r2) / det;

    // Backtracking: halve the step while the scaled merit grows, at most 30 times.
    Scalar lambda(1), e_new, a_new, nr1, nr2, nscale, nmerit;
    for (int halvings = 0;; ++halvings) {
      e_new = energy + lambda * step_e;
      a_new = psi1 + lambda * step_a;
      evaluate(e_new, a_new, nr1, nr2, nscale);
      nmerit = (nr1 / nscale) * (nr1 / nscale) + nr2 * nr2;
      if (nmerit == nmerit && (nmerit <= merit || halvings >= 30)) break;
      lambda /= 2;
    }
    const bool small_step = lambda == Scalar(1) &&
        abs(lambda * step_e) <= step_tol * abs(energy) + eps * eps && abs(lambda * step_a) <= step_tol;
    energy = e_new;
    psi1 = a_new;
    r1 = nr1;
    r2 = nr2;
    scale = nscale;
    if (small_step || nmerit <= merit_tol) {
      out.converged = true;
      break;
    }
  }
  out.energy = energy;
  out.psi1 = psi1;
  out.merit = to_double((r1 / scale) * (r1 / scale) + r2 * r2);
  return out;
}

template <typename Scalar>
BasicStationaryState<Scalar> assemble_sdb(int sites, int m, const Scalar& gamma, const Scalar& energy,
                                          const Scalar& psi1) {
  Vector<Scalar> head, de, da;
  sdb_recurrence(m, gamma, energy, psi1, head, de, da);
  Vector<Scalar> psi = Vector<Scalar>::Zero(sites);
  psi.head(m) = head;
  auto state = make_state<Scalar>(std::move(psi), energy, gamma);
  state.support = m;
  return state;
}

template <typename Scalar>
void check_sdb(const BasicStationaryState<Scalar>& s, int m, const SolverConfig& cfg, const LatticeParams& params) {
  for (int n = 0; n < m; ++n)
    if (s.psi(n) == 0)
      throw BranchIdentityError("SDB m=" + std::to_string(m) + " has a vanishing amplitude at site " +
                                std::to_string(n + 1));
  const double res = to_double(residual(s, params).template lpNorm<Eigen::Infinity>());
  if (!(res < cfg.newton_tol))
    throw ConvergenceError("SDB m=" + std::to_string(m) + " residual " + format_scalar(res) + " at Gamma=" + format_scalar(to_double(s.gamma)) +
                               " above tolerance",
                           res);
}

/// Full Newton on (psi_1..psi_m, E) with the tail held at zero. At strong
/// coupling the forward recurrence amplifies roundoff by |E - 3 Gamma psi_n^2|
/// per site, so its residual can miss the tolerance while this system is well
/// conditioned.
template <typename Scalar>
BasicStationaryState<Scalar> polish_sdb(const BasicStationaryState<Scalar>& s, int m, int max_iter) {
  using std::abs;
  const Eigen::Index sites = s.psi.size();
  Vector<Scalar> x(m + 1);
  x.head(m) = s.psi.head(m);
  x(m) = s.energy;
  auto eval = [&](const Vector<Scalar>& y) {
    Vector<Scalar> r(m + 1);
    for (int n = 0; n < m; ++n) {
      const Scalar next = n + 1 < m ? y(n + 1) : Scalar(0);
      r(n) = next + s.gamma * y(n) * y(n) * y(n) - y(m) * y(n);
    }
    r(m) = y.head(m).squaredNorm() - Scalar(1);
    return r;
  };
  Vector<Scalar> r = eval(x);
  Scalar best = r.template lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    Matrix<Scalar> jac = Matrix<Scalar>::Zero(m + 1, m + 1);
    for (int n = 0; n < m; ++n) {
      jac(n, n) = Scalar(3) * s.gamma * x(n) * x(n) - x(m);
      if (n + 1 < m) jac(n, n + 1) = Scalar(1);
      jac(n, m) = -x(n);
      jac(m, n) = Scalar(2) * x(n);
    }
    const Vector<Scalar> trial = x - jac.colPivHouseholderQr().solve(r);
    const Vector<Scalar> rt = eval(trial);
    const Scalar norm = rt.template lpNorm<Eigen::Infinity>();
    if (!(norm < best)) break;
    x = trial;
    r = rt;
    best = norm;
  }
  Vector<Scalar> psi = Vector<Scalar>::Zero(sites);
  psi.head(m) = x.head(m);
  auto out = make_state<Scalar>(std::move(psi), x(m), s.gamma);
  out.support = m;
  return out;
}

template <typename Scalar>
BasicStationaryState<Scalar> finish_sdb(BasicStationaryState<Scalar> state, int m, const SolverConfig& cfg) {
  const LatticeParams params = LatticeParams::unidirectional(static_cast<int>(state.psi.size()));
  const double res = to_double(residual(state, params).template lpNorm<Eigen::Infinity>());
  if (!(res < cfg.newton_tol)) state = polish_sdb(state, m, 8);
  check_sdb(state, m, cfg, params);
  return state;
}

inline void check_sdb_args(int sites, int m) {
  if (sites < 1) throw std::invalid_argument("SDB: lattice needs at least one site");
  if (m < 1 || m > sites) throw std::invalid_argument("SDB: branch index must satisfy 1 <= m <= L");
}

}  // namespace detail

/// Continuation start for the weak-coupling guess E = Gamma^{3^{m-1}}, psi_1 = 1.
inline constexpr double kSdbWeakStart = 0.05;

/// The SDB occupying sites 1..m of the unidirectional open chain, traced by
/// continuation in Gamma from the weak-coupling regime so that the returned
/// state lies on the branch emerging from the exceptional point.
template <typename Scalar>
BasicStationaryState<Scalar> solve_sdb_branch(int sites, int m, const Scalar& gamma, const SolverConfig& cfg) {
  using std::log;
  using std::exp;
  detail::check_sdb_args(sites, m);
  cfg.validate();
  if (!(gamma > 0)) throw std::invalid_argument("SDB: Gamma must be positive");
  std::optional<PrecisionGuard> guard;
  if constexpr (is_extended_v<Scalar>) guard.emplace(cfg.precision_digits);

  const long long alpha = ipow<long long>(3, m - 1);
  // Double cannot hold Gamma^{3^{m-1}} for large m at small Gamma.
  Scalar start(kSdbWeakStart);
  if constexpr (!is_extended_v<Scalar>) start = std::max(start, std::pow(10.0, -280.0 / double(alpha)));
  if (gamma < start) start = gamma;

  auto res = detail::sdb_newton<Scalar>(m, start, ipow<Scalar>(start, alpha), Scalar(1), cfg.max_iter);
  if (!res.converged)
    throw ConvergenceError("SDB m=" + std::to_string(m) + ": no convergence at the weak-coupling start", res.merit);

  Scalar g = start, log_ratio = log(Scalar(1.25));
  Scalar prev_g = g, prev_e = res.energy;
  bool have_prev = false;
  while (g < gamma) {
    Scalar next = g * exp(log_ratio);
    if (next > gamma) next = gamma;
    // Secant predictor on log E versus log Gamma.
    Scalar slope = have_prev ? (log(res.energy) - log(prev_e)) / (log(g) - log(prev_g)) : Scalar(alpha);
    Scalar guess_e = res.energy * exp(slope * (log(next) - log(g)));
    auto trial = detail::sdb_newton<Scalar>(m, next, guess_e, res.psi1, cfg.max_iter);
    if (!trial.converged || !(trial.psi1 > 0)) {
      log_ratio /= 2;
      if (log_ratio < Scalar(1e-7))
        throw ConvergenceError("SDB m=" + std::to_string(m) + ": continuation stalled at Gamma=" +
                                   std::to_string(to_double(g)),
                               trial.merit);
      continue;
    }
    prev_g = g;
    prev_e = res.energy;
    have_prev = true;
    g = next;
    res = trial;
    if (log_ratio < log(Scalar(1.25))) log_ratio *= Scalar(1.5);
  }
  return detail::finish_sdb(detail::assemble_sdb<Scalar>(sites, m, gamma, res.energy, res.psi1), m, cfg);
}

/// Warm-started Newton for branch m at a new Gamma, starting from a nearby
/// state of the same branch. Throws like solve_sdb_branch.
template <typename Scalar>
BasicStationaryState<Scalar> refine_sdb_branch(int sites, int m, const Scalar& gamma,
                                               const BasicStationaryState<Scalar>& near, const SolverConfig& cfg) {
  detail::check_sdb_args(sites, m);
  if (!(gamma > 0)) throw std::invalid_argument("SDB: Gamma must be positive");
  std::optional<PrecisionGuard> guard;
  if constexpr (is_extended_v<Scalar>) guard.emplace(cfg.precision_digits);
  auto res = detail::sdb_newton<Scalar>(m, gamma, near.energy, near.psi(0), cfg.max_iter);
  if (!res.converged) throw ConvergenceError("SDB m=" + std::to_string(m) + ": warm start did not converge", res.merit);
  return detail::finish_sdb(detail::assemble_sdb<Scalar>(sites, m, gamma, res.energy, res.psi1), m, cfg);
}

inline StationaryState solve_sdb_branch(int sites, int m, double gamma, const SolverConfig& cfg = {}) {
  return solve_sdb_branch<double>(sites, m, gamma, cfg);
}

// ---------------------------------------------------------------------------
// General real solutions: damped Newton on (psi_1..psi_L, E) with deflation.
// ---------------------------------------------------------------------------

/// One solution found at a given Gamma. `sdb_label` is m for states produced
/// by the SDB recurrence solver, 0 otherwise.
struct FoundState {
  StationaryState state;
  int sdb_label = 0;
};

struct SpectrumPoint {
  double gamma = 0.0;
  std::vector<FoundState> solutions;
  int failed_starts = 0;
  std::vector<std::string> notes;
};

/// A continuation-tracked family of states, ordered by increasing Gamma.
/// `label` is m for skin-breather branches and 0 otherwise; `pattern` is the
/// occupation pattern of the sample at the largest Gamma.
struct Branch {
  Pattern pattern;
  int label = 0;
  std::vector<StationaryState> samples;
};

struct SpectrumSweep {
  LatticeParams params;
  std::vector<SpectrumPoint> points;
  std::vector<Branch> branches;
};

/// All distinct real solutions found at each grid value, stitched into branches.
SpectrumSweep sweep_spectrum(const LatticeParams& params, const std::vector<double>& gamma_grid,
                             const SolverConfig& cfg = {});

/// Real solutions of the periodic chain, closed under cyclic translation.
std::vector<StationaryState> solve_pbc(const LatticeParams& params, double gamma, const SolverConfig& cfg = {});

/// Real solutions of the open chain with J_L J_R > 0.
std::vector<StationaryState> solve_nonreciprocal(const LatticeParams& params, double gamma,
                                                 const SolverConfig& cfg = {});

/// Solutions at a single Gamma for any lattice; `seeds` are extra starting
/// points (psi, E) tried before the built-in ones.
SpectrumPoint find_solutions(const LatticeParams& params, double gamma, const SolverConfig& cfg,
                             const std::vector<StationaryState>& seeds = {});

/// Undamped Newton on the full system at the working precision of Scalar,
/// stopped when the residual no longer decreases. Used to bring a double
/// solution to extended accuracy.
template <typename Scalar>
BasicStationaryState<Scalar> refine_state(const BasicStationaryState<Scalar>& s, const LatticeParams& params,
                                          int max_iter = 20) {
  const int L = params.sites;
  const bool periodic = params.boundary == Boundary::Periodic;
  Vector<Scalar> psi = s.psi;
  Scalar energy = s.energy;
  Vector<Scalar> r = residual(psi, energy, s.gamma, params);
  Scalar best = r.template lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter && best > 0; ++it) {
    Matrix<Scalar> jac = Matrix<Scalar>::Zero(L + 1, L + 1);
    for (int n = 0; n < L; ++n) {
      jac(n, n) += Scalar(3) * s.gamma * psi(n) * psi(n) - energy;
      if (n + 1 < L) jac(n, n + 1) += Scalar(params.hop_left);
      else if (periodic) jac(n, 0) += Scalar(params.hop_left);
      if (n > 0) jac(n, n - 1) += Scalar(params.hop_right);
      else if (periodic) jac(n, L - 1) += Scalar(params.hop_right);
      jac(n, L) = -psi(n);
      jac(L, n) = Scalar(2) * psi(n);
    }
    const Vector<Scalar> step = jac.colPivHouseholderQr().solve(-r);
    const Vector<Scalar> psi_new = psi + step.head(L);
    const Scalar e_new = energy + step(L);
    const Vector<Scalar> r_new = residual(psi_new, e_new, s.gamma, params);
    const Scalar norm = r_new.template lpNorm<Eigen::Infinity>();
    if (!(norm < best)) break;
    psi = psi_new;
    energy = e_new;
    r = r_new;
    best = norm;
  }
  auto out = make_state<Scalar>(std::move(psi), energy, s.gamma);
  out.support = std::max(out.support, s.support);
  return out;
}

/// Max-norm distance in (E, psi).
double state_distance(const StationaryState& a, const StationaryState& b);

/// Plain damped Newton on the full system from `start`; nullopt on failure.
std::optional<StationaryState> polish(const StationaryState& start, const LatticeParams& params,
                                      const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// Two-site skin breather in closed form.
// ---------------------------------------------------------------------------

/// Real roots, ascending, of 4E^3 - 8 Gamma E^2 + (5 Gamma^2 + 1) E - Gamma^3.
std::vector<double> site2_cubic_roots(double gamma);

/// Discriminant 18abcd - 4b^3 d + b^2 c^2 - 4ac^3 - 27a^2 d^2 of ax^3 + bx^2 + cx + d.
double cubic_discriminant(double a, double b, double c, double d);

/// 16 (Gamma^4 - 11 Gamma^2 - 1), the discriminant of the site-2 cubic.
double site2_discriminant(double gamma);

/// Positive zero of the site-2 discriminant, sqrt((11 + 5 sqrt 5) / 2).
double bifurcation_gamma_c();

}  // namespace skinbreather
