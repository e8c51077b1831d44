#include "skinbreather/stationary.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace skinbreather {

void SolverConfig::validate() const {
  if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (n_seeds < 0) throw std::invalid_argument("n_seeds must be nonnegative");
  if (!(dedup_tol > 0.0)) throw std::invalid_argument("dedup_tol must be positive");
  if (precision_digits < 15) throw std::invalid_argument("precision_digits must be at least 15");
}

namespace {

constexpr int kDeflationRestarts = 2;
constexpr int kMaxSignedSites = 8;  // above this, anticontinuum seeds drop sign variants

// Packs (psi, E) into one unknown vector.
Eigen::VectorXd pack(const Eigen::VectorXd& psi, double energy) {
  Eigen::VectorXd x(psi.size() + 1);
  x.head(psi.size()) = psi;
  x(psi.size()) = energy;
  return x;
}

Eigen::VectorXd full_residual(const Eigen::VectorXd& x, double gamma, const LatticeParams& p) {
  const Eigen::Index L = p.sites;
  return residual<double>(x.head(L), x(L), gamma, p);
}

Eigen::MatrixXd full_jacobian(const Eigen::VectorXd& x, double gamma, const LatticeParams& p) {
  const int L = p.sites;
  const bool periodic = p.boundary == Boundary::Periodic;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(L + 1, L + 1);
  for (int n = 0; n < L; ++n) {
    jac(n, n) += 3.0 * gamma * x(n) * x(n) - x(L);
    if (n + 1 < L) jac(n, n + 1) += p.hop_left;
    else if (periodic) jac(n, 0) += p.hop_left;
    if (n > 0) jac(n, n - 1) += p.hop_right;
    else if (periodic) jac(n, L - 1) += p.hop_right;
    jac(n, L) = -x(n);
    jac(L, n) = 2.0 * x(n);
  }
  return jac;
}

// Rayleigh-type energy estimate for a normalized trial vector.
double energy_estimate(const Eigen::VectorXd& psi, double gamma, const LatticeParams& p) {
  const Eigen::VectorXd r = residual<double>(psi, 0.0, gamma, p);
  return psi.dot(r.head(p.sites));
}

struct DeflationSet {
  std::vector<Eigen::VectorXd> roots;

  void add(const StationaryState& s) {
    roots.push_back(pack(s.psi, s.energy));
    roots.push_back(pack(-s.psi, s.energy));
  }

  // M(x) = prod_i (1 / |x - r_i|^2 + 1); returns M and grad log M.
  double factor(const Eigen::VectorXd& x, Eigen::VectorXd& grad_log) const {
    double m = 1.0;
    grad_log = Eigen::VectorXd::Zero(x.size());
    for (const auto& r : roots) {
      const Eigen::VectorXd d = x - r;
      const double d2 = std::max(d.squaredNorm(), 1e-300);
      const double term = 1.0 / d2 + 1.0;
      m *= term;
      grad_log += (-2.0 / (d2 * d2) / term) * d;
    }
    return m;
  }
};

// Damped Newton on the stationary system, optionally deflated.
std::optional<Eigen::VectorXd> newton_solve(Eigen::VectorXd x, double gamma, const LatticeParams& p,
                                            const SolverConfig& cfg, const DeflationSet* deflation) {
  Eigen::VectorXd grad_log;
  auto merit = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
    double m = 1.0;
    if (deflation && !deflation->roots.empty()) m = deflation->factor(y, grad_log);
    return m * f.norm();
  };

  Eigen::VectorXd f = full_residual(x, gamma, p);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (!f.allFinite()) return std::nullopt;
    if (f.lpNorm<Eigen::Infinity>() < cfg.newton_tol) return x;

    const Eigen::MatrixXd jac = full_jacobian(x, gamma, p);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    if (qr.rank() < jac.rows()) return std::nullopt;
    Eigen::VectorXd step = qr.solve(-f);
    if (deflation && !deflation->roots.empty()) {
      deflation->factor(x, grad_log);
      const double denom = 1.0 - grad_log.dot(step);
      if (std::abs(denom) < 1e-14) return std::nullopt;
      step /= denom;
    }
    if (!step.allFinite()) return std::nullopt;

    const double m0 = merit(x, f);
    double lambda = 1.0;
    Eigen::VectorXd trial, ftrial;
    for (int halvings = 0;; ++halvings) {
      trial = x + lambda * step;
      ftrial = full_residual(trial, gamma, p);
      const double m1 = merit(trial, ftrial);
      if ((std::isfinite(m1) && m1 <= m0) || halvings >= 30) break;
      lambda *= 0.5;
    }
    x = trial;
    f = ftrial;
  }
  if (f.allFinite() && f.lpNorm<Eigen::Infinity>() < cfg.newton_tol) return x;
  return std::nullopt;
}

StationaryState to_state(const Eigen::VectorXd& x, double gamma, int sites) {
  return make_state<double>(x.head(sites), x(sites), gamma);
}

bool is_duplicate(const FoundState& a, const FoundState& b, double tol) {
  if (state_distance(a.state, b.state) >= tol) return false;
  if (a.sdb_label == 0 && b.sdb_label == 0) return true;
  return a.state.support == b.state.support;
}

bool insert_unique(std::vector<FoundState>& found, FoundState candidate, double tol) {
  for (const auto& f : found)
    if (is_duplicate(f, candidate, tol)) return false;
  found.push_back(std::move(candidate));
  return true;
}

// First-order amplitudes on the empty sites of an anticontinuum pattern:
// psi_n = (J_L psi_{n+1} + J_R psi_{n-1}) / (E - Gamma psi_n^2) with E = Gamma / |P|.
void fill_empty_sites(Eigen::VectorXd& psi, const LatticeParams& p, double gamma) {
  const int L = p.sites;
  const bool periodic = p.boundary == Boundary::Periodic;
  std::vector<bool> occupied(L);
  int count = 0;
  for (int n = 0; n < L; ++n) count += (occupied[n] = psi(n) != 0.0);
  const double energy = gamma / count;
  if (std::abs(energy) < 1.0) return;  // no small parameter
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (int n = L - 1; n >= 0; --n) {
      if (occupied[n]) continue;
      double next = n + 1 < L ? psi(n + 1) : (periodic ? psi(0) : 0.0);
      double prev = n > 0 ? psi(n - 1) : (periodic ? psi(L - 1) : 0.0);
      const double value = (p.hop_left * next + p.hop_right * prev) / (energy - gamma * psi(n) * psi(n));
      psi(n) = std::clamp(value, -0.5, 0.5);
    }
  }
}

std::vector<Eigen::VectorXd> anticontinuum_seeds(const LatticeParams& p, double gamma) {
  const int L = p.sites;
  const bool signed_variants = L <= kMaxSignedSites;
  const int base = signed_variants ? 3 : 2;
  long long total = 1;
  for (int i = 0; i < L; ++i) total *= base;
  std::vector<Eigen::VectorXd> seeds;
  for (long long code = 1; code < total; ++code) {
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(L);
    long long c = code;
    int first_sign = 0;
    for (int n = 0; n < L; ++n) {
      const int digit = static_cast<int>(c % base);
      c /= base;
      if (digit == 0) continue;
      const double sgn = digit == 1 ? 1.0 : -1.0;
      if (first_sign == 0) first_sign = digit;
      psi(n) = sgn;
    }
    if (first_sign != 1) continue;  // global sign fixed
    psi.normalize();
    seeds.push_back(psi);
    Eigen::VectorXd filled = psi;
    fill_empty_sites(filled, p, gamma);
    if ((filled - psi).norm() > 1e-3) seeds.push_back(filled.normalized());
  }
  return seeds;
}

// Linear eigenvectors of the reciprocal chain mapped back through the gauge.
std::vector<Eigen::VectorXd> gauge_seeds(const LatticeParams& p) {
  std::vector<Eigen::VectorXd> seeds;
  if (p.boundary != Boundary::Open || !(p.hop_left * p.hop_right > 0.0)) return seeds;
  const int L = p.sites;
  const double coupling = std::copysign(std::sqrt(p.hop_left * p.hop_right), p.hop_left);
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(L, L);
  for (int n = 0; n + 1 < L; ++n) chain(n, n + 1) = chain(n + 1, n) = coupling;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(chain);
  for (int k = 0; k < L; ++k) seeds.push_back(gauge_inverse(es.eigenvectors().col(k), p).normalized());
  return seeds;
}

std::vector<Eigen::VectorXd> random_seeds(const LatticeParams& p, const SolverConfig& cfg, double gamma) {
  std::mt19937_64 rng(cfg.rng_seed ^ std::hash<double>{}(gamma));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Eigen::VectorXd> seeds;
  for (int s = 0; s < cfg.n_seeds; ++s) {
    Eigen::VectorXd psi(p.sites);
    for (int n = 0; n < p.sites; ++n) psi(n) = unit(rng);
    if (psi.norm() > 1e-3) seeds.push_back(psi.normalized());
  }
  return seeds;
}

std::vector<FoundState> sdb_states(const LatticeParams& p, double gamma, const SolverConfig& cfg,
                                   const std::vector<FoundState>* previous, std::vector<std::string>& notes) {
  std::vector<FoundState> out;
  if (!p.is_unidirectional_open()) return out;
  const int L = p.sites;
  if (gamma == 0.0) {
    // Linear exceptional point: every branch coalesces onto the boundary mode.
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(L);
    psi(0) = 1.0;
    auto s = make_state<double>(psi, 0.0, 0.0);
    s.support = 1;
    out.push_back({s, 1});
    return out;
  }
  const double g = std::abs(gamma);
  for (int m = 1; m <= L; ++m) {
    std::optional<StationaryState> s;
    if (previous) {
      for (const auto& f : *previous) {
        if (f.sdb_label != m || f.state.gamma * gamma <= 0.0) continue;
        StationaryState near = gamma > 0 ? f.state : sign_map(f.state);
        try {
          s = refine_sdb_branch<double>(L, m, g, near, cfg);
        } catch (const std::exception&) {
        }
      }
    }
    if (!s) {
      try {
        s = solve_sdb_branch<double>(L, m, g, cfg);
      } catch (const std::exception& e) {
        notes.push_back("SDB m=" + std::to_string(m) + ": " + e.what());
        continue;
      }
    }
    StationaryState state = gamma > 0 ? *s : sign_map(*s);
    state.support = m;
    out.push_back({state, m});
  }
  return out;
}

// At Gamma = 0 the problem is linear: the solutions are the real eigenvectors of
// the hopping matrix. Newton only crawls towards defective ones, so solve directly.
SpectrumPoint linear_solutions(const LatticeParams& p, const SolverConfig& cfg, std::vector<FoundState> initial) {
  SpectrumPoint point;
  for (auto& f : initial) insert_unique(point.solutions, std::move(f), cfg.dedup_tol);
  const int L = p.sites;
  const bool periodic = p.boundary == Boundary::Periodic;
  Eigen::MatrixXd hop = Eigen::MatrixXd::Zero(L, L);
  for (int n = 0; n < L; ++n) {
    if (n + 1 < L) hop(n, n + 1) += p.hop_left;
    else if (periodic) hop(n, 0) += p.hop_left;
    if (n > 0) hop(n, n - 1) += p.hop_right;
    else if (periodic) hop(n, L - 1) += p.hop_right;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(hop, false);
  std::vector<double> energies;
  for (Eigen::Index i = 0; i < L; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-8) continue;
    bool seen = false;
    for (double e : energies) seen = seen || std::abs(e - z.real()) < 1e-6;
    if (!seen) energies.push_back(z.real());
  }
  for (double e : energies) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(hop - e * Eigen::MatrixXd::Identity(L, L), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    for (Eigen::Index k = L - 1; k >= 0 && sv(k) <= 1e-8 * std::max(1.0, sv(0)); --k) {
      const Eigen::VectorXd v = svd.matrixV().col(k).normalized();
      insert_unique(point.solutions, {make_state<double>(v, e, 0.0), 0}, cfg.dedup_tol);
    }
  }
  return point;
}

SpectrumPoint search(const LatticeParams& p, double gamma, const SolverConfig& cfg,
                     std::vector<FoundState> initial, const std::vector<StationaryState>& seeds) {
  if (gamma == 0.0) return linear_solutions(p, cfg, std::move(initial));
  SpectrumPoint point;
  point.gamma = gamma;
  const int L = p.sites;
  for (auto& f : initial) insert_unique(point.solutions, std::move(f), cfg.dedup_tol);

  // Warm starts first, undeflated.
  for (const auto& seed : seeds) {
    if (seed.psi.size() != L) throw std::invalid_argument("seed length does not match lattice");
    auto x = newton_solve(pack(seed.psi, seed.energy), gamma, p, cfg, nullptr);
    if (x) insert_unique(point.solutions, {to_state(*x, gamma, L), 0}, cfg.dedup_tol);
    else ++point.failed_starts;
  }

  DeflationSet deflation;
  for (const auto& f : point.solutions) deflation.add(f.state);

  std::vector<Eigen::VectorXd> starts = anticontinuum_seeds(p, gamma);
  for (auto& s : gauge_seeds(p)) starts.push_back(std::move(s));
  for (auto& s : random_seeds(p, cfg, gamma)) starts.push_back(std::move(s));

  for (const auto& psi0 : starts) {
    const Eigen::VectorXd x0 = pack(psi0, energy_estimate(psi0, gamma, p));
    for (int attempt = 0; attempt <= kDeflationRestarts; ++attempt) {
      auto x = newton_solve(x0, gamma, p, cfg, &deflation);
      if (!x) {
        if (attempt == 0) ++point.failed_starts;
        break;
      }
      // Tighten without deflation before recording.
      if (auto y = newton_solve(*x, gamma, p, cfg, nullptr)) x = y;
      FoundState candidate{to_state(*x, gamma, L), 0};
      deflation.add(candidate.state);
      insert_unique(point.solutions, std::move(candidate), cfg.dedup_tol);
    }
  }

  if (p.boundary == Boundary::Periodic) {
    // Cyclic translates of every solution are solutions as well.
    for (std::size_t i = 0; i < point.solutions.size(); ++i) {
      const Eigen::VectorXd psi = point.solutions[i].state.psi;
      for (int shift = 1; shift < L; ++shift) {
        Eigen::VectorXd moved(L);
        for (int n = 0; n < L; ++n) moved((n + shift) % L) = psi(n);
        auto x = newton_solve(pack(moved, point.solutions[i].state.energy), gamma, p, cfg, nullptr);
        if (x) insert_unique(point.solutions, {to_state(*x, gamma, L), 0}, cfg.dedup_tol);
      }
    }
  }
  return point;
}

}  // namespace

double state_distance(const StationaryState& a, const StationaryState& b) {
  if (a.psi.size() != b.psi.size()) return std::numeric_limits<double>::infinity();
  return std::max(std::abs(a.energy - b.energy), (a.psi - b.psi).lpNorm<Eigen::Infinity>());
}

std::optional<StationaryState> polish(const StationaryState& start, const LatticeParams& params,
                                      const SolverConfig& cfg) {
  auto x = newton_solve(pack(start.psi, start.energy), start.gamma, params, cfg, nullptr);
  if (!x) return std::nullopt;
  return to_state(*x, start.gamma, params.sites);
}

SpectrumPoint find_solutions(const LatticeParams& params, double gamma, const SolverConfig& cfg,
                             const std::vector<StationaryState>& seeds) {
  params.validate();
  cfg.validate();
  std::vector<std::string> notes;
  auto sdbs = sdb_states(params, gamma, cfg, nullptr, notes);
  auto point = search(params, gamma, cfg, std::move(sdbs), seeds);
  point.notes = std::move(notes);
  return point;
}

namespace {

std::vector<StationaryState> plain_states(const SpectrumPoint& point) {
  std::vector<StationaryState> out;
  out.reserve(point.solutions.size());
  for (const auto& f : point.solutions) out.push_back(f.state);
  return out;
}

std::vector<Branch> stitch(const LatticeParams& p, const std::vector<SpectrumPoint>& points, const SolverConfig& cfg) {
  std::vector<Branch> branches;
  std::vector<std::size_t> open;  // branches whose last sample sits at the previous grid point
  const double link_tol = std::max(cfg.dedup_tol, 1e-6);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& sols = points[k].solutions;
    std::vector<bool> claimed(sols.size(), false);
    std::vector<std::size_t> next_open;

    struct Candidate {
      double distance;
      std::size_t branch, solution;
    };
    std::vector<Candidate> candidates;
    for (std::size_t b : open) {
      const StationaryState& last = branches[b].samples.back();
      if (branches[b].label > 0) {
        for (std::size_t j = 0; j < sols.size(); ++j)
          if (sols[j].sdb_label == branches[b].label) candidates.push_back({0.0, b, j});
        continue;
      }
      StationaryState start = last;
      start.gamma = points[k].gamma;
      auto moved = polish(start, p, cfg);
      if (!moved) continue;
      for (std::size_t j = 0; j < sols.size(); ++j) {
        if (sols[j].sdb_label != 0) continue;
        const double d = state_distance(*moved, sols[j].state);
        if (d < link_tol && patterns_overlap(last.pattern, sols[j].state.pattern)) candidates.push_back({d, b, j});
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });
    std::vector<bool> extended(branches.size(), false);
    for (const auto& c : candidates) {
      if (claimed[c.solution] || extended[c.branch]) continue;
      claimed[c.solution] = true;
      extended[c.branch] = true;
      branches[c.branch].samples.push_back(sols[c.solution].state);
      next_open.push_back(c.branch);
    }
    for (std::size_t j = 0; j < sols.size(); ++j) {
      if (claimed[j]) continue;
      Branch nb;
      nb.label = sols[j].sdb_label;
      nb.samples.push_back(sols[j].state);
      branches.push_back(std::move(nb));
      next_open.push_back(branches.size() - 1);
    }
    open = std::move(next_open);
  }
  for (auto& b : branches) b.pattern = b.samples.back().pattern;
  return branches;
}

}  // namespace

SpectrumSweep sweep_spectrum(const LatticeParams& params, const std::vector<double>& gamma_grid,
                             const SolverConfig& cfg) {
  params.validate();
  cfg.validate();
  if (gamma_grid.empty()) throw std::invalid_argument("sweep_spectrum: empty Gamma grid");
  for (std::size_t k = 1; k < gamma_grid.size(); ++k)
    if (!(gamma_grid[k] > gamma_grid[k - 1]))
      throw std::invalid_argument("sweep_spectrum: Gamma grid must be strictly increasing");

  SpectrumSweep sweep;
  sweep.params = params;
  sweep.points.reserve(gamma_grid.size());
  for (std::size_t k = 0; k < gamma_grid.size(); ++k) {
    const double gamma = gamma_grid[k];
    std::vector<std::string> notes;
    const std::vector<FoundState>* previous = k > 0 ? &sweep.points[k - 1].solutions : nullptr;
    auto sdbs = sdb_states(params, gamma, cfg, previous, notes);
    std::vector<StationaryState> seeds;
    if (previous)
      for (const auto& f : *previous)
        if (f.sdb_label == 0) {
          StationaryState s = f.state;
          s.gamma = gamma;
          seeds.push_back(std::move(s));
        }
    auto point = search(params, gamma, cfg, std::move(sdbs), seeds);
    point.notes = std::move(notes);
    sweep.points.push_back(std::move(point));
  }

  // Backward continuation picks up branches that end at a fold when Gamma decreases.
  for (std::size_t k = gamma_grid.size(); k-- > 1;) {
    auto& here = sweep.points[k - 1];
    if (here.gamma == 0.0) continue;
    for (const auto& s : plain_states(sweep.points[k])) {
      StationaryState start = s;
      start.gamma = here.gamma;
      if (auto x = polish(start, params, cfg)) insert_unique(here.solutions, {*x, 0}, cfg.dedup_tol);
    }
  }

  sweep.branches = stitch(params, sweep.points, cfg);
  return sweep;
}

std::vector<StationaryState> solve_pbc(const LatticeParams& params, double gamma, const SolverConfig& cfg) {
  if (params.boundary != Boundary::Periodic) throw std::invalid_argument("solve_pbc: lattice is not periodic");
  return plain_states(find_solutions(params, gamma, cfg));
}

std::vector<StationaryState> solve_nonreciprocal(const LatticeParams& params, double gamma,
                                                 const SolverConfig& cfg) {
  if (params.boundary != Boundary::Open) throw std::invalid_argument("solve_nonreciprocal: needs open boundaries");
  if (!(params.hop_left * params.hop_right > 0.0))
    throw std::domain_error("solve_nonreciprocal: needs J_L * J_R > 0");
  return plain_states(find_solutions(params, gamma, cfg));
}

double cubic_discriminant(double a, double b, double c, double d) {
  return 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c - 27 * a * a * d * d;
}

double site2_discriminant(double gamma) {
  const double g2 = gamma * gamma;
  return 16.0 * (g2 * g2 - 11.0 * g2 - 1.0);
}

double bifurcation_gamma_c() { return std::sqrt((11.0 + 5.0 * std::sqrt(5.0)) / 2.0); }

std::vector<double> site2_cubic_roots(double gamma) {
  const double a = 4.0, b = -8.0 * gamma, c = 5.0 * gamma * gamma + 1.0, d = -gamma * gamma * gamma;
  auto f = [&](double e) { return ((a * e + b) * e + c) * e + d; };

  // Split the real line at the critical points and bracket each sign change.
  const double bound = 1.0 + std::max({std::abs(b), std::abs(c), std::abs(d)}) / a;
  std::vector<double> edges{-bound};
  const double disc = 4.0 * b * b - 12.0 * a * c;  // of f'(E) = 3aE^2 + 2bE + c
  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    edges.push_back((-2.0 * b - s) / (6.0 * a));
    edges.push_back((-2.0 * b + s) / (6.0 * a));
  }
  edges.push_back(bound);

  std::vector<double> roots;
  const double scale = std::max({1.0, std::abs(d), std::abs(c)});
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double lo = edges[i], hi = edges[i + 1];
    double flo = f(lo), fhi = f(hi);
    if (std::abs(flo) <= 1e-14 * scale && i > 0) {
      roots.push_back(lo);  // double root at a critical point
      continue;
    }
    if (flo == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if (flo * fhi > 0.0) continue;
    if (fhi == 0.0) continue;  // picked up as the next interval's left edge
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(), iters);
    roots.push_back(0.5 * (r.first + r.second));
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
              roots.end());
  return roots;
}

}  // namespace skinbreather
