#include "skinbreather/dynamics.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>

namespace skinbreather {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<std::complex<double>>;

constexpr double kBranchMatchTol = 1e-6;

void apply_rhs(const std::complex<double>* x, std::complex<double>* dx, int L, double gamma, const LatticeParams& p) {
  const std::complex<double> minus_i(0.0, -1.0);
  const bool periodic = p.boundary == Boundary::Periodic;
  for (int n = 0; n < L; ++n) {
    std::complex<double> next(0.0), prev(0.0);
    if (n + 1 < L) next = x[n + 1];
    else if (periodic) next = x[0];
    if (n > 0) prev = x[n - 1];
    else if (periodic) prev = x[L - 1];
    const std::complex<double> h = p.hop_left * next + p.hop_right * prev + gamma * std::norm(x[n]) * x[n] -
                                   std::complex<double>(0.0, p.loss) * x[n];
    dx[n] = minus_i * h;
  }
}

bool all_finite(const State& s) {
  for (const auto& z : s)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

}  // namespace

void RampProtocol::validate() const {
  if (!std::isfinite(gamma0) || !std::isfinite(v)) throw std::invalid_argument("ramp: gamma0 and v must be finite");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("ramp: t_end must be finite and >= 0");
}

Field rhs(const Field& psi, double gamma, const LatticeParams& params) {
  if (psi.size() != params.sites) throw std::invalid_argument("rhs: field length does not match lattice");
  Field out(psi.size());
  apply_rhs(psi.data(), out.data(), params.sites, gamma, params);
  return out;
}

TrajectoryRecord integrate(const Field& psi0, const RampProtocol& protocol, const LatticeParams& params,
                           const IntegratorOptions& opts) {
  params.validate();
  protocol.validate();
  const int L = params.sites;
  if (psi0.size() != L) throw std::invalid_argument("integrate: field length does not match lattice");
  if (!psi0.allFinite()) throw std::invalid_argument("integrate: initial field is not finite");
  if (!(opts.reltol > 1e-14 && opts.reltol < 1e-3)) throw std::invalid_argument("integrate: reltol outside (1e-14, 1e-3)");
  if (!(opts.abstol > 0.0)) throw std::invalid_argument("integrate: abstol must be positive");

  std::vector<double> times = opts.times;
  if (times.empty()) {
    if (opts.samples < 1) throw std::invalid_argument("integrate: needs at least one output sample");
    const int n = protocol.t_end > 0.0 ? std::max(opts.samples, 2) : 1;
    times.resize(n);
    for (int i = 0; i < n; ++i) times[i] = n == 1 ? 0.0 : protocol.t_end * i / (n - 1);
  }
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("integrate: output times must increase");

  TrajectoryRecord rec;
  rec.fields.resize(L, static_cast<Eigen::Index>(times.size()));
  double last_valid = times.front();
  auto observer = [&](const State& s, double t) {
    if (!all_finite(s)) throw BlowUpError("integrate: field blew up after t=" + std::to_string(last_valid), last_valid);
    const auto col = static_cast<Eigen::Index>(rec.times.size());
    double intensity = 0.0;
    for (int n = 0; n < L; ++n) {
      rec.fields(n, col) = s[n];
      intensity += std::norm(s[n]);
    }
    rec.times.push_back(t);
    rec.intensity.push_back(intensity);
    rec.gamma_bare.push_back(protocol.gamma_at(t));
    rec.gamma_eff.push_back(protocol.gamma_at(t) * intensity);
    last_valid = t;
  };
  auto system = [&](const State& x, State& dx, double t) {
    apply_rhs(x.data(), dx.data(), L, protocol.gamma_at(t), params);
  };

  State x(psi0.data(), psi0.data() + L);
  if (times.size() == 1) {
    observer(x, times.front());
    return rec;
  }
  const double dt0 = std::min(1e-2, (times.back() - times.front()) / 10.0);
  auto stepper = odeint::make_dense_output(opts.abstol, opts.reltol, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, system, x, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(50'000'000));
  } catch (const odeint::step_adjustment_error& e) {
    if (!all_finite(x)) throw BlowUpError("integrate: field blew up after t=" + std::to_string(last_valid), last_valid);
    throw StiffnessError(std::string("integrate: step size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw StiffnessError(std::string("integrate: no progress: ") + e.what());
  }
  return rec;
}

double nonlinear_fidelity(const Field& psi, const StationaryState& reference) {
  if (psi.size() != reference.psi.size()) throw std::invalid_argument("nonlinear_fidelity: length mismatch");
  const double intensity = psi.squaredNorm();
  if (!(intensity > 0.0)) throw std::domain_error("nonlinear_fidelity: zero intensity");
  std::complex<double> overlap(0.0);
  for (Eigen::Index n = 0; n < psi.size(); ++n) overlap += psi(n) * reference.psi(n);
  return std::norm(overlap) / intensity;
}

TrajectoryRecord adiabatic_experiment(int m, double gamma0, double v, const LatticeParams& params,
                                      const SolverConfig& cfg, const IntegratorOptions& opts, double t_end) {
  params.validate();
  if (!params.is_unidirectional_open() || params.hop_left != 1.0)
    throw std::invalid_argument("adiabatic_experiment: needs the unidirectional open chain with J_L = 1");
  if (!(gamma0 > 0.0)) throw std::invalid_argument("adiabatic_experiment: gamma0 must be positive");
  if (std::isnan(t_end)) t_end = v > 0.0 ? gamma0 / v : 100.0;

  const int L = params.sites;
  const StationaryState start = solve_sdb_branch<double>(L, m, gamma0, cfg);
  TrajectoryRecord rec = integrate(start.psi.cast<std::complex<double>>(), {gamma0, v, t_end}, params, opts);

  StationaryState tracked = start;
  std::size_t kept = rec.times.size();
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    const double gamma = rec.gamma_eff[k];
    if (!(gamma > 0.0)) {
      rec.truncated = true;
      rec.truncation_reason = "Gamma(t) reached " + format_scalar(gamma) + " at t=" + format_scalar(rec.times[k]);
      kept = k;
      break;
    }
    std::optional<StationaryState> warm, fresh;
    try {
      warm = refine_sdb_branch<double>(L, m, gamma, tracked, cfg);
    } catch (const std::exception&) {
    }
    try {
      fresh = solve_sdb_branch<double>(L, m, gamma, cfg);
    } catch (const std::exception& e) {
      if (!warm) {
        rec.truncated = true;
        rec.truncation_reason = "no SDB m=" + std::to_string(m) + " at Gamma=" + format_scalar(gamma) + ": " + e.what();
        kept = k;
        break;
      }
    }
    const StationaryState& ref = warm ? *warm : *fresh;
    rec.branch_jump.push_back(!warm || (fresh && state_distance(*warm, *fresh) > kBranchMatchTol));
    rec.fidelity.push_back(nonlinear_fidelity(rec.fields.col(static_cast<Eigen::Index>(k)), ref));
    tracked = ref;
  }
  if (kept < rec.times.size()) {
    rec.times.resize(kept);
    rec.intensity.resize(kept);
    rec.gamma_bare.resize(kept);
    rec.gamma_eff.resize(kept);
    rec.fields.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(kept));
  }
  return rec;
}

}  // namespace skinbreather
