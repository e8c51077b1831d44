#include "skinbreather/model.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace skinbreather {

std::string format_scalar(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return std::to_string(x);
  return std::string(buf, end);
}

std::string format_scalar(const Extended& x) {
  return x.str(static_cast<std::streamsize>(working_digits<Extended>()), std::ios_base::scientific);
}

std::string to_string(Boundary b) { return b == Boundary::Open ? "obc" : "pbc"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "obc" || s == "open") return Boundary::Open;
  if (s == "pbc" || s == "periodic") return Boundary::Periodic;
  throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

void LatticeParams::validate() const {
  if (sites < 1) throw std::invalid_argument("lattice needs at least one site");
  if (!std::isfinite(hop_left) || !std::isfinite(hop_right))
    throw std::invalid_argument("hopping amplitudes must be finite");
  if (!(loss >= 0.0) || !std::isfinite(loss)) throw std::invalid_argument("loss rate must be finite and >= 0");
}

void require_real_spectrum(const LatticeParams& params) {
  params.validate();
  if (params.hop_left * params.hop_right < 0.0)
    throw std::domain_error("J_L * J_R < 0: stationary energies are not guaranteed real");
}

std::string pattern_to_string(const Pattern& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(p[i]);
  }
  return out;
}

Pattern pattern_from_string(const std::string& s) {
  Pattern p;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, '+'))
    if (!item.empty()) p.push_back(std::stoi(item));
  return p;
}

bool patterns_overlap(const Pattern& a, const Pattern& b) {
  return std::any_of(a.begin(), a.end(), [&](int n) { return std::find(b.begin(), b.end(), n) != b.end(); });
}

GaugedAmplitudes gauge_transform(const StationaryState& state, const LatticeParams& params) {
  if (state.psi.size() != params.sites) throw std::invalid_argument("gauge_transform: length mismatch");
  const double q = params.hop_right / params.hop_left;
  if (!(q > 0.0)) throw std::domain_error("gauge_transform: needs J_R / J_L > 0");
  GaugedAmplitudes g;
  g.ratio = std::sqrt(q);
  g.coupling = std::copysign(std::sqrt(params.hop_left * params.hop_right), params.hop_left);
  g.phi.resize(params.sites);
  g.site_gamma.resize(params.sites);
  double tn = 1.0;
  for (int n = 0; n < params.sites; ++n) {
    tn *= g.ratio;  // t^{n+1} for 1-based site n+1
    g.phi(n) = state.psi(n) / tn;
    g.site_gamma(n) = tn * tn * state.gamma;
  }
  return g;
}

Eigen::VectorXd gauge_inverse(const Eigen::VectorXd& phi, const LatticeParams& params) {
  const double q = params.hop_right / params.hop_left;
  if (!(q > 0.0)) throw std::domain_error("gauge_inverse: needs J_R / J_L > 0");
  const double t = std::sqrt(q);
  Eigen::VectorXd psi(phi.size());
  double tn = 1.0;
  for (Eigen::Index n = 0; n < phi.size(); ++n) {
    tn *= t;
    psi(n) = tn * phi(n);
  }
  return psi;
}

EffectiveModelParams lindblad_to_dnlse(double hopping, double loss_rate, double interaction) {
  if (!(loss_rate >= 0.0)) throw std::invalid_argument("loss rate must be >= 0");
  return {-(hopping + loss_rate / 2), -(hopping - loss_rate / 2), interaction, loss_rate};
}

}  // namespace skinbreather
