#pragma once

#include "skinbreather/precision.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace skinbreather {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Boundary { Open, Periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Lattice of `sites` sites with left hopping J_L (psi_{n+1} -> site n) and
/// right hopping J_R (psi_{n-1} -> site n). `loss` is a uniform decay rate
/// and only enters the time evolution.
struct LatticeParams {
  int sites = 1;
  double hop_left = 1.0;
  double hop_right = 0.0;
  Boundary boundary = Boundary::Open;
  double loss = 0.0;

  static LatticeParams unidirectional(int sites) { return {sites, 1.0, 0.0, Boundary::Open, 0.0}; }

  bool is_unidirectional_open() const { return hop_right == 0.0 && boundary == Boundary::Open; }

  /// Throws std::invalid_argument on sites < 1, negative or non-finite loss.
  void validate() const;
};

/// Throws std::domain_error when J_L * J_R < 0, where real stationary
/// solutions are not guaranteed.
void require_real_spectrum(const LatticeParams& params);

/// Occupied sites, 1-based, ascending.
using Pattern = std::vector<int>;

std::string pattern_to_string(const Pattern& p);
Pattern pattern_from_string(const std::string& s);
bool patterns_overlap(const Pattern& a, const Pattern& b);

/// psi is normalized and real, energy and gamma are in units of |J_L|.
/// `pattern` lists the sites carrying a dominant share of the intensity;
/// `support` is the farthest site with a nonzero amplitude.
template <typename Scalar>
struct BasicStationaryState {
  Vector<Scalar> psi;
  Scalar energy{0};
  Scalar gamma{0};
  Pattern pattern;
  int support = 0;
};

using StationaryState = BasicStationaryState<double>;
using ExtendedState = BasicStationaryState<Extended>;

/// |psi_n| above this counts as nonzero: 1e-8 in double, 10^{-digits/2} otherwise.
template <typename Scalar>
Scalar occupation_threshold() {
  if constexpr (is_extended_v<Scalar>) {
    return boost::multiprecision::pow(Extended(10), -Extended(working_digits<Extended>()) / 2);
  } else {
    return Scalar(1e-8);
  }
}

/// A site belongs to the pattern when psi_n^2 exceeds half the uniform share 1/L.
template <typename Scalar>
Pattern dominant_pattern(const Vector<Scalar>& psi) {
  Pattern p;
  const Scalar share = Scalar(0.5) / Scalar(psi.size());
  for (Eigen::Index n = 0; n < psi.size(); ++n)
    if (psi(n) * psi(n) > share) p.push_back(static_cast<int>(n) + 1);
  return p;
}

template <typename Scalar>
int support_length(const Vector<Scalar>& psi, const Scalar& threshold) {
  using std::abs;
  for (Eigen::Index n = psi.size() - 1; n >= 0; --n)
    if (abs(psi(n)) > threshold) return static_cast<int>(n) + 1;
  return 0;
}

/// Flips the global sign so the first nonzero amplitude is nonnegative.
template <typename Scalar>
void apply_phase_convention(Vector<Scalar>& psi) {
  using std::abs;
  const Scalar threshold = occupation_threshold<Scalar>();
  for (Eigen::Index n = 0; n < psi.size(); ++n) {
    if (abs(psi(n)) > threshold) {
      if (psi(n) < 0) psi = -psi;
      return;
    }
  }
}

/// Builds a state with the phase convention applied and labels filled in.
template <typename Scalar>
BasicStationaryState<Scalar> make_state(Vector<Scalar> psi, Scalar energy, Scalar gamma) {
  apply_phase_convention(psi);
  BasicStationaryState<Scalar> s;
  s.pattern = dominant_pattern(psi);
  s.support = support_length(psi, occupation_threshold<Scalar>());
  s.psi = std::move(psi);
  s.energy = energy;
  s.gamma = gamma;
  return s;
}

template <typename Scalar>
BasicStationaryState<double> to_double_state(const BasicStationaryState<Scalar>& s) {
  BasicStationaryState<double> d;
  d.psi.resize(s.psi.size());
  for (Eigen::Index n = 0; n < s.psi.size(); ++n) d.psi(n) = to_double(s.psi(n));
  d.energy = to_double(s.energy);
  d.gamma = to_double(s.gamma);
  d.pattern = s.pattern;
  d.support = s.support;
  return d;
}

template <typename Scalar>
BasicStationaryState<Scalar> from_double_state(const StationaryState& s) {
  BasicStationaryState<Scalar> e;
  e.psi.resize(s.psi.size());
  for (Eigen::Index n = 0; n < s.psi.size(); ++n) e.psi(n) = Scalar(s.psi(n));
  e.energy = Scalar(s.energy);
  e.gamma = Scalar(s.gamma);
  e.pattern = s.pattern;
  e.support = s.support;
  return e;
}

/// Stationary-equation residual. Entries 0..L-1 hold
///   J_L psi_{n+1} + J_R psi_{n-1} + Gamma psi_n^3 - E psi_n
/// (neighbours outside the chain vanish under OBC, wrap under PBC);
/// entry L holds sum psi_n^2 - 1.
template <typename Scalar>
Vector<Scalar> residual(const Vector<Scalar>& psi, const Scalar& energy, const Scalar& gamma,
                        const LatticeParams& params) {
  const Eigen::Index L = params.sites;
  if (psi.size() != L)
    throw std::invalid_argument("residual: amplitude vector has length " + std::to_string(psi.size()) +
                                ", lattice has " + std::to_string(L) + " sites");
  const bool periodic = params.boundary == Boundary::Periodic;
  const Scalar jl(params.hop_left), jr(params.hop_right);
  Vector<Scalar> r(L + 1);
  for (Eigen::Index n = 0; n < L; ++n) {
    Scalar next(0), prev(0);
    if (n + 1 < L) next = psi(n + 1);
    else if (periodic) next = psi(0);
    if (n > 0) prev = psi(n - 1);
    else if (periodic) prev = psi(L - 1);
    r(n) = jl * next + jr * prev + gamma * psi(n) * psi(n) * psi(n) - energy * psi(n);
  }
  r(L) = psi.squaredNorm() - Scalar(1);
  return r;
}

template <typename Scalar>
Vector<Scalar> residual(const BasicStationaryState<Scalar>& state, const LatticeParams& params) {
  return residual(state.psi, state.energy, state.gamma, params);
}

/// (Gamma, E, psi_n) -> (-Gamma, -E, (-1)^n psi_n), phase convention re-applied.
/// Under PBC the map is a symmetry only for even L.
template <typename Scalar>
BasicStationaryState<Scalar> sign_map(const BasicStationaryState<Scalar>& state) {
  Vector<Scalar> psi = state.psi;
  for (Eigen::Index n = 0; n < psi.size(); n += 2) psi(n) = -psi(n);  // site n+1 odd
  return make_state<Scalar>(std::move(psi), -state.energy, -state.gamma);
}

/// psi_n = t^n phi_n with t = sqrt(J_R/J_L). phi solves the reciprocal
/// equation J(phi_{n+1} + phi_{n-1}) + gamma_n phi_n^3 = E phi_n with
/// J = sign(J_L) sqrt(J_L J_R) and gamma_n = t^{2n} Gamma.
struct GaugedAmplitudes {
  Eigen::VectorXd phi;
  double ratio = 1.0;
  double coupling = 0.0;
  Eigen::VectorXd site_gamma;
};

GaugedAmplitudes gauge_transform(const StationaryState& state, const LatticeParams& params);
Eigen::VectorXd gauge_inverse(const Eigen::VectorXd& phi, const LatticeParams& params);

struct EffectiveModelParams {
  double hop_left = 0.0;
  double hop_right = 0.0;
  double gamma = 0.0;
  double loss = 0.0;

  LatticeParams lattice(int sites, Boundary boundary = Boundary::Open) const {
    return {sites, hop_left, hop_right, boundary, loss};
  }
};

/// Mean-field reduction of bosons with hopping J, pairwise loss rate g and
/// on-site interaction U: J_L = -(J + g/2), J_R = -(J - g/2), gamma = U.
EffectiveModelParams lindblad_to_dnlse(double hopping, double loss_rate, double interaction);

}  // namespace skinbreather
