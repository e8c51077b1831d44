#pragma once

#include "skinbreather/stationary.hpp"

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace skinbreather {

using Field = Eigen::VectorXcd;

/// dPsi/dt = -i [J_L Psi_{n+1} + J_R Psi_{n-1} + gamma |Psi_n|^2 Psi_n - i loss Psi_n].
Field rhs(const Field& psi, double gamma, const LatticeParams& params);

/// gamma(t) = gamma0 - v t on [0, t_end].
struct RampProtocol {
  double gamma0 = 0.0;
  double v = 0.0;
  double t_end = 0.0;

  double gamma_at(double t) const { return gamma0 - v * t; }
  void validate() const;
};

struct IntegratorOptions {
  double reltol = 1e-9;
  double abstol = 1e-12;
  int samples = 400;          // uniform output points on [0, t_end]
  std::vector<double> times;  // explicit output times; overrides `samples`
};

class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double last_valid_time)
      : std::runtime_error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

struct TrajectoryRecord {
  std::vector<double> times;
  Eigen::MatrixXcd fields;  // L x times.size()
  std::vector<double> intensity;
  std::vector<double> gamma_bare;
  std::vector<double> gamma_eff;
  std::vector<double> fidelity;     // filled by adiabatic_experiment
  std::vector<bool> branch_jump;    // filled by adiabatic_experiment
  bool truncated = false;
  std::string truncation_reason;
};

/// Adaptive Dormand-Prince 5(4) integration with dense output at the requested times.
TrajectoryRecord integrate(const Field& psi0, const RampProtocol& protocol, const LatticeParams& params,
                           const IntegratorOptions& opts = {});

/// |sum_n Psi_n psi_n|^2 / sum_n |Psi_n|^2.
double nonlinear_fidelity(const Field& psi, const StationaryState& reference);

/// Ramps gamma down from gamma0 at speed v starting from the SDB m at Gamma = gamma0
/// (unit intensity) and records the fidelity against the instantaneous SDB m at
/// Gamma(t) = gamma(t) I(t). With t_end unset the run stops where gamma reaches 0
/// (or at t = 100 for v = 0).
TrajectoryRecord adiabatic_experiment(int m, double gamma0, double v, const LatticeParams& params,
                                      const SolverConfig& cfg, const IntegratorOptions& opts = {},
                                      double t_end = std::numeric_limits<double>::quiet_NaN());

}  // namespace skinbreather
