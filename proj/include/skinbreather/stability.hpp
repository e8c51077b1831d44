#pragma once

#include "skinbreather/stationary.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace skinbreather {

/// Residual bound a state must meet before it is linearized.
inline constexpr double kLinearizationTolerance = 1e-10;

/// Linearization of the stationary state in the frame rotating with E, acting
/// on (Re u, Im u):
///   C = [[0, A], [-B, 0]],  A = diag(Gamma psi^2 - E) + S,  B = diag(3 Gamma psi^2 - E) + S,
/// where S carries J_L u_{n+1} + J_R u_{n-1} (cyclic under PBC).
template <typename Scalar>
Matrix<Scalar> stability_matrix(const BasicStationaryState<Scalar>& state, const LatticeParams& params) {
  const int L = params.sites;
  if (state.psi.size() != L) throw std::invalid_argument("stability_matrix: length mismatch");
  const bool periodic = params.boundary == Boundary::Periodic;
  Matrix<Scalar> shift = Matrix<Scalar>::Zero(L, L);
  for (int n = 0; n < L; ++n) {
    if (n + 1 < L) shift(n, n + 1) += Scalar(params.hop_left);
    else if (periodic) shift(n, 0) += Scalar(params.hop_left);
    if (n > 0) shift(n, n - 1) += Scalar(params.hop_right);
    else if (periodic) shift(n, L - 1) += Scalar(params.hop_right);
  }
  Matrix<Scalar> a = shift, b = shift;
  for (int n = 0; n < L; ++n) {
    const Scalar g2 = state.gamma * state.psi(n) * state.psi(n);
    a(n, n) += g2 - state.energy;
    b(n, n) += Scalar(3) * g2 - state.energy;
  }
  Matrix<Scalar> c = Matrix<Scalar>::Zero(2 * L, 2 * L);
  c.topRightCorner(L, L) = a;
  c.bottomLeftCorner(L, L) = -b;
  return c;
}

/// stability_matrix after checking that `state` solves the stationary equation.
template <typename Scalar>
Matrix<Scalar> build_stability_matrix(const BasicStationaryState<Scalar>& state, const LatticeParams& params) {
  const double res = to_double(residual(state, params).template lpNorm<Eigen::Infinity>());
  if (!(res < kLinearizationTolerance))
    throw std::invalid_argument("build_stability_matrix: state residual " + std::to_string(res) +
                                " is not a stationary solution");
  return stability_matrix(state, params);
}

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StabilityOptions {
  double tau = 1e-8;
  // Eigenvalues are computed at this many digits when above 16. Tail sites of
  // the open chain form Jordan blocks, which a double eigensolver splits by
  // eps^{1/k} and turns into spurious growth rates.
  int precision_digits = 40;
};

struct StabilityReport {
  std::vector<std::complex<double>> eigenvalues;  // 2L entries
  double max_real = 0.0;
  bool stable = true;
  double tau = 0.0;
  bool extended_model = false;  // J_R != 0 or PBC
  int digits = 16;
};

StabilityReport classify(const StationaryState& state, const LatticeParams& params, const StabilityOptions& opts = {});

struct AnnotatedSample {
  StationaryState state;
  std::optional<StabilityReport> report;
  std::string error;
};

struct AnnotatedBranch {
  Pattern pattern;
  int label = 0;
  std::vector<AnnotatedSample> samples;
};

/// classify on every sample; failures are stored per sample.
std::vector<AnnotatedBranch> stability_map(const std::vector<Branch>& branches, const LatticeParams& params,
                                           const StabilityOptions& opts = {});

}  // namespace skinbreather
