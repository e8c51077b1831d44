#include "skinbreather/stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace skinbreather {

namespace {

template <typename Scalar>
std::vector<std::complex<double>> eigenvalues_of(const Matrix<Scalar>& c) {
  Eigen::EigenSolver<Matrix<Scalar>> es(c, false);
  if (es.info() != Eigen::Success) throw NumericError("classify: eigensolver did not converge");
  std::vector<std::complex<double>> out;
  out.reserve(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const auto z = es.eigenvalues()(i);
    out.emplace_back(to_double(z.real()), to_double(z.imag()));
  }
  return out;
}

}  // namespace

StabilityReport classify(const StationaryState& state, const LatticeParams& params, const StabilityOptions& opts) {
  if (!(opts.tau >= 0.0)) throw std::invalid_argument("classify: tau must be >= 0");
  if (state.gamma == 0.0) throw std::domain_error("classify: Gamma = 0 is not classified");
  build_stability_matrix(state, params);

  StabilityReport report;
  report.tau = opts.tau;
  report.extended_model = params.hop_right != 0.0 || params.boundary == Boundary::Periodic;
  if (opts.precision_digits > 16) {
    PrecisionGuard guard(opts.precision_digits);
    // A residual r at working precision shifts the phase-mode pair to about sqrt(r).
    const auto precise = refine_state(from_double_state<Extended>(state), params);
    report.eigenvalues = eigenvalues_of(stability_matrix(precise, params));
    report.digits = opts.precision_digits;
  } else {
    report.eigenvalues = eigenvalues_of(stability_matrix(state, params));
  }
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  report.max_real = report.eigenvalues.front().real();
  report.stable = report.max_real <= opts.tau;
  return report;
}

std::vector<AnnotatedBranch> stability_map(const std::vector<Branch>& branches, const LatticeParams& params,
                                           const StabilityOptions& opts) {
  std::vector<AnnotatedBranch> out;
  out.reserve(branches.size());
  for (const auto& b : branches) {
    AnnotatedBranch ab{b.pattern, b.label, {}};
    for (const auto& s : b.samples) {
      AnnotatedSample as{s, std::nullopt, {}};
      try {
        as.report = classify(s, params, opts);
      } catch (const std::exception& e) {
        as.error = e.what();
      }
      ab.samples.push_back(std::move(as));
    }
    out.push_back(std::move(ab));
  }
  return out;
}

}  // namespace skinbreather
