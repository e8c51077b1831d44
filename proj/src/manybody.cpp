#include "skinbreather/manybody.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace skinbreather {

namespace {

constexpr double kGroupTol = 1e-8;
constexpr double kRankTol = 1e-8;

void fill(int site, int left, Occupation& occ, std::vector<Occupation>& out) {
  const int L = static_cast<int>(occ.size());
  if (site == L - 1) {
    occ[site] = left;
    out.push_back(occ);
    return;
  }
  for (int k = left; k >= 0; --k) {
    occ[site] = k;
    fill(site + 1, left - k, occ, out);
  }
}

bool close(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) <= kGroupTol * std::max(1.0, std::abs(a));
}

}  // namespace

std::size_t FockBasis::index_of(const Occupation& occ) const {
  auto it = std::lower_bound(states.begin(), states.end(), occ, std::greater<>());
  if (it == states.end() || *it != occ) throw std::out_of_range("FockBasis: occupation not in basis");
  return static_cast<std::size_t>(it - states.begin());
}

FockBasis build_basis(int sites, int bosons, std::size_t cap) {
  if (sites < 1) throw std::invalid_argument("build_basis: needs L >= 1");
  if (bosons < 0) throw std::invalid_argument("build_basis: needs N >= 0");
  // binomial(N + L - 1, L - 1) in floating point first, so huge requests fail before allocating
  const double dim = std::round(std::exp(std::lgamma(bosons + sites) - std::lgamma(sites) - std::lgamma(bosons + 1.0)));
  if (dim > static_cast<double>(cap))
    throw CapacityError("build_basis: dimension " + format_scalar(dim) + " exceeds cap " + std::to_string(cap));
  FockBasis basis{sites, bosons, {}};
  basis.states.reserve(static_cast<std::size_t>(dim));
  Occupation occ(sites, 0);
  fill(0, bosons, occ, basis.states);
  return basis;
}

std::vector<double> interaction_diagonal(const FockBasis& basis, double interaction) {
  std::vector<double> d;
  d.reserve(basis.size());
  for (const auto& occ : basis.states) {
    double pairs = 0.0;
    for (int n : occ) pairs += static_cast<double>(n) * (n - 1);
    d.push_back(0.5 * interaction * pairs);
  }
  return d;
}

Eigen::MatrixXd build_hamiltonian(const FockBasis& basis, double hop_left, double interaction) {
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const auto diag = interaction_diagonal(basis, interaction);
  for (Eigen::Index j = 0; j < dim; ++j) {
    h(j, j) = diag[j];
    const Occupation& occ = basis.states[j];
    for (int i = 0; i + 1 < basis.sites; ++i) {
      if (occ[i + 1] == 0) continue;
      Occupation moved = occ;
      moved[i] += 1;
      moved[i + 1] -= 1;
      const auto row = static_cast<Eigen::Index>(basis.index_of(moved));
      h(row, j) += -hop_left * std::sqrt(static_cast<double>(occ[i] + 1) * occ[i + 1]);
    }
  }
  return h;
}

std::vector<ManyBodyResult> spectrum(const FockBasis& basis, double hop_left, const std::vector<double>& u_grid) {
  if (u_grid.empty()) throw std::invalid_argument("spectrum: empty U grid");
  const auto dim = static_cast<Eigen::Index>(basis.size());
  std::vector<ManyBodyResult> out;
  for (double u : u_grid) {
    ManyBodyResult res;
    res.interaction = u;
    const Eigen::MatrixXd h = build_hamiltonian(basis, hop_left, u);
    Eigen::EigenSolver<Eigen::MatrixXd> es(h, false);
    if (es.info() != Eigen::Success) {
      res.error = "eigensolver did not converge at U=" + format_scalar(u);
      out.push_back(std::move(res));
      continue;
    }
    for (Eigen::Index i = 0; i < dim; ++i) res.eigenvalues.push_back(es.eigenvalues()(i));
    std::sort(res.eigenvalues.begin(), res.eigenvalues.end(), [](const auto& a, const auto& b) {
      return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });

    res.distributions.setConstant(dim, basis.sites, std::numeric_limits<double>::quiet_NaN());
    res.defective.assign(static_cast<std::size_t>(dim), false);
    const Eigen::MatrixXcd hc = h.cast<std::complex<double>>();
    for (Eigen::Index start = 0; start < dim;) {
      Eigen::Index end = start + 1;
      while (end < dim && close(res.eigenvalues[start], res.eigenvalues[end])) ++end;
      std::complex<double> lambda(0.0);
      for (Eigen::Index k = start; k < end; ++k) lambda += res.eigenvalues[k];
      lambda /= static_cast<double>(end - start);

      Eigen::BDCSVD<Eigen::MatrixXcd> svd(hc - lambda * Eigen::MatrixXcd::Identity(dim, dim), Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double cutoff = kRankTol * std::max(1.0, sv(0));
      Eigen::Index nullity = 0;
      for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) <= cutoff) ++nullity;
      const Eigen::Index group = end - start;
      if (nullity < group) {
        for (Eigen::Index k = start; k < end; ++k) res.defective[k] = true;
      } else {
        for (Eigen::Index k = 0; k < group; ++k) {
          const Eigen::VectorXcd v = svd.matrixV().col(dim - 1 - k);
          const double weight = v.squaredNorm();
          for (int i = 0; i < basis.sites; ++i) {
            double occ = 0.0;
            for (Eigen::Index s = 0; s < dim; ++s) occ += std::norm(v(s)) * basis.states[s][i];
            res.distributions(start + k, i) = occ / weight;
          }
        }
      }
      start = end;
    }
    out.push_back(std::move(res));
  }
  return out;
}

ScalingAbsenceReport scaling_absence_check(int sites, int bosons, double hop_left, const std::vector<double>& u_grid) {
  std::vector<double> us;
  for (double u : u_grid)
    if (u > 0.0) us.push_back(u);
  if (us.size() < 3) throw std::invalid_argument("scaling_absence_check: needs at least 3 positive U values");
  std::sort(us.begin(), us.end());

  const FockBasis basis = build_basis(sites, bosons);
  const auto results = spectrum(basis, hop_left, us);
  std::vector<std::vector<double>> bands;  // bands[u][k]: k-th distinct value, descending
  for (const auto& r : results) {
    if (!r.error.empty()) throw std::runtime_error(r.error);
    std::vector<double> distinct;
    for (const auto& z : r.eigenvalues)
      if (distinct.empty() || !close(distinct.back(), z.real())) distinct.push_back(z.real());
    bands.push_back(std::move(distinct));
  }
  std::size_t count = bands.front().size();
  for (const auto& b : bands) count = std::min(count, b.size());

  ScalingAbsenceReport report;
  for (std::size_t k = 0; k < count; ++k) {
    bool zero = true;
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < us.size(); ++i) {
      const double e = std::abs(bands[i][k]);
      if (e > 1e-12) zero = false;
      points.emplace_back(us[i], e);
    }
    if (zero) {
      ++report.zero_bands;
      continue;
    }
    BandScaling band;
    band.band = static_cast<int>(k) + 1;
    band.value = bands.back()[k];
    band.fit = fit_power_law(points);
    report.max_exponent_deviation = std::max(report.max_exponent_deviation, std::abs(band.fit.exponent - 1.0));
    report.bands.push_back(band);
  }
  report.all_linear = !report.bands.empty() && report.max_exponent_deviation <= 0.01;
  return report;
}

}  // namespace skinbreather
