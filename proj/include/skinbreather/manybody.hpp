#pragma once

#include "skinbreather/asymptotics.hpp"

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace skinbreather {

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

using Occupation = std::vector<int>;

/// Fock states n_1..n_L with sum N, in descending lexicographic order. In this
/// order a leftward hop always lands on an earlier state, so the Hamiltonian
/// is upper triangular.
struct FockBasis {
  int sites = 0;
  int bosons = 0;
  std::vector<Occupation> states;

  std::size_t size() const { return states.size(); }
  /// Position of `occ` in `states`; throws std::out_of_range if absent.
  std::size_t index_of(const Occupation& occ) const;
};

inline constexpr std::size_t kBasisCap = 1'000'000;

FockBasis build_basis(int sites, int bosons, std::size_t cap = kBasisCap);

/// H = -J_L sum_i a_i^dag a_{i+1} + (U/2) sum_i n_i (n_i - 1).
Eigen::MatrixXd build_hamiltonian(const FockBasis& basis, double hop_left, double interaction);

/// (U/2) sum_i n_i (n_i - 1) for every basis state.
std::vector<double> interaction_diagonal(const FockBasis& basis, double interaction);

struct ManyBodyResult {
  double interaction = 0.0;
  std::vector<std::complex<double>> eigenvalues;  // descending real part
  Eigen::MatrixXd distributions;                  // row k: <n_i> of eigenstate k, NaN when defective
  std::vector<bool> defective;
  std::string error;  // nonempty when the eigensolver failed at this U
};

/// Eigenvalues are grouped at 1e-8; a group is defective when the null space
/// of H - lambda (SVD rank at 1e-8) is smaller than the group.
std::vector<ManyBodyResult> spectrum(const FockBasis& basis, double hop_left, const std::vector<double>& u_grid);

struct BandScaling {
  int band = 0;        // 1 = highest distinct eigenvalue
  double value = 0.0;  // band energy at the largest U
  ScalingFit fit;
};

struct ScalingAbsenceReport {
  std::vector<BandScaling> bands;  // nonzero bands only
  int zero_bands = 0;              // bands identically zero, not fitted
  double max_exponent_deviation = 0.0;  // max |exponent - 1|
  bool all_linear = false;              // every deviation <= 0.01
};

/// Fits log E_band against log U over the positive entries of `u_grid`.
ScalingAbsenceReport scaling_absence_check(int sites, int bosons, double hop_left, const std::vector<double>& u_grid);

}  // namespace skinbreather
