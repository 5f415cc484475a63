#pragma once

#include <Eigen/Core>
#include <complex>
#include <utility>
#include <vector>

#include "ducfem/helmholtz.hpp"

namespace ducfem {

/// One snapshot parameter: wavenumber, complex amplitude and impedance.
struct ParameterSample {
  double k = 5.0;
  std::complex<double> mu{1.0, 0.0};
  double xi_r = 1.0;
  double xi_i = 0.0;

  RandomParams theta() const { return {k, mu.real(), mu.imag()}; }
  Impedance impedance() const { return {xi_r, xi_i, false}; }
  bool operator==(const ParameterSample&) const = default;
};

/// Cartesian product k x mu x xi_r x xi_i with `k_count` uniform k values on
/// the closed `k_range`, k varying slowest.
std::vector<ParameterSample> default_sample_grid(int k_count, std::pair<double, double> k_range,
                                                 const std::vector<std::complex<double>>& mu_set,
                                                 const std::vector<double>& xir_set,
                                                 const std::vector<double>& xii_set);

struct SnapshotSet {
  Eigen::MatrixXd P;  // 2n x m, column j solves sample j
  std::vector<ParameterSample> samples;
  Eigen::VectorXd seconds;  // wall time per column; a shared factorization counts once
};

/// Solves the full-order model for every sample. Samples sharing (k, xi)
/// share one factorization; groups are distributed over `workers` threads.
SnapshotSet build_snapshots(const FomOperators& fom, const std::vector<ParameterSample>& samples,
                            const SolverMethod& method = DirectSolve{}, int workers = 1);

enum class PodMode { euclidean, mass_weighted };

const char* to_string(PodMode mode);
PodMode parse_pod_mode(const std::string& text);

/// Number of retained modes: fixed rank, energy fraction tau, or every mode
/// of the numerical rank.
struct ModeSelection {
  enum class Kind { rank, energy, all } kind = Kind::energy;
  Index rank = 0;
  double tau = 0.995;

  static ModeSelection fixed(Index n) { return {Kind::rank, n, 0.0}; }
  static ModeSelection energy_fraction(double t) { return {Kind::energy, 0, t}; }
  static ModeSelection all_modes() { return {Kind::all, 0, 0.0}; }
};

struct PodBasis {
  Eigen::MatrixXd Z;                // 2n x N modes
  Eigen::VectorXd singular_values;  // full positive spectrum, non-increasing
  PodMode mode = PodMode::euclidean;

  Index modes() const { return Z.cols(); }
  Index rank() const { return singular_values.size(); }
};

/// Modes kept by `select` for the spectrum `s`; RankError if a fixed count
/// exceeds the numerical rank.
Index mode_count(const ModeSelection& select, const Eigen::VectorXd& singular_values);

/// Smallest N with sqrt(sum_{i<=N} s_i^2) >= tau sqrt(sum_i s_i^2).
Index energy_mode_count(const Eigen::VectorXd& singular_values, double tau);

/// Euclidean POD through a thin QR of P followed by an SVD of R.
PodBasis pod_qr_svd(const Eigen::MatrixXd& P, const ModeSelection& select);

/// Mass-weighted POD from the eigenpairs of P' M P. `mass` is the 2n block mass.
PodBasis pod_correlation(const Eigen::MatrixXd& P, const SparseMatrix& mass,
                         const ModeSelection& select);

/// Leading `count` modes of `basis`, spectrum kept.
PodBasis truncate(const PodBasis& basis, Index count);

/// Columns P - Pi P, with Pi the projection onto the modes that is orthogonal
/// in the basis inner product (block `mass` for mass_weighted, identity
/// otherwise; `mass` is ignored in euclidean mode).
Eigen::MatrixXd projection_residual(const Eigen::MatrixXd& P, const PodBasis& basis,
                                    const SparseMatrix& mass);

/// sum_j R_j' W R_j
double weighted_norm_sq(const Eigen::MatrixXd& R, const SparseMatrix& W);

}  // namespace ducfem
