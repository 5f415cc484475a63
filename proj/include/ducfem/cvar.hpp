#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ducfem/helmholtz.hpp"
#include "ducfem/rom.hpp"

namespace ducfem {

/// C^2 smoothing of max(x, 0) on the band |x| < eps/2. Inside the band
/// h = s^3/eps^2 - s^4/(2 eps^3) with s = x + eps/2, evaluated through u = s/eps
/// so that h(0) = 3 eps/32 and the knot values come out exact.
template <typename Scalar>
Scalar smoothed_plus(Scalar x, Scalar eps) {
  const Scalar half = eps / Scalar(2);
  if (x <= -half) return Scalar(0);
  if (x >= half) return x;
  const Scalar u = (x + half) / eps;
  return eps * (u * u * u * (Scalar(1) - u / Scalar(2)));
}

template <typename Scalar>
Scalar smoothed_plus_d(Scalar x, Scalar eps) {
  const Scalar half = eps / Scalar(2);
  if (x <= -half) return Scalar(0);
  if (x >= half) return Scalar(1);
  const Scalar u = (x + half) / eps;
  return u * u * (Scalar(3) - Scalar(2) * u);
}

template <typename Scalar>
Scalar smoothed_plus_dd(Scalar x, Scalar eps) {
  const Scalar half = eps / Scalar(2);
  if (x <= -half || x >= half) return Scalar(0);
  const Scalar u = (x + half) / eps;
  return Scalar(6) * u * (Scalar(1) - u) / eps;
}

struct Range {
  double lo = 0;
  double hi = 0;
};

/// Risk-averse objective settings and the Monte Carlo sampling ranges.
struct CvarConfig {
  double beta = 0.95;
  double eps = 1e-4;
  double gamma = 1e-6;
  double gamma_p = 1.0;
  Index Q = 16000;
  std::uint64_t seed = 2017;
  Range k{5.0, 10.0};
  Range mu_r{10.0, 30.0};
  Range mu_i{10.0, 30.0};
  Eigen::VectorXd weights;  // empty means 1/Q each
};

void validate(const CvarConfig& cfg);

/// The configured weights, or the Monte Carlo weights 1/Q.
Eigen::VectorXd quadrature_weights(const CvarConfig& cfg);

/// Q i.i.d. uniform draws of (k, mu_r, mu_i); reproducible for a fixed seed.
std::vector<RandomParams> sample_params(const CvarConfig& cfg);

/// Objective value with per-sample energies E_j (unnormalized).
struct ObjectiveValue {
  double J = 0;
  Eigen::VectorXd energies;
  Index solves = 0;
};

struct ObjectiveGradient {
  double J = 0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();  // (d xi_r, d xi_i, d alpha)
  Eigen::VectorXd energies;
  Index solves = 0;  // state plus adjoint solves
};

/// J = 1/2 [alpha + 1/(1-beta) sum_j w_j h_eps(E_j/gamma_p - alpha)] + gamma/2 |xi|^2
/// over reduced solutions. Per-sample solves run on `workers` threads and are
/// reduced in sample order.
ObjectiveValue evaluate_objective(const Impedance& xi, double alpha,
                                  const std::vector<RandomParams>& samples,
                                  const RomOperators& rom, const CvarConfig& cfg, int workers = 1);

/// Objective and its adjoint gradient in (xi_r, xi_i, alpha).
ObjectiveGradient solve_adjoints_and_gradient(const Impedance& xi, double alpha,
                                              const std::vector<RandomParams>& samples,
                                              const RomOperators& rom, const CvarConfig& cfg,
                                              int workers = 1);

/// Full-order counterpart of solve_adjoints_and_gradient (sparse direct solves).
ObjectiveGradient fom_objective_and_gradient(const Impedance& xi, double alpha,
                                             const std::vector<RandomParams>& samples,
                                             const FomOperators& fom, const CvarConfig& cfg,
                                             int workers = 1);

/// 1/2 E(xi; theta)/gamma_p + gamma/2 |xi|^2 and its gradient in (xi_r, xi_i).
struct DeterministicValue {
  double J = 0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  double energy = 0;
};

DeterministicValue deterministic_objective(const Impedance& xi, const RandomParams& theta,
                                           const RomOperators& rom, double gamma_p,
                                           double gamma);
DeterministicValue deterministic_objective(const Impedance& xi, const RandomParams& theta,
                                           const FomOperators& fom, double gamma_p,
                                           double gamma);

/// Hard-wall energy at the nominal parameter, used as gamma_p.
double hard_wall_energy(const RomOperators& rom, const RandomParams& nominal);
double hard_wall_energy(const FomOperators& fom, const RandomParams& nominal);

struct RiskEstimate {
  double var = 0;
  double cvar = 0;
};

/// VaR = min{a : Psi(a) >= beta} of the weighted empirical distribution and
/// CVaR = weighted mean of the values >= VaR. Empty weights mean equal weights.
RiskEstimate empirical_var_cvar(const Eigen::VectorXd& values, double beta,
                                const Eigen::VectorXd& weights = {});

/// Distribution-free standard error of the empirical beta-quantile: half the
/// spread between the order statistics at Q beta -/+ sqrt(Q beta (1-beta)).
double quantile_standard_error(const Eigen::VectorXd& values, double beta);

}  // namespace ducfem
