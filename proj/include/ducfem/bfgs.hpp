#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "ducfem/cvar.hpp"

namespace ducfem {

struct BfgsOptions {
  int max_iter = 100;
  double grad_tol = 1e-6;   // relative to |g0|
  double value_tol = 1e-6;  // relative to |J0|
  double step_tol = 1e-6;   // relative to |x|
  double armijo = 1e-4;
  int max_trials = 10;
  double curvature_min = 1e-12;
};

enum class BfgsStatus { gradient, value, step, max_iter, line_search_failed };

const char* to_string(BfgsStatus status);

/// Value and gradient at one point; the objective always returns both.
struct Evaluation {
  double value = 0;
  Eigen::VectorXd gradient;
};

using Objective = std::function<Evaluation(const Eigen::VectorXd&)>;

struct BfgsRecord {
  int iter = 0;
  double J = 0;
  double grad_norm = 0;
  Eigen::VectorXd x;
  double step_len = 0;  // accepted step length t, 0 for the start point
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd H;  // inverse-Hessian approximation
  int iterations = 0;
  int evaluations = 0;
  BfgsStatus status = BfgsStatus::max_iter;
  std::vector<BfgsRecord> history;
};

/// Quasi-Newton minimization with H0 = I/|g0| and an Armijo line search that
/// backtracks by quadratic, then cubic interpolation. An objective that throws
/// or returns a non-finite value counts as a rejected trial.
BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& options = {});

/// Optimization state over the controls (xi_r, xi_i, alpha).
struct OptState {
  Impedance xi;
  double alpha = 0;
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  int iter = 0;
  std::vector<BfgsRecord> history;
  BfgsStatus status = BfgsStatus::max_iter;
  Index pde_solves = 0;
  int evaluations = 0;
  double J = 0;
  Eigen::VectorXd energies;  // per-sample energies at the returned point
};

/// Minimizes the smoothed CVaR objective of the reduced model over
/// (xi_r, xi_i, alpha). `samples` must hold cfg.Q draws.
OptState optimize(const CvarConfig& cfg, const RomOperators& rom,
                  const std::vector<RandomParams>& samples, const Impedance& init_xi,
                  double init_alpha, int workers = 1, const BfgsOptions& options = {});

/// Deterministic single-parameter optimization over (xi_r, xi_i).
struct DeterministicRun {
  Impedance xi;
  double J = 0;
  double energy = 0;
  int iter = 0;
  int evaluations = 0;
  BfgsStatus status = BfgsStatus::max_iter;
  std::vector<BfgsRecord> history;
};

DeterministicRun optimize_deterministic(const RomOperators& rom, const RandomParams& theta,
                                        const Impedance& init_xi, double gamma_p, double gamma,
                                        const BfgsOptions& options = {});
DeterministicRun optimize_deterministic(const FomOperators& fom, const RandomParams& theta,
                                        const Impedance& init_xi, double gamma_p, double gamma,
                                        const BfgsOptions& options = {});

}  // namespace ducfem
