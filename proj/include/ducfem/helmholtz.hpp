#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <complex>
#include <memory>
#include <variant>
#include <vector>

#include "ducfem/fem.hpp"

namespace ducfem {

/// Random inputs: wavenumber and complex source amplitude mu_r + i mu_i.
struct RandomParams {
  double k = 5.0;
  double mu_r = 1.0;
  double mu_i = 0.0;
};

/// Liner impedance xi_r + i xi_i. In the hard-wall limit the liner terms vanish.
struct Impedance {
  double xi_r = 1.0;
  double xi_i = 0.0;
  bool hard_wall = false;

  static Impedance hard() { return {0.0, 0.0, true}; }
  double norm_sq() const { return xi_r * xi_r + xi_i * xi_i; }
};

void validate(const RandomParams& theta);
void validate(const Impedance& xi);

/// Scalar factors of the boundary terms of the block operator:
/// K2 (symmetric part), K2 skew part and K4 skew part.
struct RobinCoefficients {
  double liner_sym = 0;   // k xi_i / |xi|^2
  double liner_skew = 0;  // k xi_r / |xi|^2
  double far_skew = 0;    // k
};

RobinCoefficients robin_coefficients(double k, const Impedance& xi);

/// Row c = d/dxi_c (c = 0 real, 1 imaginary); column 0 = liner_sym, 1 = liner_skew.
Eigen::Matrix2d robin_impedance_jacobian(double k, const Impedance& xi);

/// Real 2n x 2n operator [[B, -C], [C, B]] before Dirichlet imposition.
SparseMatrix assemble_block(const FomOperators& fom, const RandomParams& theta,
                            const Impedance& xi);

/// Zeroes the masked rows of `A` and puts a unit on their diagonal.
SparseMatrix impose_dirichlet_rows(const SparseMatrix& A, const std::vector<char>& mask);

/// Zeroes the masked rows of `A` only.
SparseMatrix drop_rows(const SparseMatrix& A, const std::vector<char>& mask);

/// mu_r g_r + mu_i g_i.
Eigen::VectorXd dirichlet_rhs(const FomOperators& fom, double mu_r, double mu_i);

/// Dirichlet-imposed block system A p = b.
struct BlockSystem {
  SparseMatrix A;
  Eigen::VectorXd b;
  Index n = 0;
  // kept for building the shifted-Laplacian preconditioner
  double k = 0;
  SparseMatrix mass;
  std::vector<char> dirichlet;
};

BlockSystem apply_dirichlet(const SparseMatrix& Atilde, const FomOperators& fom,
                            const RandomParams& theta);

/// Block form of -Lap - (beta1 - i beta2) k^2 with the boundary and Dirichlet
/// rows of `sys`: only the volume term is shifted.
SparseMatrix shifted_laplacian(const BlockSystem& sys, double beta1, double beta2);

struct DirectSolve {};

struct GmresShiftedLaplacian {
  double beta1 = 1.0;
  double beta2 = 0.5;
  double tol = 1e-6;
  int max_iter = 2000;
};

using SolverMethod = std::variant<DirectSolve, GmresShiftedLaplacian>;

struct FomSolution {
  Eigen::VectorXd p;
  int iterations = 0;
  double relative_residual = 0;
};

/// Sparse LU of a block operator; const solves may run concurrently.
class SparseFactorization {
 public:
  explicit SparseFactorization(const SparseMatrix& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& rhs) const;

 private:
  std::shared_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

/// Factorizes once (the operator or its preconditioner) and solves for any
/// right-hand side, so several source amplitudes share one factorization.
class HelmholtzSolver {
 public:
  HelmholtzSolver(BlockSystem sys, const SolverMethod& method);

  FomSolution solve(const Eigen::VectorXd& rhs) const;
  FomSolution solve() const { return solve(sys_.b); }
  /// Direct solve with A^T. The GMRES path factorizes A for each call.
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& rhs) const;

  const BlockSystem& system() const { return sys_; }

 private:
  BlockSystem sys_;
  SolverMethod method_;
  std::shared_ptr<const SparseFactorization> factor_;  // of A, or of the preconditioner
};

FomSolution solve_fom(const BlockSystem& sys, const SolverMethod& method = DirectSolve{});

/// Convenience: assemble, impose and solve in one call.
FomSolution solve_state(const FomOperators& fom, const RandomParams& theta, const Impedance& xi,
                        const SolverMethod& method = DirectSolve{});

/// p_r' M0 p_r + p_i' M0 p_i, the discrete L2 energy of p.
double noise_energy(const Eigen::VectorXd& p, const FomOperators& fom);

}  // namespace ducfem
