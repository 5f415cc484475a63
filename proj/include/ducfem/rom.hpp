#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <string>

#include "ducfem/helmholtz.hpp"
#include "ducfem/pod.hpp"

namespace ducfem {

/// Largest reduced dimension handled with dense storage.
inline constexpr Index kMaxReducedDimension = 512;

/// Offline projections of the block operators onto a basis Z. Every member is
/// N x N or length N, so online assembly never touches full-order data.
struct RomOperators {
  Eigen::MatrixXd Mr;         // Z'(I - I_D) M Z
  Eigen::MatrixXd Sr;         // Z'(I - I_D) S Z
  Eigen::MatrixXd K2r;        // Z'(I - I_D) K2 Z
  Eigen::MatrixXd K2r_skew;   // Z'(I - I_D) K2~ Z
  Eigen::MatrixXd K4r_skew;   // Z'(I - I_D) K4~ Z
  Eigen::MatrixXd Ir;         // Z' I_D Z
  Eigen::MatrixXd Mr_energy;  // Z' M Z
  Eigen::VectorXd gr_red;     // Z' g_r
  Eigen::VectorXd gi_red;     // Z' g_i
  PodMode mode = PodMode::euclidean;
  std::string basis_ref;

  Index N() const { return Mr.rows(); }
};

RomOperators project_operators(const Eigen::MatrixXd& Z, const FomOperators& fom,
                               PodMode mode = PodMode::euclidean, std::string basis_ref = {});

inline RomOperators project_operators(const PodBasis& basis, const FomOperators& fom,
                                      std::string basis_ref = {}) {
  return project_operators(basis.Z, fom, basis.mode, std::move(basis_ref));
}

struct ReducedSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  RandomParams theta;
  Impedance xi;
};

/// A_r = Sr - k^2 Mr + c2 K2r + c2s K2r~ + k K4r~ + Ir and b_r = mu_r gr + mu_i gi.
ReducedSystem assemble_rom(const RomOperators& rom, const RandomParams& theta,
                           const Impedance& xi);

/// dA_r/dxi_c for c = 0 (real part) or 1 (imaginary part).
Eigen::MatrixXd rom_impedance_derivative(const RomOperators& rom, double k, const Impedance& xi,
                                         int component);

struct RomSolution {
  Eigen::VectorXd p_rb;
  RandomParams theta;
  Impedance xi;
};

/// Dense LU of A_r that also serves the adjoint (transposed) solve.
class ReducedFactorization {
 public:
  explicit ReducedFactorization(const Eigen::MatrixXd& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& rhs) const {
    return lu_.transpose().solve(rhs);
  }
  double rcond() const { return rcond_; }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double rcond_ = 0;
};

RomSolution solve_rom(const ReducedSystem& sys);

/// p_rb' Mr_energy p_rb, the L2 energy of the reconstruction Z p_rb.
double rom_energy(const RomSolution& sol, const RomOperators& rom);
double rom_energy(const Eigen::VectorXd& p_rb, const RomOperators& rom);

/// |Z p_rb - p| / |p| in the Euclidean norm, p the full-order solution.
double relative_error(const Impedance& xi, const RandomParams& theta, const Eigen::MatrixXd& Z,
                      const RomOperators& rom, const FomOperators& fom,
                      const SolverMethod& method = DirectSolve{});

}  // namespace ducfem
