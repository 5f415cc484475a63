#include "ducfem/rom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ducfem/errors.hpp"

namespace ducfem {

namespace {

// Z' (I - I_D) W Z for a full 2n x 2n block operator W.
Eigen::MatrixXd project_interior(const Eigen::MatrixXd& Z, const SparseMatrix& W,
                                 const std::vector<char>& mask) {
  Eigen::MatrixXd WZ = W * Z;
  for (Index i = 0; i < WZ.rows(); ++i)
    if (mask[i]) WZ.row(i).setZero();
  return Z.transpose() * WZ;
}

}  // namespace

RomOperators project_operators(const Eigen::MatrixXd& Z, const FomOperators& fom, PodMode mode,
                               std::string basis_ref) {
  const Index n = fom.n();
  if (Z.rows() != 2 * n)
    throw Error("basis has " + std::to_string(Z.rows()) + " rows, expected " +
                std::to_string(2 * n));
  if (Z.cols() < 1) throw Error("basis has no modes");
  if (Z.cols() > kMaxReducedDimension)
    throw Error("reduced dimension " + std::to_string(Z.cols()) + " exceeds " +
                std::to_string(kMaxReducedDimension));

  const auto mask = fom.block_dirichlet_mask();
  const SparseMatrix M = block_diagonal(fom.M0);

  RomOperators rom;
  rom.mode = mode;
  rom.basis_ref = std::move(basis_ref);
  rom.Mr = project_interior(Z, M, mask);
  rom.Sr = project_interior(Z, block_diagonal(fom.S0), mask);
  rom.K2r = project_interior(Z, block_diagonal(fom.K2_0), mask);
  rom.K2r_skew = project_interior(Z, block_skew(fom.K2_0), mask);
  rom.K4r_skew = project_interior(Z, block_skew(fom.K4_0), mask);

  Eigen::MatrixXd ZD = Eigen::MatrixXd::Zero(Z.rows(), Z.cols());
  for (Index i = 0; i < Z.rows(); ++i)
    if (mask[i]) ZD.row(i) = Z.row(i);
  rom.Ir = ZD.transpose() * ZD;
  rom.Mr_energy = Z.transpose() * (M * Z);

  rom.gr_red = Z.topRows(n).transpose() * fom.g_gamma1;
  rom.gi_red = Z.bottomRows(n).transpose() * fom.g_gamma1;
  return rom;
}

ReducedSystem assemble_rom(const RomOperators& rom, const RandomParams& theta,
                           const Impedance& xi) {
  const auto c = robin_coefficients(theta.k, xi);
  ReducedSystem sys;
  sys.theta = theta;
  sys.xi = xi;
  sys.A = rom.Sr - theta.k * theta.k * rom.Mr + c.far_skew * rom.K4r_skew + rom.Ir;
  if (!xi.hard_wall) sys.A += c.liner_sym * rom.K2r + c.liner_skew * rom.K2r_skew;
  sys.b = theta.mu_r * rom.gr_red + theta.mu_i * rom.gi_red;
  return sys;
}

Eigen::MatrixXd rom_impedance_derivative(const RomOperators& rom, double k, const Impedance& xi,
                                         int component) {
  const Eigen::Matrix2d jac = robin_impedance_jacobian(k, xi);
  return jac(component, 0) * rom.K2r + jac(component, 1) * rom.K2r_skew;
}

ReducedFactorization::ReducedFactorization(const Eigen::MatrixXd& A) : lu_(A) {
  // The Hager estimate can miss an exactly zero pivot, so the pivot spread
  // bounds it from above.
  const Eigen::VectorXd pivots = lu_.matrixLU().diagonal().cwiseAbs();
  const double spread = pivots.maxCoeff() > 0 ? pivots.minCoeff() / pivots.maxCoeff() : 0.0;
  rcond_ = std::min(lu_.rcond(), spread);
  if (!(rcond_ > std::numeric_limits<double>::epsilon()))
    throw SolverError("reduced system is singular to working precision, rcond " +
                          std::to_string(rcond_),
                      rcond_);
}

RomSolution solve_rom(const ReducedSystem& sys) {
  if (sys.A.rows() != sys.A.cols() || sys.A.rows() != sys.b.size())
    throw Error("reduced system dimensions do not match");
  return {ReducedFactorization(sys.A).solve(sys.b), sys.theta, sys.xi};
}

double rom_energy(const Eigen::VectorXd& p_rb, const RomOperators& rom) {
  return p_rb.dot(rom.Mr_energy * p_rb);
}

double rom_energy(const RomSolution& sol, const RomOperators& rom) {
  return rom_energy(sol.p_rb, rom);
}

double relative_error(const Impedance& xi, const RandomParams& theta, const Eigen::MatrixXd& Z,
                      const RomOperators& rom, const FomOperators& fom,
                      const SolverMethod& method) {
  const Eigen::VectorXd p = solve_state(fom, theta, xi, method).p;
  const double pn = p.norm();
  if (pn == 0) throw Error("full-order solution is zero; relative error undefined");
  const auto sol = solve_rom(assemble_rom(rom, theta, xi));
  return (Z * sol.p_rb - p).norm() / pn;
}

}  // namespace ducfem
