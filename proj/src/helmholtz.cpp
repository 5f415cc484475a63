#include "ducfem/helmholtz.hpp"

#include <cmath>
#include <string>

#include "ducfem/errors.hpp"
#include "ducfem/gmres.hpp"

namespace ducfem {

void validate(const RandomParams& theta) {
  if (!(theta.k > 0) || !std::isfinite(theta.k))
    throw Error("wavenumber must be positive, got " + std::to_string(theta.k));
  if (!std::isfinite(theta.mu_r) || !std::isfinite(theta.mu_i))
    throw Error("source amplitude must be finite");
}

void validate(const Impedance& xi) {
  if (xi.hard_wall) return;
  if (!std::isfinite(xi.xi_r) || !std::isfinite(xi.xi_i)) throw Error("impedance must be finite");
  if (!(xi.xi_r > 0)) throw Error("resistance xi_r must be positive");
}

RobinCoefficients robin_coefficients(double k, const Impedance& xi) {
  validate(xi);
  RobinCoefficients c;
  c.far_skew = k;
  if (!xi.hard_wall) {
    const double d = xi.norm_sq();
    c.liner_sym = k * xi.xi_i / d;
    c.liner_skew = k * xi.xi_r / d;
  }
  return c;
}

Eigen::Matrix2d robin_impedance_jacobian(double k, const Impedance& xi) {
  validate(xi);
  Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();
  if (xi.hard_wall) return jac;
  const double d2 = xi.norm_sq() * xi.norm_sq();
  const double xr = xi.xi_r, xim = xi.xi_i;
  jac(0, 0) = k * (-2 * xr * xim) / d2;
  jac(0, 1) = k * (xim * xim - xr * xr) / d2;
  jac(1, 0) = k * (xr * xr - xim * xim) / d2;
  jac(1, 1) = k * (-2 * xr * xim) / d2;
  return jac;
}

SparseMatrix assemble_block(const FomOperators& fom, const RandomParams& theta,
                            const Impedance& xi) {
  const auto c = robin_coefficients(theta.k, xi);
  const Index n = fom.n();
  const SparseMatrix B = fom.S0 - theta.k * theta.k * fom.M0 + c.liner_sym * fom.K2_0;
  const SparseMatrix C = c.liner_skew * fom.K2_0 + c.far_skew * fom.K4_0;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * B.nonZeros() + 2 * C.nonZeros());
  for (Index col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(B, col); it; ++it) {
      t.emplace_back(it.row(), col, it.value());
      t.emplace_back(n + it.row(), n + col, it.value());
    }
    for (SparseMatrix::InnerIterator it(C, col); it; ++it) {
      t.emplace_back(it.row(), n + col, -it.value());
      t.emplace_back(n + it.row(), col, it.value());
    }
  }
  SparseMatrix A(2 * n, 2 * n);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

SparseMatrix drop_rows(const SparseMatrix& A, const std::vector<char>& mask) {
  SparseMatrix out = A;
  out.prune([&mask](Index row, Index, double) { return mask[row] == 0; });
  return out;
}

SparseMatrix impose_dirichlet_rows(const SparseMatrix& A, const std::vector<char>& mask) {
  SparseMatrix out = drop_rows(A, mask);
  for (Index i = 0; i < out.rows(); ++i)
    if (mask[i]) out.coeffRef(i, i) = 1.0;
  out.makeCompressed();
  return out;
}

Eigen::VectorXd dirichlet_rhs(const FomOperators& fom, double mu_r, double mu_i) {
  const Index n = fom.n();
  Eigen::VectorXd b(2 * n);
  b.head(n) = mu_r * fom.g_gamma1;
  b.tail(n) = mu_i * fom.g_gamma1;
  return b;
}

BlockSystem apply_dirichlet(const SparseMatrix& Atilde, const FomOperators& fom,
                            const RandomParams& theta) {
  BlockSystem sys;
  sys.n = fom.n();
  sys.k = theta.k;
  sys.dirichlet = fom.block_dirichlet_mask();
  sys.A = impose_dirichlet_rows(Atilde, sys.dirichlet);
  sys.b = dirichlet_rhs(fom, theta.mu_r, theta.mu_i);
  sys.mass = fom.M0;
  return sys;
}

SparseMatrix shifted_laplacian(const BlockSystem& sys, double beta1, double beta2) {
  const double k2 = sys.k * sys.k;
  const SparseMatrix shift =
      (1.0 - beta1) * k2 * block_diagonal(sys.mass) + beta2 * k2 * block_skew(sys.mass);
  SparseMatrix P = sys.A + drop_rows(shift, sys.dirichlet);
  P.makeCompressed();
  return P;
}

SparseFactorization::SparseFactorization(const SparseMatrix& A)
    : lu_(std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>()) {
  lu_->analyzePattern(A);
  lu_->factorize(A);
  if (lu_->info() != Eigen::Success)
    throw SolverError("sparse factorization failed: " + lu_->lastErrorMessage(), 0.0);
}

Eigen::VectorXd SparseFactorization::solve(const Eigen::VectorXd& rhs) const {
  return lu_->solve(rhs);
}

Eigen::VectorXd SparseFactorization::solve_transpose(const Eigen::VectorXd& rhs) const {
  return lu_->transpose().solve(rhs);
}

HelmholtzSolver::HelmholtzSolver(BlockSystem sys, const SolverMethod& method)
    : sys_(std::move(sys)), method_(method) {
  if (const auto* g = std::get_if<GmresShiftedLaplacian>(&method_))
    factor_ = std::make_shared<SparseFactorization>(shifted_laplacian(sys_, g->beta1, g->beta2));
  else
    factor_ = std::make_shared<SparseFactorization>(sys_.A);
}

FomSolution HelmholtzSolver::solve(const Eigen::VectorXd& rhs) const {
  FomSolution out;
  if (const auto* g = std::get_if<GmresShiftedLaplacian>(&method_)) {
    const auto result = gmres<double>(
        [this](const Eigen::VectorXd& v) -> Eigen::VectorXd { return sys_.A * v; },
        [this](const Eigen::VectorXd& v) { return factor_->solve(v); }, rhs, out.p, g->tol,
        g->max_iter);
    out.iterations = result.iterations;
    out.relative_residual = result.relative_residual;
    if (!result.converged)
      throw SolverError("GMRES reached " + std::to_string(g->max_iter) +
                            " iterations, relative residual " +
                            std::to_string(result.relative_residual),
                        result.relative_residual);
    return out;
  }
  out.p = factor_->solve(rhs);
  const double bn = rhs.norm();
  out.relative_residual = bn > 0 ? (sys_.A * out.p - rhs).norm() / bn : 0.0;
  if (!out.p.allFinite()) throw SolverError("direct solve produced non-finite values", 0.0);
  return out;
}

Eigen::VectorXd HelmholtzSolver::solve_transpose(const Eigen::VectorXd& rhs) const {
  if (std::holds_alternative<GmresShiftedLaplacian>(method_))
    return SparseFactorization(sys_.A).solve_transpose(rhs);
  return factor_->solve_transpose(rhs);
}

FomSolution solve_fom(const BlockSystem& sys, const SolverMethod& method) {
  return HelmholtzSolver(sys, method).solve();
}

FomSolution solve_state(const FomOperators& fom, const RandomParams& theta, const Impedance& xi,
                        const SolverMethod& method) {
  validate(theta);
  return solve_fom(apply_dirichlet(assemble_block(fom, theta, xi), fom, theta), method);
}

double noise_energy(const Eigen::VectorXd& p, const FomOperators& fom) {
  const Index n = fom.n();
  const auto pr = p.head(n);
  const auto pi = p.tail(n);
  return pr.dot(fom.M0 * pr) + pi.dot(fom.M0 * pi);
}

}  // namespace ducfem
