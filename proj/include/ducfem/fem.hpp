#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <functional>
#include <vector>

#include "ducfem/mesh.hpp"

namespace ducfem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Closed-form P1 mass matrix of one triangle, rows of `xy` are its vertices.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> p1_mass(const Eigen::Matrix<Scalar, 3, 2>& xy) {
  const Scalar area = Scalar(0.5) * std::abs((xy(1, 0) - xy(0, 0)) * (xy(2, 1) - xy(0, 1)) -
                                             (xy(2, 0) - xy(0, 0)) * (xy(1, 1) - xy(0, 1)));
  Eigen::Matrix<Scalar, 3, 3> m = Eigen::Matrix<Scalar, 3, 3>::Constant(area / Scalar(12));
  m.diagonal().setConstant(area / Scalar(6));
  return m;
}

/// Closed-form P1 stiffness matrix of one triangle.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> p1_stiffness(const Eigen::Matrix<Scalar, 3, 2>& xy) {
  Eigen::Matrix<Scalar, 3, 1> b, c;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    b(i) = xy(j, 1) - xy(k, 1);
    c(i) = xy(k, 0) - xy(j, 0);
  }
  const Scalar twice_area = std::abs(b(0) * c(1) - b(1) * c(0));
  return (b * b.transpose() + c * c.transpose()) / (Scalar(2) * twice_area);
}

/// Edge mass matrix by two-point Gauss quadrature (exact for the P1 product).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> p1_edge_mass(Scalar length) {
  const Scalar g = Scalar(0.5) / std::sqrt(Scalar(3));
  Eigen::Matrix<Scalar, 2, 2> m = Eigen::Matrix<Scalar, 2, 2>::Zero();
  for (const Scalar t : {Scalar(0.5) - g, Scalar(0.5) + g}) {
    const Eigen::Matrix<Scalar, 2, 1> phi(Scalar(1) - t, t);
    m += Scalar(0.5) * length * phi * phi.transpose();
  }
  return m;
}

/// Real source profile g on the fan boundary.
using SourceProfile = std::function<double(double x, double y)>;

/// 1 + |y| cos(10 pi y): the fan profile restricted to the plane z = 0.
double default_source_profile(double x, double y);

/// Parameter-independent scalar FE operators of one mesh.
struct FomOperators {
  SparseMatrix M0;    // mass
  SparseMatrix S0;    // stiffness
  SparseMatrix K2_0;  // boundary mass on the liner
  SparseMatrix K4_0;  // boundary mass on the far field
  std::vector<Index> dirichlet_idx;  // sorted source-boundary nodes
  Eigen::VectorXd g_gamma1;          // source interpolant, zero off the source boundary

  Index n() const { return M0.rows(); }

  /// Indicator of Dirichlet rows in the 2n block numbering.
  std::vector<char> block_dirichlet_mask() const;
};

FomOperators assemble_operators(const Mesh& mesh,
                                const SourceProfile& source = default_source_profile);

/// blockdiag(W0, W0)
SparseMatrix block_diagonal(const SparseMatrix& W0);

/// [[0, -W0], [W0, 0]]
SparseMatrix block_skew(const SparseMatrix& W0);

}  // namespace ducfem
