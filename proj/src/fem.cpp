#include "ducfem/fem.hpp"

#include <cmath>
#include <numbers>

namespace ducfem {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(Index n, const Triplets& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Only lower-triangle triplets are summed, then mirrored, so the result is
// symmetric bit for bit whatever order the duplicates arrive in.
SparseMatrix symmetric_from_triplets(Index n, const Triplets& t) {
  Triplets lower;
  lower.reserve(t.size());
  for (const auto& e : t)
    if (e.row() >= e.col()) lower.push_back(e);
  SparseMatrix L(n, n);
  L.setFromTriplets(lower.begin(), lower.end());
  SparseMatrix m = L.selfadjointView<Eigen::Lower>();
  m.makeCompressed();
  return m;
}

void append_block(Triplets& out, const SparseMatrix& W, Index row0, Index col0, double scale) {
  for (Index c = 0; c < W.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(W, c); it; ++it)
      out.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

}  // namespace

double default_source_profile(double /*x*/, double y) {
  return 1.0 + std::abs(y) * std::cos(10.0 * std::numbers::pi * y);
}

std::vector<char> FomOperators::block_dirichlet_mask() const {
  std::vector<char> mask(2 * n(), 0);
  for (const Index i : dirichlet_idx) {
    mask[i] = 1;
    mask[i + n()] = 1;
  }
  return mask;
}

FomOperators assemble_operators(const Mesh& mesh, const SourceProfile& source) {
  const Index n = mesh.num_nodes();
  Triplets mass, stiff, liner, far;
  mass.reserve(9 * mesh.num_elements());
  stiff.reserve(9 * mesh.num_elements());

  for (Index e = 0; e < mesh.num_elements(); ++e) {
    Eigen::Matrix<double, 3, 2> xy;
    for (int c = 0; c < 3; ++c) xy.row(c) = mesh.nodes.row(mesh.elements(e, c));
    const auto me = p1_mass(xy);
    const auto se = p1_stiffness(xy);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        mass.emplace_back(mesh.elements(e, i), mesh.elements(e, j), me(i, j));
        stiff.emplace_back(mesh.elements(e, i), mesh.elements(e, j), se(i, j));
      }
    }
  }

  for (const auto& edge : mesh.boundary) {
    Triplets* target = edge.tag == BoundaryTag::Liner     ? &liner
                       : edge.tag == BoundaryTag::FarField ? &far
                                                           : nullptr;
    if (target == nullptr) continue;
    const auto me = p1_edge_mass((mesh.nodes.row(edge.a) - mesh.nodes.row(edge.b)).norm());
    const int ids[2] = {edge.a, edge.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) target->emplace_back(ids[i], ids[j], me(i, j));
  }

  FomOperators fom;
  fom.M0 = symmetric_from_triplets(n, mass);
  fom.S0 = symmetric_from_triplets(n, stiff);
  fom.K2_0 = symmetric_from_triplets(n, liner);
  fom.K4_0 = symmetric_from_triplets(n, far);

  const auto source_nodes = boundary_nodes(mesh, BoundaryTag::Source);
  fom.dirichlet_idx.assign(source_nodes.begin(), source_nodes.end());
  fom.g_gamma1 = Eigen::VectorXd::Zero(n);
  for (const Index i : fom.dirichlet_idx) fom.g_gamma1(i) = source(mesh.nodes(i, 0), mesh.nodes(i, 1));
  return fom;
}

SparseMatrix block_diagonal(const SparseMatrix& W0) {
  const Index n = W0.rows();
  Triplets t;
  t.reserve(2 * W0.nonZeros());
  append_block(t, W0, 0, 0, 1.0);
  append_block(t, W0, n, n, 1.0);
  return from_triplets(2 * n, t);
}

SparseMatrix block_skew(const SparseMatrix& W0) {
  const Index n = W0.rows();
  Triplets t;
  t.reserve(2 * W0.nonZeros());
  append_block(t, W0, 0, n, -1.0);
  append_block(t, W0, n, 0, 1.0);
  return from_triplets(2 * n, t);
}

}  // namespace ducfem
