#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace ducfem {

using Index = Eigen::Index;

/// Boundary segment tags of the duct.
enum class BoundaryTag : int {
  Source = 1,     // fan noise source, Dirichlet
  Liner = 2,      // acoustic liner, impedance (Robin)
  NearField = 3,  // hard wall
  FarField = 4,   // radiation condition
  Symmetry = 5,   // symmetry line
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::NearField;

  bool operator==(const BoundaryEdge&) const = default;
};

/// 2D triangulation with tagged boundary edges. Coordinates in meters.
struct Mesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> nodes;
  Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> elements;
  std::vector<BoundaryEdge> boundary;

  Index num_nodes() const { return nodes.rows(); }
  Index num_elements() const { return elements.rows(); }
};

/// Rectangle [0,length] x [0,height] with the liner on part of the top wall.
struct DuctGeometry {
  double length = 5.0;
  double height = 1.2;
  double liner_start = 0.21;
  double liner_length = 1.08;
  double h = 0.05;  // target edge length
};

/// Structured triangulation of the duct. The x grid is split at both liner
/// ends so the liner is covered exactly by whole edges.
Mesh generate_duct_mesh(const DuctGeometry& geometry);

/// Checks every mesh invariant and reorients clockwise elements in place.
/// Throws MeshError naming the failed check.
void validate_mesh(Mesh& mesh);

Mesh parse_mesh(std::istream& in);
Mesh load_mesh(const std::filesystem::path& path);
void write_mesh(const Mesh& mesh, std::ostream& out);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

double mesh_area(const Mesh& mesh);
double boundary_length(const Mesh& mesh, BoundaryTag tag);
double max_edge_length(const Mesh& mesh);

/// Sorted, unique node indices touched by edges carrying `tag`.
std::vector<int> boundary_nodes(const Mesh& mesh, BoundaryTag tag);

}  // namespace ducfem
