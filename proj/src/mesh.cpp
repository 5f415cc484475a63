#include "ducfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "ducfem/errors.hpp"
#include "ducfem/format.hpp"

namespace ducfem {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::vector<double> split_interval(double start, double stop, double h) {
  const double len = stop - start;
  const int cells = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
  std::vector<double> pts(cells + 1);
  for (int i = 0; i <= cells; ++i) pts[i] = start + len * static_cast<double>(i) / cells;
  pts.back() = stop;
  return pts;
}

double signed_area(const Mesh& mesh, Index e) {
  const auto p0 = mesh.nodes.row(mesh.elements(e, 0));
  const auto p1 = mesh.nodes.row(mesh.elements(e, 1));
  const auto p2 = mesh.nodes.row(mesh.elements(e, 2));
  return 0.5 * ((p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1)));
}

}  // namespace

Mesh generate_duct_mesh(const DuctGeometry& g) {
  if (!(g.length > 0 && g.height > 0 && g.liner_start >= 0 && g.liner_length > 0 && g.h > 0))
    throw MeshError("duct dimensions must be positive");
  const double liner_end = g.liner_start + g.liner_length;
  if (liner_end > g.length * (1 + 1e-12))
    throw MeshError("liner extends past the duct length");
  if (g.h > g.liner_length) throw MeshError("h larger than liner_length: liner would have no edges");

  std::vector<double> xs{0.0};
  auto append = [&](double a, double b) {
    if (b - a <= 1e-12 * g.length) return;
    auto seg = split_interval(a, b, g.h);
    xs.insert(xs.end(), seg.begin() + 1, seg.end());
  };
  append(0.0, g.liner_start);
  append(g.liner_start, std::min(liner_end, g.length));
  append(std::min(liner_end, g.length), g.length);
  const auto ys = split_interval(0.0, g.height, g.h);

  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
  auto id = [nx](int i, int j) { return j * nx + i; };

  Mesh mesh;
  mesh.nodes.resize(static_cast<Index>(nx) * ny, 2);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) mesh.nodes.row(id(i, j)) << xs[i], ys[j];

  mesh.elements.resize(2 * static_cast<Index>(nx - 1) * (ny - 1), 3);
  Index e = 0;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      mesh.elements.row(e++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
      mesh.elements.row(e++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
    }
  }

  for (int i = 0; i + 1 < nx; ++i)
    mesh.boundary.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::Symmetry});
  for (int j = 0; j + 1 < ny; ++j)
    mesh.boundary.push_back({id(nx - 1, j), id(nx - 1, j + 1), BoundaryTag::FarField});
  const double tol = 1e-9 * g.length;
  for (int i = nx - 1; i > 0; --i) {
    const double mid = 0.5 * (xs[i] + xs[i - 1]);
    const bool liner = mid > g.liner_start - tol && mid < liner_end + tol;
    mesh.boundary.push_back({id(i, ny - 1), id(i - 1, ny - 1),
                             liner ? BoundaryTag::Liner : BoundaryTag::NearField});
  }
  for (int j = ny - 1; j > 0; --j)
    mesh.boundary.push_back({id(0, j), id(0, j - 1), BoundaryTag::Source});
  validate_mesh(mesh);
  return mesh;
}

void validate_mesh(Mesh& mesh) {
  const Index n = mesh.num_nodes();
  if (n < 3) throw MeshError("mesh needs at least three nodes");
  if (mesh.num_elements() < 1) throw MeshError("mesh has no elements");
  if (!mesh.nodes.allFinite()) throw MeshError("non-finite node coordinate");

  std::map<EdgeKey, int> edge_count;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    for (int c = 0; c < 3; ++c) {
      const int v = mesh.elements(e, c);
      if (v < 0 || v >= n)
        throw MeshError("element " + std::to_string(e) + " references missing node " +
                        std::to_string(v));
    }
    double area = signed_area(mesh, e);
    if (area < 0) {
      std::swap(mesh.elements(e, 1), mesh.elements(e, 2));
      area = -area;
    }
    if (!(area > 0)) throw MeshError("element " + std::to_string(e) + " has zero area");
    for (int c = 0; c < 3; ++c)
      ++edge_count[edge_key(mesh.elements(e, c), mesh.elements(e, (c + 1) % 3))];
  }

  std::map<EdgeKey, BoundaryTag> tagged;
  for (const auto& edge : mesh.boundary) {
    const int t = static_cast<int>(edge.tag);
    if (t < 1 || t > 5) throw MeshError("unknown boundary tag " + std::to_string(t));
    const auto key = edge_key(edge.a, edge.b);
    const auto found = edge_count.find(key);
    if (found == edge_count.end() || found->second != 1)
      throw MeshError("tagged edge (" + std::to_string(edge.a) + "," + std::to_string(edge.b) +
                      ") is not on the mesh boundary");
    if (!tagged.emplace(key, edge.tag).second)
      throw MeshError("boundary edge (" + std::to_string(edge.a) + "," + std::to_string(edge.b) +
                      ") listed twice");
  }
  for (const auto& [key, count] : edge_count) {
    if (count > 2) throw MeshError("edge shared by more than two elements");
    if (count == 1 && !tagged.contains(key))
      throw MeshError("untagged boundary edge (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ")");
  }
}

Mesh parse_mesh(std::istream& in) {
  int line_no = 0;
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw ParseError("unexpected end of file", line_no + 1);
  };
  auto expect_end = [&](std::istringstream& ss) {
    std::string extra;
    if (ss >> extra) throw ParseError("trailing token '" + extra + "'", line_no);
  };
  auto section = [&](const std::string& name) {
    auto ss = next_line();
    std::string word;
    long long count = -1;
    if (!(ss >> word >> count) || word != name || count < 0)
      throw ParseError("expected '" + name + " <count>'", line_no);
    expect_end(ss);
    return static_cast<Index>(count);
  };

  {
    auto ss = next_line();
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "ducfem" || version != 1)
      throw ParseError("expected header 'ducfem 1'", line_no);
    expect_end(ss);
  }

  Mesh mesh;
  const Index n = section("nodes");
  mesh.nodes.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    auto ss = next_line();
    if (!(ss >> mesh.nodes(i, 0) >> mesh.nodes(i, 1))) throw ParseError("expected 'x y'", line_no);
    expect_end(ss);
  }
  const Index ne = section("elements");
  mesh.elements.resize(ne, 3);
  for (Index e = 0; e < ne; ++e) {
    auto ss = next_line();
    if (!(ss >> mesh.elements(e, 0) >> mesh.elements(e, 1) >> mesh.elements(e, 2)))
      throw ParseError("expected three node indices", line_no);
    expect_end(ss);
  }
  const Index nb = section("boundary");
  mesh.boundary.reserve(nb);
  for (Index b = 0; b < nb; ++b) {
    auto ss = next_line();
    int i = 0, j = 0, tag = 0;
    if (!(ss >> i >> j >> tag)) throw ParseError("expected 'i j tag'", line_no);
    expect_end(ss);
    if (tag < 1 || tag > 5) throw ParseError("unknown boundary tag " + std::to_string(tag), line_no);
    mesh.boundary.push_back({i, j, static_cast<BoundaryTag>(tag)});
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw ParseError("unexpected content after boundary section", line_no);
  }
  validate_mesh(mesh);
  return mesh;
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path.string());
  return parse_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "ducfem 1\n";
  out << "nodes " << mesh.num_nodes() << '\n';
  for (Index i = 0; i < mesh.num_nodes(); ++i)
    out << format_double(mesh.nodes(i, 0)) << ' ' << format_double(mesh.nodes(i, 1)) << '\n';
  out << "elements " << mesh.num_elements() << '\n';
  for (Index e = 0; e < mesh.num_elements(); ++e)
    out << mesh.elements(e, 0) << ' ' << mesh.elements(e, 1) << ' ' << mesh.elements(e, 2) << '\n';
  out << "boundary " << mesh.boundary.size() << '\n';
  for (const auto& edge : mesh.boundary)
    out << edge.a << ' ' << edge.b << ' ' << static_cast<int>(edge.tag) << '\n';
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path.string());
  write_mesh(mesh, out);
}

double mesh_area(const Mesh& mesh) {
  double area = 0;
  for (Index e = 0; e < mesh.num_elements(); ++e) area += std::abs(signed_area(mesh, e));
  return area;
}

double boundary_length(const Mesh& mesh, BoundaryTag tag) {
  double len = 0;
  for (const auto& edge : mesh.boundary)
    if (edge.tag == tag) len += (mesh.nodes.row(edge.a) - mesh.nodes.row(edge.b)).norm();
  return len;
}

double max_edge_length(const Mesh& mesh) {
  double longest = 0;
  for (Index e = 0; e < mesh.num_elements(); ++e)
    for (int c = 0; c < 3; ++c)
      longest = std::max(longest, (mesh.nodes.row(mesh.elements(e, c)) -
                                   mesh.nodes.row(mesh.elements(e, (c + 1) % 3)))
                                      .norm());
  return longest;
}

std::vector<int> boundary_nodes(const Mesh& mesh, BoundaryTag tag) {
  std::vector<int> ids;
  for (const auto& edge : mesh.boundary) {
    if (edge.tag != tag) continue;
    ids.push_back(edge.a);
    ids.push_back(edge.b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace ducfem
