#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <random>
#include <string>

#include "ducfem/fem.hpp"
#include "ducfem/helmholtz.hpp"
#include "ducfem/mesh.hpp"

namespace ducfem::test {

/// Coarse duct, 147 nodes.
inline DuctGeometry small_geometry() { return {2.0, 0.6, 0.2, 0.6, 0.1}; }

inline const FomOperators& small_fom() {
  static const FomOperators fom = assemble_operators(generate_duct_mesh(small_geometry()));
  return fom;
}

inline double max_abs(const Eigen::MatrixXd& A) { return A.cwiseAbs().maxCoeff(); }

inline double rel_diff(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return (A - B).norm() / B.norm();
}

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double operator()(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  Eigen::MatrixXd matrix(Index rows, Index cols) {
    Eigen::MatrixXd A(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) A(i, j) = (*this)(-1.0, 1.0);
    return A;
  }
  RandomParams theta() { return {(*this)(5, 10), (*this)(-30, 30), (*this)(-30, 30)}; }
  Impedance xi() { return {(*this)(0.05, 5), (*this)(-5, 5), false}; }
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(DUCFEM_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ducfem::test
