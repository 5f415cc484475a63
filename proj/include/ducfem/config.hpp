#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ducfem/cvar.hpp"
#include "ducfem/helmholtz.hpp"
#include "ducfem/mesh.hpp"
#include "ducfem/pod.hpp"

namespace ducfem {

struct MeshSection {
  std::optional<std::filesystem::path> path;  // otherwise generated from `geometry`
  DuctGeometry geometry;
};

struct SamplingSection {
  // snapshot grid
  int k_count = 40;
  Range k_grid{5.0, 10.0};
  std::vector<std::complex<double>> mu_set{{1.0, 0.0}, {0.0, 1.0}};
  std::vector<double> xi_r_set{0.05, 0.5, 2.0};
  std::vector<double> xi_i_set{-0.05, -0.5, -2.0};
  // Monte Carlo draws
  std::uint64_t seed = 2017;
  Index Q = 16000;
  Range k{5.0, 10.0};
  Range mu_r{10.0, 30.0};
  Range mu_i{10.0, 30.0};
};

struct PodSection {
  PodMode mode = PodMode::mass_weighted;
  ModeSelection select = ModeSelection::energy_fraction(0.995);
};

struct CvarSection {
  std::vector<double> betas{0.5, 0.75, 0.95};
  double eps = 1e-4;
  double gamma = 1e-6;
  std::optional<double> gamma_p;  // empty: hard-wall energy at the nominal parameter
  double xi_r0 = 10.0;
  double xi_i0 = 10.0;
  double alpha0 = 1.0;
  int max_iter = 100;
};

struct ValidateSection {
  int draws = 50;
  std::vector<Index> modes{20, 40, 60, 80, 100, 120, 160};
  Range xi_r{0.0, 100.0};
  Range xi_i{-100.0, 100.0};
};

struct CompareSection {
  std::optional<RandomParams> theta;  // empty: (k_max, mu_r_max, mu_i_max)
  double xi_r0 = 10.0;
  double xi_i0 = 10.0;
  int max_iter = 100;
};

struct RunConfig {
  MeshSection mesh;
  SamplingSection sampling;
  PodSection pod;
  SolverMethod solver = DirectSolve{};
  CvarSection cvar;
  ValidateSection validate;
  CompareSection compare;
  std::filesystem::path output_dir = "out";
};

/// Parses INI text. Unknown sections or keys, duplicate keys and values that
/// break downstream invariants raise ConfigError. Relative paths resolve
/// against `base_dir`.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Nominal parameter (k_max, mu_r_max, mu_i_max) unless set explicitly.
RandomParams nominal_params(const RunConfig& cfg);

/// Objective settings for one probability level.
CvarConfig cvar_config(const RunConfig& cfg, double beta, double gamma_p);

}  // namespace ducfem
