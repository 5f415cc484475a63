#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ducfem/bfgs.hpp"
#include "ducfem/config.hpp"

namespace ducfem {

inline constexpr int kSchemaVersion = 1;

/// Shared inputs of every command. `out` overrides cfg.output_dir when set.
struct CommandContext {
  RunConfig cfg;
  int workers = 1;
  std::filesystem::path out;
  std::ostream* log = nullptr;

  std::filesystem::path output_dir() const { return out.empty() ? cfg.output_dir : out; }
};

Mesh build_mesh(const RunConfig& cfg);
FomOperators build_fom(const RunConfig& cfg);

/// Artifact names inside the output directory.
namespace files {
inline constexpr const char* snapshots = "snapshots.pmat";
inline constexpr const char* samples = "snapshots.samples.txt";
inline constexpr const char* snapshot_times = "snapshot_times.csv";
inline constexpr const char* basis = "basis.pmat";
inline constexpr const char* spectrum = "spectrum.csv";
inline constexpr const char* pod_manifest = "pod.json";
inline constexpr const char* rom_stem = "rom";
inline constexpr const char* validate_draws = "validate_draws.csv";
inline constexpr const char* validate_summary = "validate_summary.csv";
inline constexpr const char* validate_report = "validate.json";
inline constexpr const char* compare_report = "compare.json";
}  // namespace files

std::string optimize_report_name(double beta);
std::string optimize_history_name(double beta);

struct SnapshotSummary {
  Index columns = 0;
  Index n = 0;
  double seconds = 0;
};

/// Solves the configured grid and writes the snapshot matrix, its sample
/// sidecar and per-sample timings. Nothing is left behind on failure.
SnapshotSummary cmd_generate_snapshots(const CommandContext& ctx);

struct PodSummary {
  Index N = 0;
  Index rank = 0;
  PodMode mode = PodMode::mass_weighted;
  Eigen::VectorXd singular_values;
};

/// Reads the snapshots, writes every POD mode of the numerical rank, the
/// spectrum, a manifest with the selected N and the projected operators at N.
PodSummary cmd_build_pod(const CommandContext& ctx);

struct ErrorSummary {
  Index N = 0;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double max = 0;
  int outliers = 0;  // above q3 + 1.5 IQR
};

ErrorSummary summarize_errors(Index N, std::vector<double> errors);

struct ValidateReport {
  Index selected_N = 0;
  std::vector<ErrorSummary> ladder;  // increasing N, includes selected_N
  bool medians_non_increasing = true;
};

/// Relative ROM errors over random draws of (k, mu, xi) for each N of the
/// configured ladder and for the manifest N.
ValidateReport cmd_validate(const CommandContext& ctx);

struct OptimizeReport {
  double beta = 0;
  OptState state;
  double gamma_p = 0;
  RiskEstimate risk;  // of normalized energies at the optimum
  double quantile_se = 0;
  double seconds = 0;
};

/// One smoothed-CVaR optimization per configured beta on a shared sample set.
std::vector<OptimizeReport> cmd_optimize(const CommandContext& ctx);

struct CompareReport {
  RandomParams theta;
  double gamma_p = 0;
  DeterministicRun fom;
  DeterministicRun rom;
  double relative_difference = 0;  // |xi_fom - xi_rom| / |xi_fom|
};

/// Deterministic optimization at the nominal parameter against both models.
CompareReport cmd_compare_fom_rom(const CommandContext& ctx);

}  // namespace ducfem
