#include "ducfem/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "ducfem/errors.hpp"
#include "ducfem/format.hpp"
#include "ducfem/io.hpp"
#include "ducfem/parallel.hpp"
#include "ducfem/rng.hpp"
#include "json.hpp"

namespace ducfem {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::ostream& log_of(const CommandContext& ctx) {
  static std::ofstream null_stream;
  return ctx.log ? *ctx.log : null_stream;
}

// Files are written under temporary names and renamed together on commit;
// anything uncommitted is removed.
class StagedFiles {
 public:
  explicit StagedFiles(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  StagedFiles(const StagedFiles&) = delete;
  StagedFiles& operator=(const StagedFiles&) = delete;
  ~StagedFiles() {
    std::error_code ec;
    for (const auto& [tmp, final] : staged_) fs::remove(tmp, ec);
  }

  fs::path stage(const std::string& name) {
    const fs::path final = dir_ / name;
    fs::path tmp = final;
    tmp += ".partial";
    staged_.emplace_back(tmp, final);
    return tmp;
  }

  void commit() {
    for (const auto& [tmp, final] : staged_) fs::rename(tmp, final);
    staged_.clear();
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> staged_;
};

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_text(path);
  out << doc.dump(2) << '\n';
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string() + "; run the earlier pipeline steps first");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_history(const fs::path& path, const std::vector<BfgsRecord>& history,
                   bool with_alpha) {
  auto out = open_text(path);
  CsvWriter csv(out);
  std::vector<std::string> names{"iter", "J", "grad_norm", "xi_r", "xi_i"};
  if (with_alpha) names.push_back("alpha");
  names.push_back("step_len");
  csv.header(names);
  for (const auto& r : history) {
    csv.field(r.iter).field(r.J).field(r.grad_norm).field(r.x(0)).field(r.x(1));
    if (with_alpha) csv.field(r.x(2));
    csv.field(r.step_len).end_row();
  }
}

json run_json(const DeterministicRun& r) {
  return {{"xi_r", r.xi.xi_r},     {"xi_i", r.xi.xi_i},
          {"J", r.J},              {"energy", r.energy},
          {"iterations", r.iter},  {"evaluations", r.evaluations},
          {"status", to_string(r.status)}};
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PodBasis load_basis(const fs::path& dir, const json& manifest) {
  PodBasis basis;
  basis.Z = load_pmat(dir / files::basis);
  basis.mode = parse_pod_mode(manifest.at("mode").get<std::string>());
  basis.singular_values =
      Eigen::Map<const Eigen::VectorXd>(manifest.at("singular_values").get<std::vector<double>>().data(),
                                        static_cast<Index>(manifest.at("singular_values").size()));
  if (basis.Z.cols() != basis.rank()) throw Error("basis file does not match the POD manifest");
  return basis;
}

}  // namespace

Mesh build_mesh(const RunConfig& cfg) {
  if (cfg.mesh.path) return load_mesh(*cfg.mesh.path);
  return generate_duct_mesh(cfg.mesh.geometry);
}

FomOperators build_fom(const RunConfig& cfg) { return assemble_operators(build_mesh(cfg)); }

std::string optimize_report_name(double beta) {
  return "optimize_beta" + format_double(beta) + ".json";
}

std::string optimize_history_name(double beta) {
  return "optimize_beta" + format_double(beta) + "_history.csv";
}

SnapshotSummary cmd_generate_snapshots(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& log = log_of(ctx);
  const auto start = Clock::now();
  const FomOperators fom = build_fom(cfg);
  const auto& s = cfg.sampling;
  const auto samples = default_sample_grid(s.k_count, {s.k_grid.lo, s.k_grid.hi}, s.mu_set,
                                           s.xi_r_set, s.xi_i_set);
  log << "generate-snapshots: n = " << fom.n() << ", " << samples.size() << " samples, "
      << ctx.workers << " worker(s)\n";

  StagedFiles staged(ctx.output_dir());
  const auto set = build_snapshots(fom, samples, cfg.solver, ctx.workers);
  save_pmat(staged.stage(files::snapshots), set.P);
  save_samples(staged.stage(files::samples), set.samples);
  {
    auto out = open_text(staged.stage(files::snapshot_times));
    CsvWriter csv(out);
    csv.header({"sample", "k", "mu_r", "mu_i", "xi_r", "xi_i", "seconds"});
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const auto& p = samples[j];
      csv.field(static_cast<Index>(j)).field(p.k).field(p.mu.real()).field(p.mu.imag());
      csv.field(p.xi_r).field(p.xi_i).field(set.seconds(static_cast<Index>(j))).end_row();
    }
  }
  staged.commit();
  const double seconds = elapsed(start);
  log << "generate-snapshots: done in " << format_double(seconds) << " s\n";
  return {set.P.cols(), fom.n(), seconds};
}

PodSummary cmd_build_pod(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& log = log_of(ctx);
  const fs::path dir = ctx.output_dir();
  const Eigen::MatrixXd P = load_pmat(dir / files::snapshots);
  const auto samples = load_samples(dir / files::samples);
  if (static_cast<Index>(samples.size()) != P.cols())
    throw Error("snapshot sidecar lists " + std::to_string(samples.size()) + " samples for " +
                std::to_string(P.cols()) + " columns");
  const FomOperators fom = build_fom(cfg);
  if (P.rows() != 2 * fom.n()) throw Error("snapshots do not match the configured mesh");

  const SparseMatrix mass = block_diagonal(fom.M0);
  const PodBasis all = cfg.pod.mode == PodMode::mass_weighted
                            ? pod_correlation(P, mass, ModeSelection::all_modes())
                            : pod_qr_svd(P, ModeSelection::all_modes());
  const Index N = mode_count(cfg.pod.select, all.singular_values);
  log << "build-pod: " << to_string(cfg.pod.mode) << " rank " << all.rank() << ", N = " << N
      << "\n";

  StagedFiles staged(dir);
  save_pmat(staged.stage(files::basis), all.Z);
  {
    auto out = open_text(staged.stage(files::spectrum));
    CsvWriter csv(out);
    csv.header({"index", "singular_value", "scaled", "energy_fraction"});
    const double total = all.singular_values.squaredNorm();
    double partial = 0;
    for (Index i = 0; i < all.rank(); ++i) {
      const double s = all.singular_values(i);
      partial += s * s;
      csv.field(i + 1).field(s).field(s / all.singular_values(0)).field(std::sqrt(partial / total));
      csv.end_row();
    }
  }
  json manifest = {{"schema_version", kSchemaVersion},
                   {"mode", to_string(all.mode)},
                   {"N", N},
                   {"rank", all.rank()},
                   {"stored_modes", all.modes()},
                   {"snapshots", P.cols()},
                   {"singular_values", std::vector<double>(all.singular_values.data(),
                                                           all.singular_values.data() + all.rank())}};
  if (cfg.pod.select.kind == ModeSelection::Kind::energy)
    manifest["selection"] = {{"tau", cfg.pod.select.tau}};
  else
    manifest["selection"] = {{"modes", cfg.pod.select.rank}};
  write_json(staged.stage(files::pod_manifest), manifest);

  const RomOperators rom = project_operators(truncate(all, N), fom, files::basis);
  save_rom(staged.stage(std::string(files::rom_stem) + ".pmat"),
           staged.stage(std::string(files::rom_stem) + ".json"), rom);
  staged.commit();
  return {N, all.rank(), all.mode, all.singular_values};
}

ErrorSummary summarize_errors(Index N, std::vector<double> errors) {
  if (errors.empty()) throw Error("no errors to summarize");
  std::sort(errors.begin(), errors.end());
  ErrorSummary s;
  s.N = N;
  s.median = quantile(errors, 0.5);
  s.q1 = quantile(errors, 0.25);
  s.q3 = quantile(errors, 0.75);
  s.max = errors.back();
  const double fence = s.q3 + 1.5 * (s.q3 - s.q1);
  s.outliers = static_cast<int>(std::count_if(errors.begin(), errors.end(),
                                              [&](double e) { return e > fence; }));
  return s;
}

ValidateReport cmd_validate(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& log = log_of(ctx);
  const fs::path dir = ctx.output_dir();
  const json manifest = read_json(dir / files::pod_manifest);
  const PodBasis basis = load_basis(dir, manifest);
  const FomOperators fom = build_fom(cfg);
  if (basis.Z.rows() != 2 * fom.n()) throw Error("basis does not match the configured mesh");

  ValidateReport report;
  report.selected_N = manifest.at("N").get<Index>();
  std::vector<Index> ladder = cfg.validate.modes;
  ladder.push_back(report.selected_N);
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  for (const Index N : ladder)
    if (N > basis.modes())
      throw RankError("validate.modes entry " + std::to_string(N) + " exceeds the stored modes",
                      basis.modes());

  struct Draw {
    RandomParams theta;
    Impedance xi;
  };
  std::mt19937_64 rng(derive_seed(cfg.sampling.seed, "validate"));
  std::vector<Draw> draws(cfg.validate.draws);
  for (auto& d : draws) {
    d.theta.k = uniform(rng, cfg.sampling.k.lo, cfg.sampling.k.hi);
    d.theta.mu_r = uniform(rng, cfg.sampling.mu_r.lo, cfg.sampling.mu_r.hi);
    d.theta.mu_i = uniform(rng, cfg.sampling.mu_i.lo, cfg.sampling.mu_i.hi);
    d.xi.xi_r = uniform(rng, cfg.validate.xi_r.lo, cfg.validate.xi_r.hi);
    d.xi.xi_i = uniform(rng, cfg.validate.xi_i.lo, cfg.validate.xi_i.hi);
  }

  std::vector<RomOperators> roms;
  for (const Index N : ladder) roms.push_back(project_operators(truncate(basis, N), fom));

  const auto L = static_cast<Index>(ladder.size());
  Eigen::MatrixXd errors(static_cast<Index>(draws.size()), L);
  parallel_for(static_cast<Index>(draws.size()), ctx.workers, [&](Index j) {
    const auto& d = draws[j];
    const Eigen::VectorXd p = solve_state(fom, d.theta, d.xi, cfg.solver).p;
    const double pn = p.norm();
    if (pn == 0) throw Error("draw " + std::to_string(j) + ": zero full-order solution");
    for (Index l = 0; l < L; ++l) {
      const auto sol = solve_rom(assemble_rom(roms[l], d.theta, d.xi));
      errors(j, l) = (basis.Z.leftCols(ladder[l]) * sol.p_rb - p).norm() / pn;
    }
  });

  StagedFiles staged(dir);
  {
    auto out = open_text(staged.stage(files::validate_draws));
    CsvWriter csv(out);
    csv.header({"draw", "k", "mu_r", "mu_i", "xi_r", "xi_i", "N", "e_rel"});
    for (std::size_t j = 0; j < draws.size(); ++j)
      for (Index l = 0; l < L; ++l) {
        const auto& d = draws[j];
        csv.field(static_cast<Index>(j)).field(d.theta.k).field(d.theta.mu_r).field(d.theta.mu_i);
        csv.field(d.xi.xi_r).field(d.xi.xi_i).field(ladder[l]).field(errors(j, l)).end_row();
      }
  }
  json ladder_json = json::array();
  {
    auto out = open_text(staged.stage(files::validate_summary));
    CsvWriter csv(out);
    csv.header({"N", "median", "q1", "q3", "max", "outliers"});
    for (Index l = 0; l < L; ++l) {
      const Eigen::VectorXd col = errors.col(l);
      const auto s = summarize_errors(ladder[l], {col.data(), col.data() + col.size()});
      report.ladder.push_back(s);
      csv.field(s.N).field(s.median).field(s.q1).field(s.q3).field(s.max).field(s.outliers);
      csv.end_row();
      ladder_json.push_back({{"N", s.N},
                             {"median", s.median},
                             {"q1", s.q1},
                             {"q3", s.q3},
                             {"max", s.max},
                             {"outliers", s.outliers}});
      if (l > 0 && s.median > report.ladder[l - 1].median) report.medians_non_increasing = false;
      log << "validate: N = " << s.N << " median e_rel = " << format_double(s.median) << "\n";
    }
  }
  write_json(staged.stage(files::validate_report),
             {{"schema_version", kSchemaVersion},
              {"draws", cfg.validate.draws},
              {"selected_N", report.selected_N},
              {"medians_non_increasing", report.medians_non_increasing},
              {"ladder", ladder_json},
              {"workers", ctx.workers}});
  staged.commit();
  return report;
}

std::vector<OptimizeReport> cmd_optimize(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& log = log_of(ctx);
  const fs::path dir = ctx.output_dir();
  const RomOperators rom = load_rom(dir / files::rom_stem);
  const RandomParams nominal = nominal_params(cfg);
  const double gamma_p = cfg.cvar.gamma_p ? *cfg.cvar.gamma_p : hard_wall_energy(rom, nominal);
  const auto samples = sample_params(cvar_config(cfg, cfg.cvar.betas.front(), gamma_p));
  log << "optimize: N = " << rom.N() << ", Q = " << samples.size()
      << ", gamma_p = " << format_double(gamma_p) << "\n";

  BfgsOptions options;
  options.max_iter = cfg.cvar.max_iter;
  std::vector<OptimizeReport> reports;
  StagedFiles staged(dir);
  for (const double beta : cfg.cvar.betas) {
    const CvarConfig cc = cvar_config(cfg, beta, gamma_p);
    const auto start = Clock::now();
    OptimizeReport r;
    r.beta = beta;
    r.gamma_p = gamma_p;
    try {
      r.state = optimize(cc, rom, samples, {cfg.cvar.xi_r0, cfg.cvar.xi_i0, false},
                         cfg.cvar.alpha0, ctx.workers, options);
    } catch (const Error& e) {
      throw Error("optimize beta " + format_double(beta) + ": " + e.what());
    }
    r.seconds = elapsed(start);
    const Eigen::VectorXd normalized = r.state.energies / gamma_p;
    r.risk = empirical_var_cvar(normalized, beta);
    r.quantile_se = quantile_standard_error(normalized, beta);

    write_json(staged.stage(optimize_report_name(beta)),
               {{"schema_version", kSchemaVersion},
                {"beta", beta},
                {"xi_r", r.state.xi.xi_r},
                {"xi_i", r.state.xi.xi_i},
                {"alpha", r.state.alpha},
                {"J", r.state.J},
                {"iterations", r.state.iter},
                {"evaluations", r.state.evaluations},
                {"pde_solves", r.state.pde_solves},
                {"status", to_string(r.state.status)},
                {"var", r.risk.var},
                {"cvar", r.risk.cvar},
                {"quantile_se", r.quantile_se},
                {"gamma_p", gamma_p},
                {"eps", cc.eps},
                {"gamma", cc.gamma},
                {"Q", cc.Q},
                {"seed", cc.seed},
                {"N", rom.N()},
                {"workers", ctx.workers},
                {"wall_time_s", r.seconds}});
    write_history(staged.stage(optimize_history_name(beta)), r.state.history, true);
    log << "optimize: beta = " << format_double(beta) << " xi = " << format_double(r.state.xi.xi_r)
        << (r.state.xi.xi_i < 0 ? " - " : " + ") << format_double(std::abs(r.state.xi.xi_i))
        << "i alpha = " << format_double(r.state.alpha) << " J = " << format_double(r.state.J)
        << " (" << r.state.iter << " iterations, " << to_string(r.state.status) << ", "
        << format_double(r.seconds) << " s)\n";
    reports.push_back(std::move(r));
  }
  staged.commit();
  return reports;
}

CompareReport cmd_compare_fom_rom(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& log = log_of(ctx);
  const fs::path dir = ctx.output_dir();
  const RomOperators rom = load_rom(dir / files::rom_stem);
  const FomOperators fom = build_fom(cfg);

  CompareReport r;
  r.theta = nominal_params(cfg);
  r.gamma_p = cfg.cvar.gamma_p ? *cfg.cvar.gamma_p : hard_wall_energy(rom, r.theta);
  BfgsOptions options;
  options.max_iter = cfg.compare.max_iter;
  const Impedance start{cfg.compare.xi_r0, cfg.compare.xi_i0, false};
  const auto t0 = Clock::now();
  r.fom = optimize_deterministic(fom, r.theta, start, r.gamma_p, cfg.cvar.gamma, options);
  const double fom_seconds = elapsed(t0);
  const auto t1 = Clock::now();
  r.rom = optimize_deterministic(rom, r.theta, start, r.gamma_p, cfg.cvar.gamma, options);
  const double rom_seconds = elapsed(t1);
  r.relative_difference =
      std::hypot(r.fom.xi.xi_r - r.rom.xi.xi_r, r.fom.xi.xi_i - r.rom.xi.xi_i) /
      std::hypot(r.fom.xi.xi_r, r.fom.xi.xi_i);

  StagedFiles staged(dir);
  json fom_json = run_json(r.fom);
  fom_json["wall_time_s"] = fom_seconds;
  json rom_json = run_json(r.rom);
  rom_json["wall_time_s"] = rom_seconds;
  write_json(staged.stage(files::compare_report),
             {{"schema_version", kSchemaVersion},
              {"theta", {{"k", r.theta.k}, {"mu_r", r.theta.mu_r}, {"mu_i", r.theta.mu_i}}},
              {"gamma_p", r.gamma_p},
              {"gamma", cfg.cvar.gamma},
              {"N", rom.N()},
              {"fom", fom_json},
              {"rom", rom_json},
              {"relative_difference", r.relative_difference},
              {"workers", ctx.workers}});
  write_history(staged.stage("compare_fom_history.csv"), r.fom.history, false);
  write_history(staged.stage("compare_rom_history.csv"), r.rom.history, false);
  staged.commit();
  log << "compare-fom-rom: FOM xi = " << format_double(r.fom.xi.xi_r) << ", "
      << format_double(r.fom.xi.xi_i) << " (" << r.fom.iter << " it), ROM xi = "
      << format_double(r.rom.xi.xi_r) << ", " << format_double(r.rom.xi.xi_i) << " ("
      << r.rom.iter << " it), relative difference " << format_double(r.relative_difference)
      << "\n";
  return r;
}

}  // namespace ducfem
