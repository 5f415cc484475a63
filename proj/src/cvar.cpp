#include "ducfem/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ducfem/errors.hpp"
#include "ducfem/parallel.hpp"
#include "ducfem/rng.hpp"

namespace ducfem {

namespace {

// Per-sample contributions, reduced afterwards in index order.
struct SampleTerms {
  double energy = 0;
  double h = 0;
  double hd = 0;
  Eigen::Vector2d impedance_term = Eigen::Vector2d::Zero();  // q' dA/dxi_c p
  bool adjoint = false;
};

template <typename Evaluate>
ObjectiveGradient reduce_terms(const Impedance& xi, double alpha, const CvarConfig& cfg,
                               Index count, int workers, Evaluate&& evaluate) {
  validate(cfg);
  validate(xi);
  if (count != cfg.Q) throw Error("sample count does not match Q");
  const Eigen::VectorXd w = quadrature_weights(cfg);
  std::vector<SampleTerms> terms(count);
  parallel_for(count, workers, [&](Index j) {
    try {
      terms[j] = evaluate(j);
    } catch (const SolverError& e) {
      throw SolverError("sample " + std::to_string(j) + ": " + e.what(), e.residual());
    }
  });

  ObjectiveGradient out;
  out.energies.resize(count);
  double tail = 0, slope = 0;
  Eigen::Vector2d adj = Eigen::Vector2d::Zero();
  for (Index j = 0; j < count; ++j) {
    out.energies(j) = terms[j].energy;
    tail += w(j) * terms[j].h;
    slope += w(j) * terms[j].hd;
    adj += w(j) * terms[j].impedance_term;
    out.solves += 1 + (terms[j].adjoint ? 1 : 0);
  }
  const double inv = 1.0 / (1.0 - cfg.beta);
  out.J = 0.5 * (alpha + inv * tail) + 0.5 * cfg.gamma * xi.norm_sq();
  out.gradient(0) = cfg.gamma * xi.xi_r - adj(0);
  out.gradient(1) = cfg.gamma * xi.xi_i - adj(1);
  out.gradient(2) = 0.5 - 0.5 * inv * slope;
  return out;
}

SampleTerms rom_sample(const Impedance& xi, double alpha, const RandomParams& theta,
                       const RomOperators& rom, const CvarConfig& cfg, bool with_gradient) {
  const auto sys = assemble_rom(rom, theta, xi);
  const ReducedFactorization lu(sys.A);
  const Eigen::VectorXd p = lu.solve(sys.b);
  const Eigen::VectorXd Mp = rom.Mr_energy * p;
  SampleTerms t;
  t.energy = p.dot(Mp);
  const double x = t.energy / cfg.gamma_p - alpha;
  t.h = smoothed_plus(x, cfg.eps);
  t.hd = smoothed_plus_d(x, cfg.eps);
  if (with_gradient && t.hd != 0.0) {
    const Eigen::VectorXd q =
        lu.solve_transpose((t.hd / ((1.0 - cfg.beta) * cfg.gamma_p)) * Mp);
    const Eigen::Matrix2d jac = robin_impedance_jacobian(theta.k, xi);
    const double sym = q.dot(rom.K2r * p);
    const double skew = q.dot(rom.K2r_skew * p);
    t.impedance_term = jac.col(0) * sym + jac.col(1) * skew;
    t.adjoint = true;
  }
  return t;
}

}  // namespace

void validate(const CvarConfig& cfg) {
  if (!(cfg.beta > 0 && cfg.beta < 1)) throw Error("beta must lie in (0,1)");
  if (!(cfg.eps > 0)) throw Error("eps must be positive");
  if (!(cfg.gamma >= 0)) throw Error("gamma must be non-negative");
  if (!(cfg.gamma_p > 0)) throw Error("gamma_p must be positive");
  if (cfg.Q < 1) throw Error("Q must be at least 1");
  if (cfg.weights.size() != 0) {
    if (cfg.weights.size() != cfg.Q) throw Error("weights must have Q entries");
    if (std::abs(cfg.weights.sum() - 1.0) > 1e-12) throw Error("weights must sum to one");
  }
}

Eigen::VectorXd quadrature_weights(const CvarConfig& cfg) {
  if (cfg.weights.size() != 0) return cfg.weights;
  return Eigen::VectorXd::Constant(cfg.Q, 1.0 / static_cast<double>(cfg.Q));
}

std::vector<RandomParams> sample_params(const CvarConfig& cfg) {
  for (const Range* r : {&cfg.k, &cfg.mu_r, &cfg.mu_i})
    if (!(r->hi >= r->lo)) throw Error("empty sampling range");
  if (!(cfg.k.lo > 0)) throw Error("wavenumber range must be positive");
  if (cfg.Q < 1) throw Error("Q must be at least 1");
  std::mt19937_64 rng(derive_seed(cfg.seed, "mc_samples"));
  std::vector<RandomParams> out(cfg.Q);
  for (auto& theta : out) {
    theta.k = uniform(rng, cfg.k.lo, cfg.k.hi);
    theta.mu_r = uniform(rng, cfg.mu_r.lo, cfg.mu_r.hi);
    theta.mu_i = uniform(rng, cfg.mu_i.lo, cfg.mu_i.hi);
  }
  return out;
}

ObjectiveValue evaluate_objective(const Impedance& xi, double alpha,
                                  const std::vector<RandomParams>& samples,
                                  const RomOperators& rom, const CvarConfig& cfg, int workers) {
  const auto r = reduce_terms(xi, alpha, cfg, static_cast<Index>(samples.size()), workers,
                              [&](Index j) { return rom_sample(xi, alpha, samples[j], rom, cfg, false); });
  return {r.J, r.energies, r.solves};
}

ObjectiveGradient solve_adjoints_and_gradient(const Impedance& xi, double alpha,
                                              const std::vector<RandomParams>& samples,
                                              const RomOperators& rom, const CvarConfig& cfg,
                                              int workers) {
  return reduce_terms(xi, alpha, cfg, static_cast<Index>(samples.size()), workers,
                      [&](Index j) { return rom_sample(xi, alpha, samples[j], rom, cfg, true); });
}

ObjectiveGradient fom_objective_and_gradient(const Impedance& xi, double alpha,
                                             const std::vector<RandomParams>& samples,
                                             const FomOperators& fom, const CvarConfig& cfg,
                                             int workers) {
  const SparseMatrix M = block_diagonal(fom.M0);
  const auto mask = fom.block_dirichlet_mask();
  const SparseMatrix K2 = drop_rows(block_diagonal(fom.K2_0), mask);
  const SparseMatrix K2s = drop_rows(block_skew(fom.K2_0), mask);
  return reduce_terms(
      xi, alpha, cfg, static_cast<Index>(samples.size()), workers, [&](Index j) {
        const auto& theta = samples[j];
        const HelmholtzSolver solver(apply_dirichlet(assemble_block(fom, theta, xi), fom, theta),
                                     DirectSolve{});
        const Eigen::VectorXd p = solver.solve().p;
        const Eigen::VectorXd Mp = M * p;
        SampleTerms t;
        t.energy = p.dot(Mp);
        const double x = t.energy / cfg.gamma_p - alpha;
        t.h = smoothed_plus(x, cfg.eps);
        t.hd = smoothed_plus_d(x, cfg.eps);
        if (t.hd != 0.0) {
          const Eigen::VectorXd q =
              solver.solve_transpose((t.hd / ((1.0 - cfg.beta) * cfg.gamma_p)) * Mp);
          const Eigen::Matrix2d jac = robin_impedance_jacobian(theta.k, xi);
          t.impedance_term = jac.col(0) * q.dot(K2 * p) + jac.col(1) * q.dot(K2s * p);
          t.adjoint = true;
        }
        return t;
      });
}

DeterministicValue deterministic_objective(const Impedance& xi, const RandomParams& theta,
                                           const RomOperators& rom, double gamma_p,
                                           double gamma) {
  const auto sys = assemble_rom(rom, theta, xi);
  const ReducedFactorization lu(sys.A);
  const Eigen::VectorXd p = lu.solve(sys.b);
  const Eigen::VectorXd Mp = rom.Mr_energy * p;
  DeterministicValue out;
  out.energy = p.dot(Mp);
  out.J = 0.5 * out.energy / gamma_p + 0.5 * gamma * xi.norm_sq();
  const Eigen::VectorXd q = lu.solve_transpose(Mp / gamma_p);
  const Eigen::Matrix2d jac = robin_impedance_jacobian(theta.k, xi);
  const Eigen::Vector2d term = jac.col(0) * q.dot(rom.K2r * p) + jac.col(1) * q.dot(rom.K2r_skew * p);
  out.gradient = gamma * Eigen::Vector2d(xi.xi_r, xi.xi_i) - term;
  return out;
}

DeterministicValue deterministic_objective(const Impedance& xi, const RandomParams& theta,
                                           const FomOperators& fom, double gamma_p,
                                           double gamma) {
  const auto mask = fom.block_dirichlet_mask();
  const HelmholtzSolver solver(apply_dirichlet(assemble_block(fom, theta, xi), fom, theta),
                               DirectSolve{});
  const Eigen::VectorXd p = solver.solve().p;
  const Eigen::VectorXd Mp = block_diagonal(fom.M0) * p;
  DeterministicValue out;
  out.energy = p.dot(Mp);
  out.J = 0.5 * out.energy / gamma_p + 0.5 * gamma * xi.norm_sq();
  const Eigen::VectorXd q = solver.solve_transpose(Mp / gamma_p);
  const Eigen::Matrix2d jac = robin_impedance_jacobian(theta.k, xi);
  const Eigen::Vector2d term =
      jac.col(0) * q.dot(drop_rows(block_diagonal(fom.K2_0), mask) * p) +
      jac.col(1) * q.dot(drop_rows(block_skew(fom.K2_0), mask) * p);
  out.gradient = gamma * Eigen::Vector2d(xi.xi_r, xi.xi_i) - term;
  return out;
}

double hard_wall_energy(const RomOperators& rom, const RandomParams& nominal) {
  return rom_energy(solve_rom(assemble_rom(rom, nominal, Impedance::hard())), rom);
}

double hard_wall_energy(const FomOperators& fom, const RandomParams& nominal) {
  return noise_energy(solve_state(fom, nominal, Impedance::hard()).p, fom);
}

RiskEstimate empirical_var_cvar(const Eigen::VectorXd& values, double beta,
                                const Eigen::VectorXd& weights) {
  const Index m = values.size();
  if (m == 0) throw Error("no values for VaR/CVaR");
  if (!(beta > 0 && beta < 1)) throw Error("beta must lie in (0,1)");
  const Eigen::VectorXd w =
      weights.size() == 0 ? Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)) : weights;
  if (w.size() != m) throw Error("weights must match values");

  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(a) < values(b); });
  const double total = w.sum();

  RiskEstimate r;
  r.var = values(order.back());
  double cumulative = 0;
  for (Index i = 0; i < m; ++i) {
    cumulative += w(order[i]);
    // ties: Psi jumps only after the last equal value
    if (i + 1 < m && values(order[i + 1]) == values(order[i])) continue;
    if (cumulative >= beta * total - 1e-12 * total) {
      r.var = values(order[i]);
      break;
    }
  }
  // mean excess over VaR, exact when the tail is constant
  double mass = 0, excess = 0;
  for (Index i = 0; i < m; ++i) {
    if (values(i) >= r.var) {
      mass += w(i);
      excess += w(i) * (values(i) - r.var);
    }
  }
  r.cvar = r.var + excess / mass;
  return r;
}

double quantile_standard_error(const Eigen::VectorXd& values, double beta) {
  const Index m = values.size();
  if (m < 2) return 0.0;
  std::vector<double> sorted(values.data(), values.data() + m);
  std::sort(sorted.begin(), sorted.end());
  const double center = beta * static_cast<double>(m);
  const double spread = std::sqrt(static_cast<double>(m) * beta * (1.0 - beta));
  auto at = [&](double pos) {
    const auto i = static_cast<Index>(std::clamp(std::round(pos), 1.0, static_cast<double>(m)));
    return sorted[i - 1];
  };
  return 0.5 * (at(center + spread) - at(center - spread));
}

}  // namespace ducfem
