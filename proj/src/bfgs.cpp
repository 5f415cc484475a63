#include "ducfem/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ducfem/errors.hpp"

namespace ducfem {

namespace {

std::optional<Evaluation> try_evaluate(const Objective& f, const Eigen::VectorXd& x) {
  try {
    Evaluation e = f(x);
    if (!std::isfinite(e.value) || !e.gradient.allFinite()) return std::nullopt;
    return e;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Minimizer of the quadratic through phi(0), phi'(0) and phi(t).
double quadratic_step(double f0, double d0, double t, double ft) {
  const double denom = 2.0 * (ft - f0 - d0 * t);
  return denom > 0 ? -d0 * t * t / denom : 0.5 * t;
}

// Minimizer of the cubic through phi(0), phi'(0), phi(t0) and phi(t1).
double cubic_step(double f0, double d0, double t0, double f0t, double t1, double f1t) {
  const double r1 = f1t - f0 - d0 * t1;
  const double r0 = f0t - f0 - d0 * t0;
  const double scale = t0 * t0 * t1 * t1 * (t1 - t0);
  const double a = (t0 * t0 * r1 - t1 * t1 * r0) / scale;
  const double b = (-t0 * t0 * t0 * r1 + t1 * t1 * t1 * r0) / scale;
  if (a == 0) return b > 0 ? -d0 / (2 * b) : 0.5 * t1;
  const double disc = b * b - 3 * a * d0;
  if (disc < 0) return 0.5 * t1;
  return (-b + std::sqrt(disc)) / (3 * a);
}

}  // namespace

const char* to_string(BfgsStatus status) {
  switch (status) {
    case BfgsStatus::gradient: return "gradient";
    case BfgsStatus::value: return "value";
    case BfgsStatus::step: return "step";
    case BfgsStatus::max_iter: return "max_iter";
    case BfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& options) {
  const Index dim = x0.size();
  BfgsResult res;
  res.x = x0;
  Evaluation cur = f(x0);
  res.evaluations = 1;
  if (!std::isfinite(cur.value) || !cur.gradient.allFinite())
    throw Error("objective is not finite at the start point");
  if (cur.gradient.size() != dim) throw Error("gradient size does not match the controls");

  const double g0 = cur.gradient.norm();
  const double J0 = std::abs(cur.value);
  auto initial_h = [&](double gnorm) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(dim, dim) / (gnorm > 0 ? gnorm : 1.0));
  };
  res.H = initial_h(g0);
  res.history.push_back({0, cur.value, g0, x0, 0.0});

  auto finish = [&](BfgsStatus s) {
    res.value = cur.value;
    res.gradient = cur.gradient;
    res.status = s;
    return res;
  };
  if (g0 == 0) return finish(BfgsStatus::gradient);

  while (true) {
    if (res.iterations >= options.max_iter) return finish(BfgsStatus::max_iter);

    Eigen::VectorXd v = -res.H * cur.gradient;
    double d0 = cur.gradient.dot(v);
    if (!(d0 < 0)) {
      res.H = initial_h(cur.gradient.norm());
      v = -res.H * cur.gradient;
      d0 = cur.gradient.dot(v);
    }

    double t = 1.0;
    double t_prev = 0, f_prev = 0;
    bool have_prev = false;
    std::optional<Evaluation> accepted;
    for (int trial = 0; trial < options.max_trials; ++trial) {
      const auto e = try_evaluate(f, res.x + t * v);
      ++res.evaluations;
      if (e && e->value <= cur.value + options.armijo * t * d0) {
        accepted = e;
        break;
      }
      double t_next;
      if (!e) {
        t_next = 0.1 * t;
        have_prev = false;
      } else {
        t_next = have_prev ? cubic_step(cur.value, d0, t_prev, f_prev, t, e->value)
                           : quadratic_step(cur.value, d0, t, e->value);
        if (!std::isfinite(t_next)) t_next = 0.5 * t;
        t_next = std::clamp(t_next, 0.1 * t, 0.5 * t);
        t_prev = t;
        f_prev = e->value;
        have_prev = true;
      }
      t = t_next;
    }
    if (!accepted) return finish(BfgsStatus::line_search_failed);

    const Eigen::VectorXd s = t * v;
    const Eigen::VectorXd y = accepted->gradient - cur.gradient;
    res.x += s;
    cur = *accepted;
    ++res.iterations;
    const double gnorm = cur.gradient.norm();
    res.history.push_back({res.iterations, cur.value, gnorm, res.x, t});

    const double ys = y.dot(s);
    if (ys > options.curvature_min) {
      const double rho = 1.0 / ys;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
      const Eigen::MatrixXd L = I - rho * s * y.transpose();
      res.H = L * res.H * L.transpose() + rho * s * s.transpose();
      res.H = 0.5 * (res.H + res.H.transpose()).eval();
    }

    if (gnorm <= options.grad_tol * g0) return finish(BfgsStatus::gradient);
    if (std::abs(cur.value) <= options.value_tol * J0) return finish(BfgsStatus::value);
    if (s.norm() <= options.step_tol * res.x.norm()) return finish(BfgsStatus::step);
  }
}

OptState optimize(const CvarConfig& cfg, const RomOperators& rom,
                  const std::vector<RandomParams>& samples, const Impedance& init_xi,
                  double init_alpha, int workers, const BfgsOptions& options) {
  if (init_xi.hard_wall || !(init_xi.xi_r > 0))
    throw Error("initial impedance must have positive resistance");
  validate(cfg);
  Index solves = 0;
  const Objective f = [&](const Eigen::VectorXd& x) {
    const auto r = solve_adjoints_and_gradient({x(0), x(1), false}, x(2), samples, rom, cfg,
                                               workers);
    solves += r.solves;
    return Evaluation{r.J, r.gradient};
  };
  const auto res = bfgs_minimize(f, Eigen::Vector3d(init_xi.xi_r, init_xi.xi_i, init_alpha),
                                 options);
  OptState out;
  out.xi = {res.x(0), res.x(1), false};
  out.alpha = res.x(2);
  out.H = res.H;
  out.iter = res.iterations;
  out.history = res.history;
  out.status = res.status;
  out.evaluations = res.evaluations;
  out.J = res.value;
  out.energies = evaluate_objective(out.xi, out.alpha, samples, rom, cfg, workers).energies;
  out.pde_solves = solves;
  return out;
}

namespace {

template <typename Model>
DeterministicRun run_deterministic(const Model& model, const RandomParams& theta,
                                   const Impedance& init_xi, double gamma_p, double gamma,
                                   const BfgsOptions& options) {
  if (init_xi.hard_wall || !(init_xi.xi_r > 0))
    throw Error("initial impedance must have positive resistance");
  if (!(gamma_p > 0)) throw Error("gamma_p must be positive");
  const Objective f = [&](const Eigen::VectorXd& x) {
    const auto r = deterministic_objective({x(0), x(1), false}, theta, model, gamma_p, gamma);
    return Evaluation{r.J, r.gradient};
  };
  const auto res = bfgs_minimize(f, Eigen::Vector2d(init_xi.xi_r, init_xi.xi_i), options);
  DeterministicRun out;
  out.xi = {res.x(0), res.x(1), false};
  out.J = res.value;
  out.energy = deterministic_objective(out.xi, theta, model, gamma_p, gamma).energy;
  out.iter = res.iterations;
  out.evaluations = res.evaluations;
  out.status = res.status;
  out.history = res.history;
  return out;
}

}  // namespace

DeterministicRun optimize_deterministic(const RomOperators& rom, const RandomParams& theta,
                                        const Impedance& init_xi, double gamma_p, double gamma,
                                        const BfgsOptions& options) {
  return run_deterministic(rom, theta, init_xi, gamma_p, gamma, options);
}

DeterministicRun optimize_deterministic(const FomOperators& fom, const RandomParams& theta,
                                        const Impedance& init_xi, double gamma_p, double gamma,
                                        const BfgsOptions& options) {
  return run_deterministic(fom, theta, init_xi, gamma_p, gamma, options);
}

}  // namespace ducfem
