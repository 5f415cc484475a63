#include <Eigen/Cholesky>
#include <cmath>

#include "doctest.h"
#include "ducfem/bfgs.hpp"
#include "ducfem/errors.hpp"
#include "support.hpp"

using namespace ducfem;

namespace {

const Eigen::Vector3d kTarget(1.0, -1.0, 0.3);

Evaluation quadratic(const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x - kTarget;
  return {0.5 * d.squaredNorm(), d};
}

Evaluation rosenbrock(const Eigen::VectorXd& x) {
  const double a = 1 - x(0), b = x(1) - x(0) * x(0);
  Eigen::Vector2d g(-2 * a - 400 * x(0) * b, 200 * b);
  return {a * a + 100 * b * b, g};
}

void check_history(const BfgsResult& r) {
  REQUIRE(!r.history.empty());
  CHECK(r.history.front().iter == 0);
  CHECK(r.history.front().step_len == 0.0);
  CHECK(static_cast<int>(r.history.size()) == r.iterations + 1);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i].iter == static_cast<int>(i));
    CHECK(r.history[i].J <= r.history[i - 1].J);
    CHECK(r.history[i].step_len > 0);
  }
  CHECK(test::max_abs(r.H - r.H.transpose()) <= 1e-10);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(r.H).info() == Eigen::Success);
}

const RomOperators& smoke_rom() {
  static const RomOperators rom = [] {
    const auto& fom = test::small_fom();
    const SnapshotSet set = build_snapshots(
        fom, default_sample_grid(4, {5.0, 10.0}, {{1.0, 0.0}, {0.0, 1.0}}, {0.05, 0.5, 2.0},
                                 {-0.05, -0.5, -2.0}));
    return project_operators(
        pod_correlation(set.P, block_diagonal(fom.M0), ModeSelection::fixed(16)), fom);
  }();
  return rom;
}

}  // namespace

TEST_CASE("quadratic surrogate") {
  const auto r = bfgs_minimize(quadratic, Eigen::Vector3d(10.0, 10.0, 1.0));
  CAPTURE(to_string(r.status));
  CHECK((r.x - kTarget).norm() <= 1e-8);
  CHECK(r.iterations <= 20);
  check_history(r);
  CHECK(r.history.front().x == Eigen::VectorXd(Eigen::Vector3d(10.0, 10.0, 1.0)));
}

TEST_CASE("first inverse Hessian is scaled by the gradient norm") {
  BfgsOptions one;
  one.max_iter = 1;
  const Eigen::Vector3d x0(4.0, 0.0, 0.3);
  const auto r = bfgs_minimize(quadratic, x0, one);
  CHECK(r.iterations == 1);
  CHECK(r.status == BfgsStatus::max_iter);
  // unit step along -g/|g| is accepted at t = 1
  CHECK(r.history[1].step_len == 1.0);
  const Eigen::Vector3d g0(3.0, 1.0, 0.0);
  CHECK((r.x - (x0 - g0 / g0.norm())).norm() < 1e-15);
}

TEST_CASE("Rosenbrock") {
  BfgsOptions opts;
  opts.max_iter = 200;
  opts.value_tol = 0;
  opts.grad_tol = 1e-10;
  const auto r = bfgs_minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), opts);
  CHECK((r.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-4);
  check_history(r);
}

TEST_CASE("line search failure returns the current iterate") {
  // reported gradient points the wrong way, so no trial decreases f
  const Objective wrong = [](const Eigen::VectorXd& x) {
    return Evaluation{0.5 * x.squaredNorm(), -x};
  };
  const Eigen::Vector2d x0(1.0, 2.0);
  const auto r = bfgs_minimize(wrong, x0);
  CHECK(r.status == BfgsStatus::line_search_failed);
  CHECK(r.x == Eigen::VectorXd(x0));
  CHECK(r.iterations == 0);
  CHECK(r.evaluations == 1 + BfgsOptions{}.max_trials);
  CHECK(std::string(to_string(r.status)) == "line_search_failed");
}

TEST_CASE("throwing or non-finite trials shrink the step") {
  int thrown = 0;
  const Objective fenced = [&](const Eigen::VectorXd& x) {
    if (x(0) > 0.5) {
      ++thrown;
      throw SolverError("outside", 1.0);
    }
    if (x(1) > 5.0) return Evaluation{std::nan(""), x};
    const Eigen::VectorXd d = x - Eigen::Vector2d(2.0, 0.0);
    return Evaluation{0.5 * d.squaredNorm(), d};
  };
  const auto r = bfgs_minimize(fenced, Eigen::Vector2d(0.0, 0.0));
  CHECK(thrown > 0);
  CHECK(r.x(0) <= 0.5);
  for (const auto& h : r.history) CHECK(h.x(0) <= 0.5);
  check_history(r);
  CHECK_THROWS_AS(bfgs_minimize(fenced, Eigen::Vector2d(1.0, 0.0)), SolverError);
}

TEST_CASE("curvature skip keeps the inverse Hessian positive definite") {
  // concave in x0 near the start, so early steps see y's <= 0
  const Objective bumpy = [](const Eigen::VectorXd& x) {
    return Evaluation{std::cos(x(0)) + x(1) * x(1),
                      Eigen::Vector2d(-std::sin(x(0)), 2 * x(1))};
  };
  const auto r = bfgs_minimize(bumpy, Eigen::Vector2d(0.1, 0.5));
  check_history(r);
  CHECK(std::abs(r.x(0) - M_PI) < 1e-3);
}

TEST_CASE("start point checks") {
  const Objective bad = [](const Eigen::VectorXd& x) {
    return Evaluation{std::nan(""), x};
  };
  CHECK_THROWS_AS(bfgs_minimize(bad, Eigen::Vector2d(1, 1)), Error);
  const Objective short_grad = [](const Eigen::VectorXd&) {
    return Evaluation{1.0, Eigen::VectorXd::Zero(1)};
  };
  CHECK_THROWS_AS(bfgs_minimize(short_grad, Eigen::Vector2d(1, 1)), Error);
  const auto flat = bfgs_minimize([](const Eigen::VectorXd& x) { return Evaluation{1.0, 0 * x}; },
                                  Eigen::Vector2d(1, 1));
  CHECK(flat.status == BfgsStatus::gradient);
  CHECK(flat.iterations == 0);
}

TEST_CASE("reduced-model optimization") {
  const auto& rom = smoke_rom();
  CvarConfig cfg;
  cfg.beta = 0.75;
  cfg.Q = 64;
  cfg.seed = 5;
  cfg.gamma_p = hard_wall_energy(rom, {10.0, 30.0, 30.0});
  const auto samples = sample_params(cfg);
  BfgsOptions opts;
  opts.max_iter = 40;
  const auto a = optimize(cfg, rom, samples, {10.0, 10.0, false}, 1.0, 1, opts);
  const auto b = optimize(cfg, rom, samples, {10.0, 10.0, false}, 1.0, 3, opts);
  CHECK(a.J < a.history.front().J);
  CHECK(a.iter <= 40);
  CHECK(a.pde_solves > cfg.Q);
  CHECK(a.evaluations >= a.iter + 1);
  CHECK(test::max_abs(a.H - a.H.transpose()) <= 1e-10);
  for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i].J <= a.history[i - 1].J);
  CHECK(a.energies.size() == cfg.Q);
  CHECK(a.xi.xi_r > 0);

  CHECK(b.J == a.J);
  CHECK(b.xi.xi_r == a.xi.xi_r);
  CHECK(b.xi.xi_i == a.xi.xi_i);
  CHECK(b.alpha == a.alpha);
  CHECK(b.iter == a.iter);

  CHECK_THROWS_AS(optimize(cfg, rom, samples, {-1.0, 10.0, false}, 1.0), Error);
  CHECK_THROWS_AS(optimize(cfg, rom, samples, Impedance::hard(), 1.0), Error);
}

TEST_CASE("deterministic optimization on both models") {
  const auto& fom = test::small_fom();
  const Index n2 = 2 * fom.n();
  const RomOperators full = project_operators(Eigen::MatrixXd::Identity(n2, n2), fom);
  const RandomParams theta{8.0, 20.0, 20.0};
  const double gamma_p = hard_wall_energy(full, theta);
  BfgsOptions opts;
  opts.max_iter = 60;
  const auto f = optimize_deterministic(fom, theta, {10.0, 10.0, false}, gamma_p, 1e-6, opts);
  const auto r = optimize_deterministic(full, theta, {10.0, 10.0, false}, gamma_p, 1e-6, opts);
  CHECK(f.J < f.history.front().J);
  CHECK(std::abs(f.xi.xi_r - r.xi.xi_r) <= 1e-6 * std::hypot(f.xi.xi_r, f.xi.xi_i));
  CHECK(std::abs(f.xi.xi_i - r.xi.xi_i) <= 1e-6 * std::hypot(f.xi.xi_r, f.xi.xi_i));
  CHECK(f.energy > 0);
  CHECK(f.energy < gamma_p);
  CHECK_THROWS_AS(optimize_deterministic(fom, theta, {0.0, 1.0, false}, gamma_p, 1e-6), Error);
  CHECK_THROWS_AS(optimize_deterministic(fom, theta, {1.0, 1.0, false}, 0.0, 1e-6), Error);
}
