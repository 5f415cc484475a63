#include <Eigen/SVD>
#include <Eigen/QR>

#include "doctest.h"
#include "ducfem/errors.hpp"
#include "ducfem/pod.hpp"
#include "support.hpp"

using namespace ducfem;
using test::max_abs;

namespace {

// 30 snapshots on the coarse duct.
const SnapshotSet& desk_set() {
  static const SnapshotSet set = build_snapshots(
      test::small_fom(),
      default_sample_grid(5, {5.0, 10.0}, {{1.0, 0.0}, {0.0, 1.0}}, {0.05, 0.5, 2.0}, {-0.5}));
  return set;
}

SparseMatrix block_mass() { return block_diagonal(test::small_fom().M0); }

void check_sign_convention(const Eigen::MatrixXd& Z) {
  for (Index j = 0; j < Z.cols(); ++j) {
    Index i = 0;
    Z.col(j).cwiseAbs().maxCoeff(&i);
    CHECK(Z(i, j) > 0);
  }
}

}  // namespace

TEST_CASE("sample grid") {
  const auto grid = default_sample_grid(40, {5.0, 10.0}, {{1.0, 0.0}, {0.0, 1.0}},
                                        {0.05, 0.5, 2.0}, {-0.05, -0.5, -2.0});
  CHECK(grid.size() == 720);
  CHECK(grid.front().k == 5.0);
  CHECK(grid.back().k == 10.0);
  // k varies slowest
  CHECK(grid[17].k == 5.0);
  CHECK(grid[18].k > 5.0);

  const auto two = default_sample_grid(2, {5.0, 10.0}, {{1.0, 0.0}}, {1.0}, {-1.0});
  CHECK(two.size() == 2);
  CHECK(default_sample_grid(3, {5, 10}, {{1, 0}, {0, 1}, {1, 1}}, {1, 2}, {-1, -2, -3, -4}).size() ==
        3 * 3 * 2 * 4);
  CHECK_THROWS_AS(default_sample_grid(1, {5, 10}, {{1, 0}}, {1}, {1}), Error);
  CHECK_THROWS_AS(default_sample_grid(2, {5, 10}, {}, {1}, {1}), Error);
}

TEST_CASE("snapshot columns are full-order solutions") {
  const auto& fom = test::small_fom();
  const ParameterSample s{6.0, {0.0, 1.0}, 0.5, -0.5};

  const SnapshotSet one = build_snapshots(fom, {s});
  CHECK(one.P.cols() == 1);
  CHECK(one.P.col(0) == solve_state(fom, s.theta(), s.impedance()).p);

  const SnapshotSet dup = build_snapshots(fom, {s, s, {7.0, {1.0, 0.0}, 0.5, -0.5}});
  CHECK(dup.P.col(0) == dup.P.col(1));
  CHECK(dup.samples.size() == 3);
  CHECK(dup.seconds.size() == 3);
  CHECK(pod_qr_svd(dup.P, ModeSelection::all_modes()).rank() == 2);

  const auto& set = desk_set();
  CHECK(set.P.cols() == 30);
  CHECK(set.P.colwise().norm().minCoeff() > 0);
}

TEST_CASE("snapshots are independent of the worker count") {
  const auto& fom = test::small_fom();
  const auto grid = default_sample_grid(3, {5.0, 10.0}, {{1.0, 0.0}, {0.0, 1.0}}, {0.5, 2.0}, {-0.5});
  const auto a = build_snapshots(fom, grid, DirectSolve{}, 1);
  const auto b = build_snapshots(fom, grid, DirectSolve{}, 3);
  CHECK(a.P == b.P);
  CHECK(a.samples == b.samples);
}

TEST_CASE("solver failures name the sample") {
  const auto& fom = test::small_fom();
  const std::vector<ParameterSample> grid{{6.0, {1.0, 0.0}, 0.5, -0.5}, {7.0, {1.0, 0.0}, 0.5, -0.5}};
  try {
    build_snapshots(fom, grid, GmresShiftedLaplacian{1.0, 0.5, 1e-14, 1});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).rfind("sample 0: ", 0) == 0);
  }
}

TEST_CASE("two orthogonal columns are reproduced exactly") {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(6, 2);
  P(0, 0) = 3.0;
  P(4, 1) = -2.0;
  const PodBasis b = pod_qr_svd(P, ModeSelection::fixed(2));
  CHECK(b.modes() == 2);
  CHECK(b.singular_values(0) == doctest::Approx(3.0));
  CHECK(b.singular_values(1) == doctest::Approx(2.0));
  CHECK(max_abs(projection_residual(P, b, {})) < 1e-15);
}

TEST_CASE("QR+SVD matches a dense SVD") {
  test::Rng rng(23);
  const Eigen::MatrixXd P = rng.matrix(50, 10);
  const PodBasis b = pod_qr_svd(P, ModeSelection::fixed(10));
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU);
  CHECK(max_abs(b.singular_values - svd.singularValues()) < 1e-12);
  for (Index j = 0; j < 10; ++j)
    CHECK(std::abs(std::abs(b.Z.col(j).dot(svd.matrixU().col(j))) - 1.0) < 1e-10);
  CHECK(max_abs(b.Z.transpose() * b.Z - Eigen::MatrixXd::Identity(10, 10)) < 1e-10);
  check_sign_convention(b.Z);
}

TEST_CASE("mode selection") {
  const Eigen::VectorXd s = (Eigen::VectorXd(4) << 4.0, 2.0, 1.0, 0.5).finished();
  // cumulative sqrt energies: 4, 4.47, 4.58, 4.61
  CHECK(energy_mode_count(s, 0.8) == 1);
  CHECK(energy_mode_count(s, 0.95) == 2);
  CHECK(energy_mode_count(s, 0.99) == 3);
  CHECK(energy_mode_count(s, 0.9999) == 4);
  CHECK(mode_count(ModeSelection::all_modes(), s) == 4);
  CHECK(mode_count(ModeSelection::fixed(3), s) == 3);
  CHECK_THROWS_AS(mode_count(ModeSelection::fixed(5), s), RankError);
  CHECK_THROWS_AS(mode_count(ModeSelection::energy_fraction(1.0), s), Error);
  CHECK_THROWS_AS(mode_count(ModeSelection::fixed(0), s), Error);
}

TEST_CASE("rank errors list the attainable rank") {
  Eigen::MatrixXd P(5, 3);
  P.col(0) << 1, 2, 3, 4, 5;
  P.col(1) = 2 * P.col(0);
  P.col(2) << 0, 1, 0, 1, 0;
  try {
    pod_qr_svd(P, ModeSelection::fixed(3));
    FAIL("expected RankError");
  } catch (const RankError& e) {
    CHECK(e.attainable_rank() == 2);
    CHECK(std::string(e.what()).find("attainable rank 2") != std::string::npos);
  }
  CHECK_THROWS_AS(pod_qr_svd(Eigen::MatrixXd::Zero(4, 2), ModeSelection::fixed(1)), RankError);
}

TEST_CASE("single snapshot in the mass inner product") {
  const auto& set = desk_set();
  const SparseMatrix M = block_mass();
  const Eigen::VectorXd p = set.P.col(4);
  const PodBasis b = pod_correlation(p, M, ModeSelection::fixed(1));
  const double norm = std::sqrt(p.dot(M * p));
  CHECK(b.singular_values(0) == doctest::Approx(norm).epsilon(1e-12));
  const Eigen::VectorXd expected = (b.Z.col(0).dot(p) > 0 ? 1.0 : -1.0) * p / norm;
  CHECK(test::rel_diff(b.Z.col(0), expected) < 1e-12);
}

TEST_CASE("orthonormality in both modes") {
  const auto& set = desk_set();
  const SparseMatrix M = block_mass();
  const PodBasis e = pod_qr_svd(set.P, ModeSelection::fixed(12));
  const PodBasis m = pod_correlation(set.P, M, ModeSelection::fixed(12));
  CHECK(e.mode == PodMode::euclidean);
  CHECK(m.mode == PodMode::mass_weighted);
  CHECK(max_abs(e.Z.transpose() * e.Z - Eigen::MatrixXd::Identity(12, 12)) < 1e-10);
  CHECK(max_abs(m.Z.transpose() * (M * m.Z) - Eigen::MatrixXd::Identity(12, 12)) < 1e-10);
  for (const PodBasis* b : {&e, &m}) {
    CHECK(b->singular_values.minCoeff() > 0);
    for (Index i = 1; i < b->rank(); ++i)
      CHECK(b->singular_values(i) <= b->singular_values(i - 1));
    CHECK(b->rank() >= b->modes());
    check_sign_convention(b->Z);
  }
}

TEST_CASE("L2 tail identity for every truncation") {
  const auto& set = desk_set();
  const SparseMatrix M = block_mass();
  const PodBasis full = pod_correlation(set.P, M, ModeSelection::all_modes());
  const Index d = full.rank();
  CHECK(d > 10);
  const Eigen::VectorXd lambda = full.singular_values.array().square();
  for (Index N = 1; N < d; ++N) {
    const double tail = lambda.tail(d - N).sum();
    const double err = weighted_norm_sq(projection_residual(set.P, truncate(full, N), M), M);
    CAPTURE(N);
    CHECK(std::abs(err - tail) <= 1e-8 * tail);
  }
}

TEST_CASE("H1 tail identity") {
  const auto& set = desk_set();
  const auto& fom = test::small_fom();
  const SparseMatrix M = block_mass();
  const SparseMatrix H = SparseMatrix(M + block_diagonal(fom.S0));
  const PodBasis full = pod_correlation(set.P, M, ModeSelection::all_modes());
  const Index d = full.rank();
  for (const Index N : {Index(1), Index(5), d / 2, d - 3}) {
    double tail = 0;
    for (Index i = N; i < d; ++i) {
      const Eigen::VectorXd phi = full.Z.col(i);
      tail += full.singular_values(i) * full.singular_values(i) * phi.dot(H * phi);
    }
    const double err = weighted_norm_sq(projection_residual(set.P, truncate(full, N), M), H);
    CAPTURE(N);
    CHECK(std::abs(err - tail) <= 1e-6 * tail);
  }
}

TEST_CASE("POD beats random bases of the same size") {
  const auto& set = desk_set();
  test::Rng rng(31);
  const Index N = 6;
  const PodBasis pod = pod_qr_svd(set.P, ModeSelection::fixed(N));
  const double pod_err = projection_residual(set.P, pod, {}).squaredNorm();
  for (int t = 0; t < 20; ++t) {
    // perturb the POD subspace so competitors are not hopeless
    const Eigen::MatrixXd W = pod.Z + 0.05 * rng.matrix(pod.Z.rows(), N);
    PodBasis other;
    other.Z = Eigen::HouseholderQR<Eigen::MatrixXd>(W).householderQ() *
              Eigen::MatrixXd::Identity(W.rows(), N);
    CHECK(pod_err <= projection_residual(set.P, other, {}).squaredNorm());
  }
}

TEST_CASE("spectrum decays without collapsing") {
  const auto& set = desk_set();
  const PodBasis b = pod_qr_svd(set.P, ModeSelection::all_modes());
  const Eigen::VectorXd& s = b.singular_values;
  CHECK(s(0) > s(s.size() - 1));
  CHECK(energy_mode_count(s, 0.995) < s.size());
  CHECK(b.modes() == b.rank());
  const PodBasis t = truncate(b, 3);
  CHECK(t.modes() == 3);
  CHECK(t.singular_values == s);
  CHECK_THROWS_AS(truncate(b, b.modes() + 1), RankError);
}
