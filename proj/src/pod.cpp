#include "ducfem/pod.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "ducfem/errors.hpp"
#include "ducfem/parallel.hpp"

namespace ducfem {

namespace {

// Flip each column so its entry of largest magnitude is positive.
void fix_signs(Eigen::MatrixXd& Z) {
  for (Index c = 0; c < Z.cols(); ++c) {
    Index imax = 0;
    Z.col(c).cwiseAbs().maxCoeff(&imax);
    if (Z(imax, c) < 0) Z.col(c) *= -1.0;
  }
}

}  // namespace

Index mode_count(const ModeSelection& select, const Eigen::VectorXd& s) {
  if (select.kind == ModeSelection::Kind::all) return s.size();
  if (select.kind == ModeSelection::Kind::energy) {
    if (!(select.tau > 0 && select.tau < 1)) throw Error("energy fraction tau must lie in (0,1)");
    return energy_mode_count(s, select.tau);
  }
  if (select.rank < 1) throw Error("mode count must be at least 1");
  if (select.rank > s.size())
    throw RankError("requested " + std::to_string(select.rank) + " modes exceeds numerical rank",
                    s.size());
  return select.rank;
}

namespace {

void check_snapshots(const Eigen::MatrixXd& P) {
  if (P.cols() == 0 || P.rows() == 0) throw Error("empty snapshot matrix");
  if (!P.allFinite()) throw Error("snapshot matrix has non-finite entries");
  if (P.norm() == 0) throw RankError("snapshot matrix is zero", 0);
}

}  // namespace

std::vector<ParameterSample> default_sample_grid(int k_count, std::pair<double, double> k_range,
                                                 const std::vector<std::complex<double>>& mu_set,
                                                 const std::vector<double>& xir_set,
                                                 const std::vector<double>& xii_set) {
  if (k_count < 2) throw Error("k_count must be at least 2");
  if (mu_set.empty() || xir_set.empty() || xii_set.empty())
    throw Error("sample sets must be nonempty");
  std::vector<ParameterSample> grid;
  grid.reserve(k_count * mu_set.size() * xir_set.size() * xii_set.size());
  const auto [k0, k1] = k_range;
  for (int i = 0; i < k_count; ++i) {
    const double k = i + 1 == k_count ? k1 : k0 + (k1 - k0) * i / (k_count - 1);
    for (const auto mu : mu_set)
      for (const double xr : xir_set)
        for (const double xim : xii_set) grid.push_back({k, mu, xr, xim});
  }
  return grid;
}

SnapshotSet build_snapshots(const FomOperators& fom, const std::vector<ParameterSample>& samples,
                            const SolverMethod& method, int workers) {
  if (samples.empty()) throw Error("no snapshot samples");
  using Key = std::tuple<double, double, double>;
  std::map<Key, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto& s = samples[j];
    validate(s.theta());
    validate(s.impedance());
    const auto [it, fresh] = group_of.emplace(Key{s.k, s.xi_r, s.xi_i}, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(j);
  }

  SnapshotSet set;
  set.samples = samples;
  set.P.resize(2 * fom.n(), static_cast<Index>(samples.size()));
  set.seconds.setZero(static_cast<Index>(samples.size()));
  using Clock = std::chrono::steady_clock;
  auto elapsed = [](Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
  };
  parallel_for(static_cast<Index>(groups.size()), workers, [&](Index g) {
    const auto& members = groups[g];
    const auto& first = samples[members.front()];
    try {
      auto start = Clock::now();
      const HelmholtzSolver solver(
          apply_dirichlet(assemble_block(fom, first.theta(), first.impedance()), fom,
                          first.theta()),
          method);
      for (const std::size_t j : members) {
        const auto& s = samples[j];
        try {
          set.P.col(static_cast<Index>(j)) =
              solver.solve(dirichlet_rhs(fom, s.mu.real(), s.mu.imag())).p;
          set.seconds(static_cast<Index>(j)) = elapsed(start);
          start = Clock::now();
        } catch (const SolverError& e) {
          throw SolverError("sample " + std::to_string(j) + ": " + e.what(), e.residual());
        }
      }
    } catch (const SolverError& e) {
      if (std::string(e.what()).rfind("sample ", 0) == 0) throw;
      throw SolverError("sample " + std::to_string(members.front()) + ": " + e.what(),
                        e.residual());
    }
  });
  return set;
}

const char* to_string(PodMode mode) {
  return mode == PodMode::euclidean ? "euclidean" : "mass_weighted";
}

PodMode parse_pod_mode(const std::string& text) {
  if (text == "euclidean") return PodMode::euclidean;
  if (text == "mass_weighted") return PodMode::mass_weighted;
  throw Error("unknown POD mode '" + text + "'");
}

Index energy_mode_count(const Eigen::VectorXd& s, double tau) {
  const double total = std::sqrt(s.squaredNorm());
  double partial = 0;
  for (Index i = 0; i < s.size(); ++i) {
    partial += s(i) * s(i);
    if (std::sqrt(partial) >= tau * total) return i + 1;
  }
  return s.size();
}

PodBasis pod_qr_svd(const Eigen::MatrixXd& P, const ModeSelection& select) {
  check_snapshots(P);
  const Index rows = P.rows();
  const Index m = P.cols();
  const Index r = std::min(rows, m);

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(P);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, r);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU);

  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = s(0) * static_cast<double>(std::max(rows, m)) *
                     std::numeric_limits<double>::epsilon();
  Index d = 0;
  while (d < s.size() && s(d) > tol) ++d;

  PodBasis basis;
  basis.mode = PodMode::euclidean;
  basis.singular_values = s.head(d);
  const Index N = mode_count(select, basis.singular_values);
  basis.Z = Q * svd.matrixU().leftCols(N);
  fix_signs(basis.Z);
  return basis;
}

PodBasis pod_correlation(const Eigen::MatrixXd& P, const SparseMatrix& mass,
                         const ModeSelection& select) {
  check_snapshots(P);
  if (mass.rows() != P.rows()) throw Error("mass matrix does not match snapshot length");
  const Eigen::MatrixXd MP = mass * P;
  Eigen::MatrixXd C = P.transpose() * MP;
  C = 0.5 * (C + C.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  if (eig.info() != Eigen::Success) throw Error("correlation eigensolver failed");

  const Index m = C.rows();
  const Eigen::VectorXd lambda = eig.eigenvalues().reverse();
  const Eigen::MatrixXd U = eig.eigenvectors().rowwise().reverse();
  const double tol = lambda(0) * static_cast<double>(m) * std::numeric_limits<double>::epsilon();
  Index d = 0;
  while (d < m && lambda(d) > tol) ++d;

  PodBasis basis;
  basis.mode = PodMode::mass_weighted;
  basis.singular_values = lambda.head(d).cwiseSqrt();
  const Index N = mode_count(select, basis.singular_values);
  basis.Z = P * U.leftCols(N);
  for (Index i = 0; i < N; ++i) basis.Z.col(i) /= basis.singular_values(i);
  fix_signs(basis.Z);
  return basis;
}

PodBasis truncate(const PodBasis& basis, Index count) {
  if (count < 1 || count > basis.modes())
    throw RankError("cannot keep " + std::to_string(count) + " modes", basis.modes());
  PodBasis out = basis;
  out.Z = basis.Z.leftCols(count);
  return out;
}

Eigen::MatrixXd projection_residual(const Eigen::MatrixXd& P, const PodBasis& basis,
                                    const SparseMatrix& mass) {
  const Eigen::MatrixXd coeffs = basis.mode == PodMode::mass_weighted
                                     ? Eigen::MatrixXd(basis.Z.transpose() * (mass * P))
                                     : Eigen::MatrixXd(basis.Z.transpose() * P);
  return P - basis.Z * coeffs;
}

double weighted_norm_sq(const Eigen::MatrixXd& R, const SparseMatrix& W) {
  return (R.array() * (W * R).array()).sum();
}

}  // namespace ducfem
