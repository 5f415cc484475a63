#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

namespace ducfem {

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

/// Right-preconditioned GMRES without restarts, starting from x = 0.
///
/// `apply_op(v)` returns A v and `apply_prec(v)` returns M^{-1} v. Stops when
/// the true residual estimate satisfies |b - A x| <= tol |b|, on a happy
/// breakdown (the Krylov space became invariant, so x is exact), or after
/// `max_iter` Arnoldi steps.
template <typename Scalar, typename Op, typename Prec>
GmresResult gmres(const Op& apply_op, const Prec& apply_prec,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, Scalar tol, int max_iter) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GmresResult result;
  x = Vector::Zero(b.size());
  const Scalar beta = b.norm();
  if (beta == Scalar(0)) {
    result.converged = true;
    return result;
  }

  std::vector<Vector> basis;
  basis.reserve(std::min(max_iter, 256) + 1);
  basis.push_back(b / beta);
  int capacity = std::min(max_iter, 64);
  Matrix hess = Matrix::Zero(capacity + 1, capacity);
  Vector cs = Vector::Zero(capacity), sn = Vector::Zero(capacity);
  Vector g = Vector::Zero(capacity + 1);
  g(0) = beta;

  int steps = 0;
  Scalar residual = beta;
  for (int j = 0; j < max_iter; ++j) {
    if (j == capacity) {
      capacity = std::min(max_iter, 2 * capacity);
      hess.conservativeResizeLike(Matrix::Zero(capacity + 1, capacity));
      cs.conservativeResizeLike(Vector::Zero(capacity));
      sn.conservativeResizeLike(Vector::Zero(capacity));
      g.conservativeResizeLike(Vector::Zero(capacity + 1));
    }
    Vector w = apply_op(apply_prec(basis[j]));
    const Scalar w_norm0 = w.norm();
    // modified Gram-Schmidt with one reorthogonalization pass
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const Scalar h = basis[i].dot(w);
        hess(i, j) += h;
        w -= h * basis[i];
      }
    }
    const Scalar w_norm = w.norm();
    hess(j + 1, j) = w_norm;

    for (int i = 0; i < j; ++i) {
      const Scalar t = cs(i) * hess(i, j) + sn(i) * hess(i + 1, j);
      hess(i + 1, j) = -sn(i) * hess(i, j) + cs(i) * hess(i + 1, j);
      hess(i, j) = t;
    }
    const Scalar denom = std::hypot(hess(j, j), hess(j + 1, j));
    cs(j) = hess(j, j) / denom;
    sn(j) = hess(j + 1, j) / denom;
    hess(j, j) = denom;
    hess(j + 1, j) = Scalar(0);
    g(j + 1) = -sn(j) * g(j);
    g(j) = cs(j) * g(j);

    steps = j + 1;
    residual = std::abs(g(j + 1));
    const bool breakdown = w_norm <= Scalar(1e-14) * w_norm0;
    if (residual <= tol * beta || breakdown) {
      result.converged = true;
      break;
    }
    basis.push_back(w / w_norm);
  }

  const Vector y = hess.topLeftCorner(steps, steps).template triangularView<Eigen::Upper>().solve(
      g.head(steps));
  Vector u = Vector::Zero(b.size());
  for (int i = 0; i < steps; ++i) u += y(i) * basis[i];
  x = apply_prec(u);

  result.iterations = steps;
  result.relative_residual = residual / beta;
  return result;
}

}  // namespace ducfem
