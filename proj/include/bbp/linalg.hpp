#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <type_traits>

#include <Eigen/Dense>

#include "bbp/errors.hpp"
#include "bbp/rng.hpp"

namespace bbp {

enum class Extreme { largest, smallest };

template <class Scalar>
struct Eigenpair {
  double value = 0.0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
  int iterations = 0;
};

// One extreme eigenpair of a Hermitian matrix by Lanczos with full
// reorthogonalization. Stops when the Ritz residual |beta_k s_k| drops below
// tol * max(1, |theta|). Deterministic given `seed` (start vector).
template <class Matrix>
Eigenpair<typename Matrix::Scalar> lanczos_extreme(const Matrix& m, Extreme which, std::uint64_t seed,
                                                   double tol = 1e-11, int max_iter = 400) {
  using Scalar = typename Matrix::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n) throw DomainError("lanczos: matrix must be square and non-empty");

  Eigenpair<Scalar> out;
  if (n == 1) {
    out.value = std::real(m(0, 0));
    out.vector = Vec::Ones(1);
    return out;
  }
  const int kmax = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> q(n, kmax + 1);
  Eigen::VectorXd alpha(kmax), beta(kmax);

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<Scalar, double>)
      v(i) = normal(rng);
    else
      v(i) = Scalar(normal(rng), normal(rng));
  }
  q.col(0) = v / v.norm();

  Vec w(n);
  for (int k = 0; k < kmax; ++k) {
    w.noalias() = m * q.col(k);
    alpha(k) = std::real(q.col(k).dot(w));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const Vec coeff = q.leftCols(k + 1).adjoint() * w;
      w.noalias() -= q.leftCols(k + 1) * coeff;
    }
    beta(k) = w.norm();

    const int dim = k + 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Eigen::VectorXd diag = alpha.head(dim);
    Eigen::VectorXd sub = beta.head(std::max(0, dim - 1));
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (tri.info() != Eigen::Success) throw NumericError("lanczos: tridiagonal eigensolver failed", seed);
    const int pick = which == Extreme::largest ? dim - 1 : 0;
    const double theta = tri.eigenvalues()(pick);
    const double residual = std::abs(beta(k) * tri.eigenvectors()(dim - 1, pick));
    const bool exhausted = beta(k) <= 1e-14 * std::max(1.0, std::abs(theta));
    if (residual <= tol * std::max(1.0, std::abs(theta)) || exhausted || k + 1 == kmax) {
      if (!exhausted && k + 1 == kmax && residual > tol * std::max(1.0, std::abs(theta)) && kmax < n)
        throw NumericError("lanczos did not converge", seed);
      out.value = theta;
      out.vector = q.leftCols(dim) * tri.eigenvectors().col(pick).template cast<Scalar>();
      out.vector /= out.vector.norm();
      out.iterations = dim;
      return out;
    }
    q.col(k + 1) = w / beta(k);
  }
  throw NumericError("lanczos did not converge", seed);
}

// Hutchinson estimate of Tr (X - lambda v v^*)^k with `probes` Rademacher
// vectors; each probe costs ceil(k/2) products with the deflated matrix.
template <class Matrix, class Vec>
double deflated_power_trace(const Matrix& m, const Vec& v, double lambda, int k, int probes, std::uint64_t seed) {
  using Scalar = typename Matrix::Scalar;
  using V = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (k < 0 || probes < 1) throw DomainError("deflated_power_trace: need k >= 0 and probes >= 1");
  const Eigen::Index n = m.rows();
  if (k == 0) return static_cast<double>(n - 1);
  Rng rng = make_rng(seed);
  auto apply = [&](const V& x) -> V {
    V y = m * x;
    y -= (lambda * v.dot(x)) * v;
    return y;
  };
  double total = 0.0;
  for (int p = 0; p < probes; ++p) {
    V z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = (rng() >> 63) ? Scalar(1) : Scalar(-1);
    V lo = z;
    for (int s = 0; s < k / 2; ++s) lo = apply(lo);
    if (k % 2 == 0) {
      total += lo.squaredNorm();
    } else {
      const V hi = apply(lo);
      total += std::real(lo.dot(hi));
    }
  }
  return total / probes;
}

}  // namespace bbp
