#include "bbp/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bbp/errors.hpp"
#include "bbp/rng.hpp"

namespace bbp {

namespace {

void check_beta(int beta) {
  if (beta != 1 && beta != 2) throw DomainError("beta must be 1 or 2");
}

}  // namespace

Deformation::Deformation(std::vector<int> positions, Eigen::MatrixXcd a_tilde, int beta)
    : positions_(std::move(positions)), a_tilde_(std::move(a_tilde)), beta_(beta) {
  check_beta(beta);
  const int r = static_cast<int>(positions_.size());
  if (a_tilde_.rows() != r || a_tilde_.cols() != r) throw DomainError("a_tilde must be r x r");
  std::set<int> seen;
  for (int m : positions_) {
    if (m < 0) throw DomainError("deformation positions must be non-negative");
    if (!seen.insert(m).second) throw DomainError("deformation positions must be distinct");
  }
  if (r == 0) {
    eigenvalues_.resize(0);
    u_.resize(0, 0);
    return;
  }
  const double scale = std::max(1.0, a_tilde_.cwiseAbs().maxCoeff());
  if ((a_tilde_ - a_tilde_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("a_tilde must be Hermitian");
  if (beta == 1 && a_tilde_.imag().cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("a_tilde must be real symmetric for beta = 1");
  a_tilde_ = 0.5 * (a_tilde_ + a_tilde_.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a_tilde_);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of a_tilde failed");
  eigenvalues_.resize(r);
  u_.resize(r, r);
  for (int i = 0; i < r; ++i) {
    const int src = r - 1 - i;
    eigenvalues_(i) = es.eigenvalues()(src);
    Eigen::VectorXcd v = es.eigenvectors().col(src);
    // Fix the phase so the largest component is real positive.
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    v *= std::conj(v(k)) / std::abs(v(k));
    if (beta == 1) v = v.real().cast<std::complex<double>>();
    u_.row(i) = v.adjoint();
  }
  const Eigen::MatrixXcd rebuilt = u_.adjoint() * eigenvalues_.cast<std::complex<double>>().asDiagonal() * u_;
  if ((rebuilt - a_tilde_).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NumericError("a_tilde eigendecomposition residual too large");
}

Deformation Deformation::rank_one(int position, double a, int beta) {
  Eigen::MatrixXcd m(1, 1);
  m(0, 0) = a;
  return Deformation({position}, m, beta);
}

Eigen::MatrixXcd Deformation::embedded(int n) const {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < r(); ++i) {
    if (positions_[i] >= n) throw DomainError("deformation position exceeds matrix size");
    for (int j = 0; j < r(); ++j) out(positions_[i], positions_[j]) = a_tilde_(i, j);
  }
  return out;
}

Eigen::VectorXcd Deformation::embedded_eigenvector(int i, int n) const {
  if (i < 0 || i >= r()) throw std::out_of_range("deformation eigenvector index out of range");
  Eigen::VectorXcd q = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < r(); ++k) {
    if (positions_[k] >= n) throw DomainError("deformation position exceeds matrix size");
    q(positions_[k]) = std::conj(u_(i, k));
  }
  return q;
}

double Deformation::operator_norm() const {
  return r() == 0 ? 0.0 : eigenvalues_.cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd SampledMatrix::as_complex() const {
  return beta == 1 ? Eigen::MatrixXcd(real.cast<std::complex<double>>()) : complex;
}

SampledMatrix sample_wigner(int n, const EntryLaw& law, int beta, std::uint64_t seed) {
  check_beta(beta);
  if (n < 1) throw DomainError("matrix size must be positive");
  Rng rng = make_rng(seed);
  auto draw = law.sampler(rng);
  SampledMatrix w;
  w.beta = beta;
  w.seed = seed;
  if (beta == 1) {
    w.real.resize(n, n);
    for (int i = 0; i < n; ++i) {
      w.real(i, i) = draw.real_diag();
      for (int j = i + 1; j < n; ++j) {
        const double x = draw.real_offdiag();
        w.real(i, j) = x;
        w.real(j, i) = x;
      }
    }
  } else {
    w.complex.resize(n, n);
    for (int i = 0; i < n; ++i) {
      w.complex(i, i) = draw.complex_diag();
      for (int j = i + 1; j < n; ++j) {
        const std::complex<double> z = draw.complex_offdiag();
        w.complex(i, j) = z;
        w.complex(j, i) = std::conj(z);
      }
    }
  }
  return w;
}

SampledMatrix zero_wigner(int n, int beta) {
  check_beta(beta);
  SampledMatrix w;
  w.beta = beta;
  if (beta == 1)
    w.real = Eigen::MatrixXd::Zero(n, n);
  else
    w.complex = Eigen::MatrixXcd::Zero(n, n);
  return w;
}

SampledMatrix assemble_deformed(const VarianceProfile& profile, const SampledMatrix& wigner,
                                const Deformation& deformation) {
  const int n = wigner.n();
  if (profile.n() != n) throw DomainError("profile and Wigner matrix sizes differ");
  if (deformation.r() > 0 && deformation.beta() != wigner.beta)
    throw DomainError("deformation and Wigner matrix have different symmetry classes");
  for (int m : deformation.positions())
    if (m >= n) throw DomainError("deformation position exceeds matrix size");

  SampledMatrix x;
  x.beta = wigner.beta;
  x.seed = wigner.seed;
  const auto& pos = deformation.positions();
  if (wigner.beta == 1) {
    x.real = profile.sigma().cwiseProduct(wigner.real);
    for (int i = 0; i < deformation.r(); ++i)
      for (int j = 0; j < deformation.r(); ++j) x.real(pos[i], pos[j]) += deformation.a_tilde()(i, j).real();
  } else {
    x.complex = profile.sigma().cast<std::complex<double>>().cwiseProduct(wigner.complex);
    for (int i = 0; i < deformation.r(); ++i)
      for (int j = 0; j < deformation.r(); ++j) x.complex(pos[i], pos[j]) += deformation.a_tilde()(i, j);
  }
  return x;
}

SampledMatrix sample_deformed(const VarianceProfile& profile, const EntryLaw& law, int beta,
                              const Deformation& deformation, std::uint64_t seed) {
  return assemble_deformed(profile, sample_wigner(profile.n(), law, beta, seed), deformation);
}

namespace {

template <class Matrix>
std::vector<double> eigenvalues_of(const Matrix& m, std::uint64_t seed, bool check_residual) {
  const auto options = check_residual ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, options);
  if (es.info() != Eigen::Success) throw NumericError("Hermitian eigensolver did not converge", seed);
  const auto& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  for (double v : out)
    if (!std::isfinite(v)) throw NumericError("non-finite eigenvalue", seed);
  if (check_residual && !out.empty()) {
    const double norm = std::max(std::abs(out.front()), std::abs(out.back()));
    for (Eigen::Index k : {Eigen::Index(0), ev.size() - 1}) {
      const auto v = es.eigenvectors().col(k);
      const double res = (m * v - ev(k) * v).norm();
      if (res > 1e-8 * std::max(norm, 1e-300))
        throw NumericError("eigenpair residual " + std::to_string(res) + " exceeds tolerance", seed);
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<double> hermitian_eigenvalues(const SampledMatrix& x, bool check_residual) {
  return x.beta == 1 ? eigenvalues_of(x.real, x.seed, check_residual)
                     : eigenvalues_of(x.complex, x.seed, check_residual);
}

std::vector<double> sample_spectrum(const VarianceProfile& profile, const EntryLaw& law, int beta,
                                    const Deformation& deformation, std::uint64_t seed,
                                    bool check_residual) {
  return hermitian_eigenvalues(sample_deformed(profile, law, beta, deformation, seed), check_residual);
}

double RunningStats::stddev() const { return std::sqrt(variance()); }

double RunningStats::stderr_mean() const { return count > 0 ? std::sqrt(variance() / count) : 0.0; }

}  // namespace bbp
