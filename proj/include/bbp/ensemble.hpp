#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bbp/entry_law.hpp"
#include "bbp/profile.hpp"

namespace bbp {

// Rank-r perturbation placed on rows/columns positions[0..r-1] (0-based).
// a_tilde = U^* diag(eigenvalues) U with eigenvalues sorted descending; row i
// of U is the conjugate of the eigenvector for eigenvalues[i].
class Deformation {
 public:
  Deformation() = default;  // r = 0
  Deformation(std::vector<int> positions, Eigen::MatrixXcd a_tilde, int beta);

  static Deformation none() { return {}; }
  // r = 1, a_tilde = (a) at `position`.
  static Deformation rank_one(int position, double a, int beta = 1);

  int r() const noexcept { return static_cast<int>(positions_.size()); }
  int beta() const noexcept { return beta_; }
  const std::vector<int>& positions() const noexcept { return positions_; }
  const Eigen::MatrixXcd& a_tilde() const noexcept { return a_tilde_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXcd& u() const noexcept { return u_; }

  // Dense N x N embedding A_N.
  Eigen::MatrixXcd embedded(int n) const;
  // Unit eigenvector of A_N for eigenvalues()[i], supported on positions.
  Eigen::VectorXcd embedded_eigenvector(int i, int n) const;
  double operator_norm() const;

 private:
  std::vector<int> positions_;
  Eigen::MatrixXcd a_tilde_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd u_;
  int beta_ = 1;
};

// Hermitian N x N matrix; `real` is used for beta = 1, `complex` for beta = 2.
struct SampledMatrix {
  int beta = 1;
  std::uint64_t seed = 0;
  Eigen::MatrixXd real;
  Eigen::MatrixXcd complex;

  int n() const noexcept { return static_cast<int>(beta == 1 ? real.rows() : complex.rows()); }
  // Matrix as complex regardless of beta (copies for beta = 1).
  Eigen::MatrixXcd as_complex() const;
};

// Wigner matrix W with entries drawn from `law` in upper-triangle row-major order.
SampledMatrix sample_wigner(int n, const EntryLaw& law, int beta, std::uint64_t seed);
// All-zero "noise" for deterministic checks.
SampledMatrix zero_wigner(int n, int beta);

// X = sigma∘W + A_N.
SampledMatrix assemble_deformed(const VarianceProfile& profile, const SampledMatrix& wigner,
                                const Deformation& deformation);

// X_N drawn from (profile, law, beta, deformation) under `seed`.
SampledMatrix sample_deformed(const VarianceProfile& profile, const EntryLaw& law, int beta,
                              const Deformation& deformation, std::uint64_t seed);

// Eigenvalues of a Hermitian matrix, descending. With check_residual the extreme
// eigenpairs are verified to satisfy |Xv - lambda v| <= 1e-8 |X|.
std::vector<double> hermitian_eigenvalues(const SampledMatrix& x, bool check_residual = false);

std::vector<double> sample_spectrum(const VarianceProfile& profile, const EntryLaw& law, int beta,
                                    const Deformation& deformation, std::uint64_t seed,
                                    bool check_residual = false);

// Everything needed to draw X_N.
struct Model {
  VarianceProfile profile;
  EntryLaw law;
  int beta = 1;
  Deformation deformation;

  SampledMatrix sample(std::uint64_t seed) const {
    return sample_deformed(profile, law, beta, deformation, seed);
  }
};

// Monte Carlo plan: trial i uses derive_seed(seed, i).
struct TrialPlan {
  int trials = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct RunningStats {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
  double stddev() const;
  double stderr_mean() const;
};

}  // namespace bbp
