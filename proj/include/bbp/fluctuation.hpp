#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bbp/ensemble.hpp"
#include "bbp/profile.hpp"

namespace bbp {

struct LimitingMatrixSample {
  Eigen::VectorXd z;  // q eigenvalues, descending
  Eigen::MatrixXcd h_id, h_gauss, h_diag;
};

// Draws Z = Q (H_ID + H_Gauss + H_Diag) Q^* for the given parameters:
//   H_ID    entries sigma~_ij W_ij with W a fresh r x r Wigner matrix of `law`
//   H_Gauss sqrt(g_ij) times a GOE/GUE matrix (off-diag E|.|^2 = 1, diag variance 2/beta)
//   H_Diag  diagonal, independent N(0, tau_i - chi_i)
// Throws DomainError if some g_ij < -1e-12 or tau_i < chi_i - 1e-12.
LimitingMatrixSample sample_Z(const LimitLawParams& params, const EntryLaw& law, std::uint64_t seed);

// Variance of the scalar Z (r = q = 1, beta = 1): 2 sigma~^2 + 2 g + (tau - chi).
double scalar_z_variance(const LimitLawParams& params);

// a^2 / ((a^2 - 1) sigma*) (lambda - a - 1/a).
double scaled_outlier(double lambda, double a, double sigma_star);

// Limit parameters matching a model: a = largest deformation eigenvalue, q = its multiplicity.
LimitLawParams limit_params_for(const Model& model, double tol = 1e-12);

struct FluctuationSample {
  int trial = 0;
  std::uint64_t seed = 0;
  int j = 0;  // 1-based
  double lambda = 0.0;
  double scaled = 0.0;
};

// Scaled statistics of the top q_max eigenvalues for every trial. When
// q_max = 1 the top eigenvalue is found by Lanczos instead of a dense solve.
std::vector<FluctuationSample> collect_fluctuations(const Model& model, const TrialPlan& plan, int q_max);

// Draws of the ordered eigenvalues of Z; result[d][j].
std::vector<Eigen::VectorXd> sample_Z_many(const LimitLawParams& params, const EntryLaw& law, int draws,
                                           std::uint64_t seed, int threads);

struct KsResult {
  double ks = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Two-sample Kolmogorov-Smirnov statistic; both samples need >= 200 points.
KsResult compare_distributions(std::vector<double> empirical, std::vector<double> reference, double threshold);

enum class TraceRoute { exact, deflated };

struct LaplaceResult {
  std::vector<int> k;
  std::vector<double> c;
  double lhs = 0.0, lhs_stderr = 0.0;
  double rhs = 0.0, rhs_stderr = 0.0;
  double rel_err = 0.0;
  double z_score = 0.0;  // |lhs - rhs| / sqrt(lhs_se^2 + rhs_se^2)
  std::vector<double> lhs_values;
  std::vector<double> rhs_values;
};

// rho_a^{-k_j} normalized power trace of X: sum_i (lambda_i / rho)^k, evaluated in log space.
double normalized_power_trace(const std::vector<double>& eigenvalues, double rho, int k);

// Monte Carlo estimates of
//   lhs = E prod_j rho^{-k_j} Tr X^{k_j},   k_j = floor(t_j / sigma*)
//   rhs = E prod_j Tr exp(c_j Z),           c_j = t_j (a^2 - 1) / ((a^2 + 1) a)
// The deflated route takes the top eigenpair by Lanczos and estimates the trace
// of the remainder with `probes` Hutchinson vectors; exact uses all eigenvalues.
LaplaceResult laplace_check(const Model& model, const TrialPlan& plan, const std::vector<double>& t_list,
                            int z_draws, TraceRoute route = TraceRoute::deflated, int probes = 2);

}  // namespace bbp
