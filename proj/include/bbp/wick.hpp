#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "bbp/combinatorics.hpp"
#include "bbp/ensemble.hpp"
#include "bbp/profile.hpp"

namespace bbp {

using BigInt = boost::multiprecision::cpp_int;

// E prod_j Tr X^{k_j} for X = sigma∘W + A with real Gaussian W (beta = 1),
// summed directly over index maps eta: corners -> [N] and subsets J of noise
// positions, using E W_ab^m = (m-1)!! (2^{m/2} on the diagonal). No graph
// machinery is involved. Throws BudgetError when N^k 2^k exceeds ~1e9.
double exact_moment_oracle(const VarianceProfile& profile, const Eigen::MatrixXd& a, const std::vector<int>& k_list);

// rho^{-k} sum over eta and edge lengths n_e >= 1 of
//   prod_j binom(k_j, (k_j - sum_{sides of face j} n_e)/2)
//   * prod_{interior e} (P^{n_e})_{eta(e-), eta(e+)} * prod_{boundary e} (A^{n_e})_{eta(e-), eta(e+)};
// a face without sides contributes the Catalan number C_{k_j/2}. With
// use_absolute, |A| replaces A entrywise.
double diagram_function(const Diagram& d, const VarianceProfile& profile, const Eigen::MatrixXd& a,
                        const std::vector<int>& k_list, double rho, bool use_absolute = false);

struct ExpansionResult {
  double sum = 0.0;          // sum over distinct contracted diagrams of W
  int diagrams = 0;
  long long gluings = 0;
};

// Sum of diagram_function over every diagram obtained by contracting a gluing of k_list.
ExpansionResult diagram_expansion(const VarianceProfile& profile, const Eigen::MatrixXd& a,
                                  const std::vector<int>& k_list, double rho);

struct CatalanCheck {
  BigInt lhs, rhs;
};

// sum over compositions u_1 + ... + u_n = (k - n)/2 of (2 u_1 + 1) prod C_{u_i}, and binom(k, (k - n)/2).
CatalanCheck catalan_tree_count(int k, int n);

BigInt catalan_number(int n);
BigInt binomial(int n, int k);

struct BinomCheck {
  double lhs = 0.0, rhs = 0.0;
};

// P(Binomial(k, a^2/(a^2+1)) = (k+n)/2) and rho_a^{-k} a^n binom(k, (k-n)/2).
BinomCheck binom_identity_check(int k, int n, double a);

using MomentTable = std::map<std::vector<int>, double>;

// T(k_1..k_s) = m(k_1..k_s) - sum over partitions with >= 2 blocks of prod T(blocks).
MomentTable connected_cumulants(const MomentTable& moments);
// m(k_1..k_s) = sum over all partitions of prod T(blocks).
MomentTable moments_from_cumulants(const MomentTable& cumulants);

// log D_{g,t,s}(xi, a, lambda) for
//   D = (2 xi s)^{2g+2t+2s-4} (2 lambda a^2/(a^2-1))^{3g+3t+4s-6} 2048^{g+t+2s} / (g+t)!.
double log_dominating_function(int g, int t, int s, double xi, double a, double lambda);
// Same value by direct multiplication in extended precision.
long double dominating_function_direct(int g, int t, int s, double xi, double a, double lambda);
inline double dominating_function(int g, int t, int s, double xi, double a, double lambda) {
  return std::exp(log_dominating_function(g, t, s, xi, a, lambda));
}

struct DominatingSum {
  int max_order = 0;               // largest g + t included
  double log_total = 0.0;          // log of the sum
  double last_tail_ratio = 0.0;    // (S_M - S_{M-1}) / S_M
  std::vector<double> log_partial; // log S_m for m = 1..max_order
};

// Partial sums over g >= 0, t >= 1 with g + t <= max_order, grouped by m = g + t.
DominatingSum dominating_partial_sums(int s, double xi, double a, double lambda, int max_order);
// Sums until the shell m = g + t contributes < rel_tol of the total (after its peak).
DominatingSum dominating_sum_adaptive(int s, double xi, double a, double lambda, double rel_tol = 1e-16,
                                      int max_order = 10000000);

struct MonteCarloMoment {
  double mean = 0.0;
  double stderr_mean = 0.0;
  long trials = 0;
};

// Empirical mean of prod_j Tr X^{k_j} over independent draws of the model.
MonteCarloMoment monte_carlo_trace_moment(const Model& model, const std::vector<int>& k_list, const TrialPlan& plan);

// 64-bit FNV-1a of a string; used to key cached oracle values.
std::uint64_t fnv1a(const std::string& text);

}  // namespace bbp
