#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bbp/ensemble.hpp"

namespace bbp {

// Almost-sure limit of the eigenvalue attached to a deformation eigenvalue a:
// a + 1/a beyond the transition (|a| > 1), the spectral edge +-2 otherwise.
double outlier_limit(double a);

// Limit of q^* X^m q for q the deformation eigenvector with eigenvalue a:
// semicircle-type density on [-2, 2] plus an atom at a + 1/a when |a| >= 1.
struct SpectralMeasureTarget {
  double a = 0.0;

  explicit SpectralMeasureTarget(double a_) : a(a_) {}
  double density(double x) const;
  double atom_location() const { return a + 1.0 / a; }
  double atom_mass() const { return std::abs(a) >= 1.0 ? 1.0 - 1.0 / (a * a) : 0.0; }
};

// Integral of x^m against the continuous part only, by adaptive Gauss-Kronrod
// after x = 2 cos(theta) (which removes the square-root endpoints).
double mu_a_continuous_moment(double a, int m);
// Full moment (continuous part plus atom); absolute error <= 1e-9.
double mu_a_moment(double a, int m);

// (q^* X^m q) for m = 0..m_max by repeated matrix-vector products.
std::vector<double> spectral_measure_moments(const SampledMatrix& x, const Eigen::VectorXcd& q, int m_max);
// Same moments from a full eigendecomposition: sum_i lambda_i^m |<v_i, q>|^2.
std::vector<double> spectral_measure_moments_eigen(const SampledMatrix& x, const Eigen::VectorXcd& q,
                                                   int m_max);

struct BbpRow {
  std::string side;  // "top", "bottom", or "norm" (operator norm, j = 0)
  int j = 0;         // 1-based rank from that side
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_mean = 0.0;
  double prediction = 0.0;
  double abs_error = 0.0;
};

struct BbpResult {
  std::vector<BbpRow> rows;
  // values[trial][c] with columns ordered as rows (top..., bottom..., norm).
  std::vector<std::vector<double>> values;
  std::vector<std::string> warnings;
};

// Predicted limit of the j-th largest (bottom = false) or j-th smallest eigenvalue.
double bbp_prediction(const Deformation& deformation, int j, bool bottom);

// Mean of the j_max largest and j_max smallest eigenvalues over trials, plus
// the operator norm max(lambda_1, -lambda_N) as a final row.
BbpResult run_bbp_experiment(const Model& model, const TrialPlan& plan, int j_max);

struct MomentRow {
  int m = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double target = 0.0;
  double abs_error = 0.0;
};

struct SpectralMeasureResult {
  double a = 0.0;
  std::vector<MomentRow> rows;
  double max_abs_error = 0.0;
  // max |error| / max(1, |target|)
  double max_scaled_error = 0.0;
  std::vector<std::vector<double>> values;  // values[trial][m]
};

// Empirical q^* X^m q averaged over trials, q the eigenvector of A_N for
// deformation eigenvalue a_index (0-based), compared with mu_a_moment.
SpectralMeasureResult verify_spectral_measure(const Model& model, const TrialPlan& plan, int a_index, int m_max);

}  // namespace bbp
