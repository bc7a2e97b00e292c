#include "bbp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bbp/errors.hpp"
#include "bbp/parallel.hpp"
#include "bbp/rng.hpp"

namespace bbp {

double outlier_limit(double a) {
  if (a == 0.0) throw DomainError("outlier_limit: a = 0 is not a deformation");
  if (a > 1.0 || a < -1.0) return a + 1.0 / a;
  return a > 0.0 ? 2.0 : -2.0;
}

double SpectralMeasureTarget::density(double x) const {
  if (x <= -2.0 || x >= 2.0) return 0.0;
  const double den = a * a + 1.0 - a * x;
  return std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi * den);
}

double mu_a_continuous_moment(double a, int m) {
  if (m < 0) throw DomainError("moment order must be non-negative");
  if (!(std::abs(a) <= 100.0)) throw DomainError("mu_a_moment: |a| must not exceed 100");
  using boost::math::quadrature::gauss_kronrod;
  // x = 2 cos(theta): dx density becomes (2/pi) sin^2(theta) / |a - e^{i theta}|^2,
  // bounded even at |a| = 1.
  auto f = [a, m](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    // |a - e^{i theta}|^2 without cancellation: a - cos = (a - 1) + 2 sin^2(theta/2).
    const double h = std::sin(0.5 * theta);
    const double re = (a - 1.0) + 2.0 * h * h;
    const double den = re * re + s * s;
    if (den == 0.0) return 0.0;  // only at an endpoint when a = 1; measure zero
    return std::pow(2.0 * c, m) * 2.0 * s * s / (std::numbers::pi * den);
  };
  // The integrand varies on the scale ||a| - 1| near theta = 0 (a > 0) or pi (a < 0).
  std::vector<double> cuts{0.0};
  const double eps = std::abs(std::abs(a) - 1.0);
  if (a != 0.0 && eps > 0.0 && eps < 0.5) {
    for (double w = eps; w < std::numbers::pi / 2; w *= 4.0) cuts.push_back(a > 0 ? w : std::numbers::pi - w);
  }
  cuts.push_back(std::numbers::pi);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0, abs_total = 0.0, err_total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    total += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13, &err, &l1);
    err_total += err;
    abs_total += l1;
  }
  if (!std::isfinite(total) || err_total > 1e-8 * std::max(1.0, abs_total))
    throw NumericError("mu_a quadrature did not converge (a = " + std::to_string(a) + ", m = " + std::to_string(m) + ")");
  return total;
}

double mu_a_moment(double a, int m) {
  const SpectralMeasureTarget target(a);
  double value = mu_a_continuous_moment(a, m);
  if (target.atom_mass() > 0.0) value += target.atom_mass() * std::pow(target.atom_location(), m);
  return value;
}

namespace {

template <class Matrix, class Vec>
std::vector<double> moments_by_matvec(const Matrix& x, const Vec& q, int m_max) {
  std::vector<double> out(m_max + 1);
  Vec v = q;
  out[0] = std::real(q.dot(q));
  for (int m = 1; m <= m_max; ++m) {
    v = (x * v).eval();
    out[m] = std::real(q.dot(v));
  }
  return out;
}

void check_moment_inputs(const SampledMatrix& x, const Eigen::VectorXcd& q, int m_max) {
  if (q.size() != x.n()) throw DomainError("q has the wrong length");
  if (std::abs(q.norm() - 1.0) > 1e-10) throw DomainError("q must be a unit vector");
  if (m_max < 0 || m_max > 30) throw DomainError("m_max must lie in [0, 30]");
}

}  // namespace

std::vector<double> spectral_measure_moments(const SampledMatrix& x, const Eigen::VectorXcd& q, int m_max) {
  check_moment_inputs(x, q, m_max);
  if (x.beta == 1 && q.imag().cwiseAbs().maxCoeff() == 0.0) {
    const Eigen::VectorXd qr = q.real();
    return moments_by_matvec(x.real, qr, m_max);
  }
  return moments_by_matvec(x.as_complex(), q, m_max);
}

std::vector<double> spectral_measure_moments_eigen(const SampledMatrix& x, const Eigen::VectorXcd& q,
                                                   int m_max) {
  check_moment_inputs(x, q, m_max);
  const Eigen::MatrixXcd xc = x.as_complex();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(xc);
  if (es.info() != Eigen::Success) throw NumericError("Hermitian eigensolver did not converge", x.seed);
  const Eigen::VectorXd weight = (es.eigenvectors().adjoint() * q).cwiseAbs2();
  std::vector<double> out(m_max + 1);
  for (int m = 0; m <= m_max; ++m)
    out[m] = (es.eigenvalues().array().pow(m) * weight.array()).sum();
  return out;
}

double bbp_prediction(const Deformation& deformation, int j, bool bottom) {
  if (j < 1) throw DomainError("eigenvalue rank must be >= 1");
  const int r = deformation.r();
  if (j > r) return bottom ? -2.0 : 2.0;
  const double a = bottom ? deformation.eigenvalues()(r - j) : deformation.eigenvalues()(j - 1);
  if (!bottom) return a > 1.0 ? a + 1.0 / a : 2.0;
  return a < -1.0 ? a + 1.0 / a : -2.0;
}

BbpResult run_bbp_experiment(const Model& model, const TrialPlan& plan, int j_max) {
  if (plan.trials < 30) throw DomainError("run_bbp_experiment needs at least 30 trials");
  const int n = model.profile.n();
  if (j_max < 1 || 2 * j_max > n) throw DomainError("j_max must lie in [1, N/2]");

  BbpResult result;
  const double proxy = (model.deformation.r() + 1) * model.profile.sigma_star() * std::sqrt(std::log(n));
  if (proxy > 0.5)
    result.warnings.push_back("(r+1) sigma* sqrt(log N) = " + std::to_string(proxy) +
                              " > 0.5; finite-N corrections may be large");

  result.values.assign(plan.trials, std::vector<double>(2 * j_max + 1));
  parallel_for(plan.trials, plan.threads, [&](std::size_t t) {
    const auto spectrum = hermitian_eigenvalues(model.sample(derive_seed(plan.seed, t)), t == 0);
    for (int j = 0; j < j_max; ++j) {
      result.values[t][j] = spectrum[j];
      result.values[t][j_max + j] = spectrum[n - 1 - j];
    }
    result.values[t][2 * j_max] = std::max(spectrum.front(), -spectrum.back());
  });

  for (int c = 0; c <= 2 * j_max; ++c) {
    RunningStats stats;
    for (const auto& row : result.values) stats.add(row[c]);
    BbpRow row;
    if (c == 2 * j_max) {
      row.side = "norm";
      row.j = 0;
      row.prediction = std::max(bbp_prediction(model.deformation, 1, false), -bbp_prediction(model.deformation, 1, true));
    } else {
      const bool bottom = c >= j_max;
      row.side = bottom ? "bottom" : "top";
      row.j = (bottom ? c - j_max : c) + 1;
      row.prediction = bbp_prediction(model.deformation, row.j, bottom);
    }
    row.mean = stats.mean;
    row.stddev = stats.stddev();
    row.stderr_mean = stats.stderr_mean();
    row.abs_error = std::abs(row.mean - row.prediction);
    result.rows.push_back(row);
  }
  return result;
}

SpectralMeasureResult verify_spectral_measure(const Model& model, const TrialPlan& plan, int a_index, int m_max) {
  if (plan.trials < 1) throw DomainError("need at least one trial");
  const int n = model.profile.n();
  const Eigen::VectorXcd q = model.deformation.embedded_eigenvector(a_index, n);
  const double a = model.deformation.eigenvalues()(a_index);

  SpectralMeasureResult result;
  result.a = a;
  result.values.assign(plan.trials, {});
  parallel_for(plan.trials, plan.threads, [&](std::size_t t) {
    result.values[t] = spectral_measure_moments(model.sample(derive_seed(plan.seed, t)), q, m_max);
  });
  for (int m = 0; m <= m_max; ++m) {
    RunningStats stats;
    for (const auto& v : result.values) stats.add(v[m]);
    MomentRow row;
    row.m = m;
    row.mean = stats.mean;
    row.stderr_mean = stats.stderr_mean();
    row.target = mu_a_moment(a, m);
    row.abs_error = std::abs(row.mean - row.target);
    result.max_abs_error = std::max(result.max_abs_error, row.abs_error);
    result.max_scaled_error = std::max(result.max_scaled_error, row.abs_error / std::max(1.0, std::abs(row.target)));
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace bbp
