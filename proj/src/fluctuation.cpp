#include "bbp/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bbp/errors.hpp"
#include "bbp/linalg.hpp"
#include "bbp/parallel.hpp"
#include "bbp/rng.hpp"

namespace bbp {

using cd = std::complex<double>;

LimitingMatrixSample sample_Z(const LimitLawParams& params, const EntryLaw& law, std::uint64_t seed) {
  const int r = params.r;
  const int beta = params.beta;
  if (r < 1 || params.g.rows() != r || params.sigma_tilde.rows() != r || params.chi.size() != r ||
      params.tau.size() != r || params.q_rows.cols() != r)
    throw DomainError("limit parameters have inconsistent sizes");
  if (params.g.minCoeff() < -1e-12)
    throw DomainError("invalid limit parameters: g has a negative entry (" + std::to_string(params.g.minCoeff()) + ")");
  for (int i = 0; i < r; ++i)
    if (params.tau(i) < params.chi(i) - 1e-12)
      throw DomainError("negative variance for the diagonal block: tau < chi at index " + std::to_string(i));

  Rng rng = make_rng(seed);
  auto draw = law.sampler(rng);
  std::normal_distribution<double> normal;

  LimitingMatrixSample out;
  out.h_id = Eigen::MatrixXcd::Zero(r, r);
  out.h_gauss = Eigen::MatrixXcd::Zero(r, r);
  out.h_diag = Eigen::MatrixXcd::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      cd w;
      if (i == j)
        w = beta == 1 ? draw.real_diag() : draw.complex_diag();
      else
        w = beta == 1 ? cd(draw.real_offdiag()) : draw.complex_offdiag();
      out.h_id(i, j) = params.sigma_tilde(i, j) * w;
      out.h_id(j, i) = std::conj(out.h_id(i, j));
    }
  }
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      cd w;
      if (i == j)
        w = normal(rng) * std::sqrt(2.0 / beta);
      else if (beta == 1)
        w = normal(rng);
      else
        w = cd(normal(rng), normal(rng)) / std::numbers::sqrt2;
      out.h_gauss(i, j) = std::sqrt(std::max(0.0, params.g(i, j))) * w;
      out.h_gauss(j, i) = std::conj(out.h_gauss(i, j));
    }
  }
  for (int i = 0; i < r; ++i)
    out.h_diag(i, i) = normal(rng) * std::sqrt(std::max(0.0, params.tau(i) - params.chi(i)));

  const Eigen::MatrixXcd z = params.q_rows * (out.h_id + out.h_gauss + out.h_diag) * params.q_rows.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(z, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on Z", seed);
  out.z = es.eigenvalues().reverse();
  return out;
}

double scalar_z_variance(const LimitLawParams& params) {
  if (params.r != 1 || params.beta != 1) throw DomainError("scalar variance formula needs r = 1, beta = 1");
  const double st = params.sigma_tilde(0, 0);
  return 2.0 * st * st + 2.0 * params.g(0, 0) + (params.tau(0) - params.chi(0));
}

double scaled_outlier(double lambda, double a, double sigma_star) {
  if (!(a > 1.0)) throw DomainError("scaled outlier statistic needs a > 1");
  return a * a / ((a * a - 1.0) * sigma_star) * (lambda - a - 1.0 / a);
}

LimitLawParams limit_params_for(const Model& model, double tol) {
  const Deformation& d = model.deformation;
  if (d.r() == 0) throw DomainError("fluctuation law needs a deformation");
  const double a = d.eigenvalues()(0);
  if (!(a > 1.0)) throw DomainError("fluctuation law needs a supercritical top eigenvalue a > 1");
  int q = 0;
  while (q < d.r() && std::abs(d.eigenvalues()(q) - a) <= 1e-12 * std::max(1.0, a)) ++q;
  return compute_limit_params(model.profile, d.positions(), a, model.law, model.beta, d.u(), q, tol);
}

std::vector<FluctuationSample> collect_fluctuations(const Model& model, const TrialPlan& plan, int q_max) {
  const Deformation& d = model.deformation;
  if (q_max < 1 || q_max > d.r()) throw DomainError("q_max must lie in [1, r]");
  for (int j = 0; j < q_max; ++j)
    if (!(d.eigenvalues()(j) > 1.0)) throw DomainError("fluctuation statistics need a_j > 1");
  const double ss = model.profile.sigma_star();

  std::vector<FluctuationSample> out(static_cast<std::size_t>(plan.trials) * q_max);
  parallel_for(plan.trials, plan.threads, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(plan.seed, t);
    const SampledMatrix x = model.sample(seed);
    std::vector<double> top(q_max);
    if (q_max == 1) {
      top[0] = x.beta == 1 ? lanczos_extreme(x.real, Extreme::largest, seed).value
                           : lanczos_extreme(x.complex, Extreme::largest, seed).value;
    } else {
      const auto spectrum = hermitian_eigenvalues(x);
      std::copy_n(spectrum.begin(), q_max, top.begin());
    }
    for (int j = 0; j < q_max; ++j) {
      FluctuationSample& s = out[t * q_max + j];
      s.trial = static_cast<int>(t);
      s.seed = seed;
      s.j = j + 1;
      s.lambda = top[j];
      s.scaled = scaled_outlier(top[j], d.eigenvalues()(j), ss);
      if (!std::isfinite(s.scaled)) throw NumericError("non-finite fluctuation statistic", seed);
    }
  });
  return out;
}

std::vector<Eigen::VectorXd> sample_Z_many(const LimitLawParams& params, const EntryLaw& law, int draws,
                                           std::uint64_t seed, int threads) {
  std::vector<Eigen::VectorXd> out(draws);
  parallel_for(draws, threads, [&](std::size_t d) { out[d] = sample_Z(params, law, derive_seed(seed, d)).z; });
  return out;
}

KsResult compare_distributions(std::vector<double> empirical, std::vector<double> reference, double threshold) {
  if (empirical.size() < 200 || reference.size() < 200)
    throw DomainError("compare_distributions needs at least 200 points per sample");
  std::sort(empirical.begin(), empirical.end());
  std::sort(reference.begin(), reference.end());
  const double n1 = static_cast<double>(empirical.size()), n2 = static_cast<double>(reference.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < empirical.size() && j < reference.size()) {
    const double x = std::min(empirical[i], reference[j]);
    while (i < empirical.size() && empirical[i] == x) ++i;
    while (j < reference.size() && reference[j] == x) ++j;
    d = std::max(d, std::abs(i / n1 - j / n2));
  }
  KsResult out;
  out.ks = d;
  out.threshold = threshold;
  out.pass = d < threshold;
  return out;
}

double normalized_power_trace(const std::vector<double>& eigenvalues, double rho, int k) {
  const double log_rho = std::log(rho);
  double total = 0.0;
  for (double l : eigenvalues) {
    if (l == 0.0) {
      if (k == 0) total += 1.0;
      continue;
    }
    const double mag = std::exp(k * (std::log(std::abs(l)) - log_rho));
    total += (l < 0.0 && k % 2 == 1) ? -mag : mag;
  }
  return total;
}

LaplaceResult laplace_check(const Model& model, const TrialPlan& plan, const std::vector<double>& t_list,
                            int z_draws, TraceRoute route, int probes) {
  if (t_list.empty()) throw DomainError("laplace_check needs at least one t");
  const LimitLawParams params = limit_params_for(model);
  const double a = params.a;
  const double rho = a + 1.0 / a;
  const double ss = model.profile.sigma_star();

  LaplaceResult out;
  for (double t : t_list) {
    if (!(t > 0.0)) throw DomainError("t values must be positive");
    const int k = static_cast<int>(std::floor(t / ss));
    if (k < 1) throw DomainError("t / sigma* must be at least 1");
    out.k.push_back(k);
    out.c.push_back(t * (a * a - 1.0) / ((a * a + 1.0) * a));
  }
  const std::size_t s = t_list.size();

  out.lhs_values.resize(plan.trials);
  parallel_for(plan.trials, plan.threads, [&](std::size_t trial) {
    const std::uint64_t seed = derive_seed(plan.seed, trial);
    SampledMatrix x = model.sample(seed);
    double prod = 1.0;
    if (route == TraceRoute::exact) {
      const auto spectrum = hermitian_eigenvalues(x);
      for (std::size_t j = 0; j < s; ++j) prod *= normalized_power_trace(spectrum, rho, out.k[j]);
    } else {
      // Work with X / rho so powers stay O(1).
      auto run = [&](auto& m) {
        m /= rho;
        const auto top = lanczos_extreme(m, Extreme::largest, seed);
        for (std::size_t j = 0; j < s; ++j) {
          const double head = std::pow(top.value, out.k[j]);
          const double rest = deflated_power_trace(m, top.vector, top.value, out.k[j], probes, derive_seed(seed, j + 1));
          prod *= head + rest;
        }
      };
      if (x.beta == 1)
        run(x.real);
      else
        run(x.complex);
    }
    if (!std::isfinite(prod)) throw NumericError("non-finite trace product", seed);
    out.lhs_values[trial] = prod;
  });

  const auto zs = sample_Z_many(params, model.law, z_draws, derive_seed(plan.seed, 0x5a5a5a5aULL), plan.threads);
  out.rhs_values.resize(z_draws);
  for (int d = 0; d < z_draws; ++d) {
    double prod = 1.0;
    for (std::size_t j = 0; j < s; ++j) prod *= (out.c[j] * zs[d].array()).exp().sum();
    out.rhs_values[d] = prod;
  }

  RunningStats lhs, rhs;
  for (double v : out.lhs_values) lhs.add(v);
  for (double v : out.rhs_values) rhs.add(v);
  out.lhs = lhs.mean;
  out.lhs_stderr = lhs.stderr_mean();
  out.rhs = rhs.mean;
  out.rhs_stderr = rhs.stderr_mean();
  out.rel_err = std::abs(out.lhs - out.rhs) / std::abs(out.rhs);
  const double se = std::hypot(out.lhs_stderr, out.rhs_stderr);
  out.z_score = se > 0.0 ? std::abs(out.lhs - out.rhs) / se : (out.lhs == out.rhs ? 0.0 : INFINITY);
  return out;
}

}  // namespace bbp
