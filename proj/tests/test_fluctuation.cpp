#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bbp/errors.hpp"
#include "bbp/fluctuation.hpp"

using namespace bbp;

namespace {

LimitLawParams scalar_params(double st, double g, double tau, double chi) {
  LimitLawParams p;
  p.r = 1;
  p.beta = 1;
  p.a = 2.0;
  p.sigma_star = 0.1;
  p.g = Eigen::MatrixXd::Constant(1, 1, g);
  p.sigma_tilde = Eigen::MatrixXd::Constant(1, 1, st);
  p.chi = Eigen::VectorXd::Constant(1, chi);
  p.tau = Eigen::VectorXd::Constant(1, tau);
  p.q_rows = Eigen::MatrixXcd::Identity(1, 1);
  return p;
}

}  // namespace

TEST_SUITE("fluctuation") {
  TEST_CASE("degenerate components give Z = 0") {
    const auto z = sample_Z(scalar_params(0.0, 0.0, 0.3, 0.3), EntryLaw(), 4);
    CHECK(z.z(0) == 0.0);
  }

  TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(sample_Z(scalar_params(1.0, -0.01, 0.3, 0.3), EntryLaw(), 1), DomainError);
    CHECK_THROWS_AS(sample_Z(scalar_params(1.0, 0.0, 0.2, 0.3), EntryLaw(), 1), DomainError);
  }

  TEST_CASE("scalar variance for the uniform profile tends to 8/3") {
    const std::vector<int> pos = {0};
    const Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
    for (int n : {400, 1600, 6400}) {
      const auto lp = compute_limit_params(build_uniform_profile(n), pos, 2.0, EntryLaw(), 1, u, 1);
      CHECK(scalar_z_variance(lp) == doctest::Approx(8.0 / 3.0 + 9.0 / (4.0 * n)).epsilon(1e-3));
    }
    // Uniform entries: E X^4 = 9/5 changes tau - chi to (9/5 - 1)/a^2 in the limit.
    const auto lp = compute_limit_params(build_uniform_profile(6400), pos, 2.0, EntryLaw(LawKind::uniform_symmetric), 1, u, 1);
    CHECK(scalar_z_variance(lp) == doctest::Approx(71.0 / 30.0).epsilon(2e-3));
  }

  TEST_CASE("Z draws reproduce the scalar variance") {
    const std::vector<int> pos = {0};
    const auto lp = compute_limit_params(build_uniform_profile(1600), pos, 2.0, EntryLaw(), 1, Eigen::MatrixXcd::Identity(1, 1), 1);
    const auto draws = sample_Z_many(lp, EntryLaw(), 40000, 77, 1);
    RunningStats s;
    for (const auto& d : draws) s.add(d(0));
    const double v = scalar_z_variance(lp);
    CHECK(std::abs(s.mean) < 4 * s.stderr_mean());
    CHECK(std::abs(s.variance() - v) < 4 * v * std::sqrt(2.0 / 40000) * 1.5);
  }

  TEST_CASE("complex Z components are Hermitian") {
    Eigen::MatrixXcd at(2, 2);
    at << 2.0, 0.0, 0.0, 2.0;
    const Model model{build_uniform_profile(50), EntryLaw(), 2, Deformation({0, 1}, at, 2)};
    const auto lp = limit_params_for(model);
    CHECK(lp.q_rows.rows() == 2);
    const auto z = sample_Z(lp, model.law, 9);
    for (const auto* h : {&z.h_id, &z.h_gauss, &z.h_diag}) CHECK((*h - h->adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(z.z.size() == 2);
    CHECK(z.z(0) >= z.z(1));
  }

  TEST_CASE("scaled outlier statistic") {
    CHECK(scaled_outlier(2.5, 2.0, 0.1) == 0.0);
    CHECK(scaled_outlier(2.53, 2.0, 0.1) == doctest::Approx(0.4));
    CHECK(scaled_outlier(2.0, 2.0, 0.1) == doctest::Approx(-2.0 / (3.0 * 0.1)));
    CHECK_THROWS_AS(scaled_outlier(2.0, 1.0, 0.1), DomainError);
  }

  TEST_CASE("two-sample KS statistic") {
    std::vector<double> a(300), b(300);
    for (int i = 0; i < 300; ++i) {
      a[i] = i;
      b[i] = i + 1000;
    }
    CHECK(compare_distributions(a, a, 0.1).ks == 0.0);
    CHECK(compare_distributions(a, b, 0.1).ks == 1.0);
    Rng rng = make_rng(2024);
    std::normal_distribution<double> nd;
    std::vector<double> x(2000), y(2000);
    for (auto& v : x) v = nd(rng);
    for (auto& v : y) v = nd(rng);
    const auto r = compare_distributions(x, y, 0.06);
    CHECK(r.ks < 0.06);
    CHECK(r.pass);
    CHECK_THROWS_AS(compare_distributions(std::vector<double>(10, 0.0), y, 0.1), DomainError);
  }

  TEST_CASE("normalized power trace") {
    const std::vector<double> ev = {2.5, 1.0, -1.0, 0.0};
    CHECK(normalized_power_trace(ev, 2.5, 4) == doctest::Approx(1.0 + 2.0 * std::pow(0.4, 4)));
    CHECK(normalized_power_trace(ev, 2.5, 3) == doctest::Approx(1.0));
    CHECK(normalized_power_trace({10.0, -10.0}, 1.0, 300) == doctest::Approx(2e300).epsilon(1e-12));
    CHECK(normalized_power_trace({1e4, 1.0}, 1e4, 2000) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("fluctuation samples match dense eigenvalues") {
    const Model model{build_uniform_profile(200), EntryLaw(), 1, Deformation::rank_one(0, 2.0)};
    const TrialPlan plan{4, 3, 1};
    const auto s = collect_fluctuations(model, plan, 1);
    REQUIRE(s.size() == 4);
    for (const auto& f : s) {
      const auto ev = hermitian_eigenvalues(model.sample(f.seed));
      CHECK(f.lambda == doctest::Approx(ev.front()).epsilon(1e-10));
      CHECK(f.scaled == doctest::Approx(scaled_outlier(ev.front(), 2.0, model.profile.sigma_star())).epsilon(1e-8));
    }
  }

  TEST_CASE("Laplace check: deflated and exact routes agree per trial") {
    // At k = 40 the bulk remainder estimated by Hutchinson probes is tiny.
    const Model model{build_uniform_profile(400), EntryLaw(), 1, Deformation::rank_one(0, 2.0)};
    const TrialPlan plan{6, 5, 1};
    const auto ex = laplace_check(model, plan, {2.0}, 500, TraceRoute::exact);
    const auto de = laplace_check(model, plan, {2.0}, 500, TraceRoute::deflated, 4);
    REQUIRE(ex.lhs_values.size() == de.lhs_values.size());
    for (std::size_t i = 0; i < ex.lhs_values.size(); ++i)
      CHECK(de.lhs_values[i] == doctest::Approx(ex.lhs_values[i]).epsilon(1e-3));
    CHECK(ex.rhs == de.rhs);
    CHECK(ex.k == std::vector<int>{40});
  }

  TEST_CASE("Laplace check at small t is close to 1") {
    const Model model{build_uniform_profile(400), EntryLaw(), 1, Deformation::rank_one(0, 2.0)};
    const auto r = laplace_check(model, {30, 8, 1}, {0.05}, 2000, TraceRoute::exact);
    CHECK(r.k == std::vector<int>{1});
    CHECK(std::abs(r.rhs - 1.0) < 0.05);
  }
}
