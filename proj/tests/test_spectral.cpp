#include <doctest.h>

#include <cmath>
#include <vector>

#include "bbp/errors.hpp"
#include "bbp/spectral.hpp"

using namespace bbp;

namespace {

// Moments of the spike spectral measure from the first-passage recursion
// m_k = a m_{k-1} + sum_j C_j m_{k-2j-2}: a walk either uses the spike loop
// or makes an excursion into the semicircle bulk and returns.
std::vector<double> recurrence_moments(double a, int m_max) {
  std::vector<double> catalan(m_max + 1, 0.0), m(m_max + 1, 0.0);
  catalan[0] = 1.0;
  for (int n = 1; n <= m_max; ++n)
    for (int i = 0; i < n; ++i) catalan[n] += catalan[i] * catalan[n - 1 - i];
  m[0] = 1.0;
  for (int k = 1; k <= m_max; ++k) {
    m[k] = a * m[k - 1];
    for (int j = 0; 2 * j + 2 <= k; ++j) m[k] += catalan[j] * m[k - 2 * j - 2];
  }
  return m;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("outlier limit") {
    CHECK(outlier_limit(2.0) == doctest::Approx(2.5));
    CHECK(outlier_limit(1.0) == doctest::Approx(2.0));
    CHECK(outlier_limit(0.5) == doctest::Approx(2.0));
    CHECK(outlier_limit(-3.0) == doctest::Approx(-10.0 / 3.0));
    CHECK(outlier_limit(-0.2) == doctest::Approx(-2.0));
  }

  TEST_CASE("target measure: quadrature against the moment recursion") {
    for (double a : {0.0, 0.5, 1.0, 1.0001, 1.5, 2.0, 5.0, -2.0}) {
      const auto ref = recurrence_moments(a, 20);
      for (int m = 0; m <= 20; ++m) {
        const double got = mu_a_moment(a, m);
        CHECK(std::abs(got - ref[m]) <= 1e-9 * std::max(1.0, std::abs(ref[m])));
      }
    }
    CHECK(mu_a_moment(0.0, 2) == doctest::Approx(1.0));
    CHECK(mu_a_moment(0.0, 4) == doctest::Approx(2.0));
    CHECK(mu_a_moment(2.0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    const SpectralMeasureTarget t(2.0);
    CHECK(t.atom_mass() == doctest::Approx(0.75));
    CHECK(t.atom_location() == doctest::Approx(2.5));
    CHECK(mu_a_continuous_moment(2.0, 0) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(SpectralMeasureTarget(0.7).atom_mass() == 0.0);
  }

  TEST_CASE("empirical moments") {
    const int n = 6;
    const auto x = assemble_deformed(build_uniform_profile(n), zero_wigner(n, 1), Deformation::rank_one(0, 2.0));
    const Eigen::VectorXcd q = Deformation::rank_one(0, 2.0).embedded_eigenvector(0, n);
    const auto m = spectral_measure_moments(x, q, 6);
    for (int k = 0; k <= 6; ++k) CHECK(m[k] == doctest::Approx(std::pow(2.0, k)));

    const auto y = sample_deformed(build_uniform_profile(80), EntryLaw(), 2, Deformation::rank_one(4, 1.3, 2), 3);
    const Eigen::VectorXcd q2 = Deformation::rank_one(4, 1.3, 2).embedded_eigenvector(0, 80);
    const auto a = spectral_measure_moments(y, q2, 8);
    const auto b = spectral_measure_moments_eigen(y, q2, 8);
    for (int k = 0; k <= 8; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-9 * std::max(1.0, std::abs(a[k])));
    CHECK(a[0] == doctest::Approx(1.0));
  }

  TEST_CASE("second moment of a pure Wigner spectral measure is about 1") {
    const int n = 200, trials = 200;
    const auto profile = build_band_profile(n, 1, 10.0, BandKernel::flat(1, 1.0));
    Eigen::VectorXcd q = Eigen::VectorXcd::Zero(n);
    q(0) = q(1) = std::sqrt(0.5);
    RunningStats m2, m4;
    for (int t = 0; t < trials; ++t) {
      const auto x = sample_deformed(profile, EntryLaw(), 1, Deformation::none(), derive_seed(12, t));
      const auto m = spectral_measure_moments(x, q, 4);
      m2.add(m[2]);
      m4.add(m[4]);
    }
    CHECK(std::abs(m2.mean - 1.0) < 4 * m2.stderr_mean() + 0.02);
    CHECK(std::abs(m4.mean - 2.0) < 4 * m4.stderr_mean() + 0.15);
  }

  TEST_CASE("BBP experiment at small size") {
    const Model model{build_uniform_profile(300), EntryLaw(), 1, Deformation::rank_one(0, 2.0)};
    const auto res = run_bbp_experiment(model, {30, 2, 1}, 1);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[0].side == "top");
    CHECK(res.rows[0].prediction == doctest::Approx(2.5));
    CHECK(std::abs(res.rows[0].mean - 2.5) < 0.1);
    CHECK(res.rows[1].side == "bottom");
    CHECK(res.rows[1].prediction == doctest::Approx(-2.0));
    CHECK(res.rows[2].side == "norm");
    CHECK(res.rows[2].prediction == doctest::Approx(2.5));
    CHECK(res.values.size() == 30);
    CHECK_THROWS_AS(run_bbp_experiment(model, {10, 2, 1}, 1), DomainError);
  }

  TEST_CASE("spectral measure verification returns m = 0 exactly") {
    const Model model{build_uniform_profile(200), EntryLaw(), 1, Deformation::rank_one(0, 2.0)};
    const auto res = verify_spectral_measure(model, {5, 1, 1}, 0, 4);
    CHECK(res.rows[0].mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.rows[0].target == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.a == 2.0);
  }
}
