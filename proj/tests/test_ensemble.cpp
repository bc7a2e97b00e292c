#include <doctest.h>

#include <cmath>
#include <complex>
#include <set>

#include "bbp/ensemble.hpp"
#include "bbp/errors.hpp"
#include "bbp/linalg.hpp"
#include "bbp/parallel.hpp"

using namespace bbp;

TEST_SUITE("ensemble") {
  TEST_CASE("entry laws are normalized and symmetric") {
    for (auto kind : {LawKind::gaussian, LawKind::rademacher, LawKind::uniform_symmetric}) {
      const EntryLaw law(kind);
      CHECK(law.offdiag_moment(1, 1) == doctest::Approx(1.0));
      CHECK(law.diag_moment(1, 1) == doctest::Approx(2.0));
      CHECK(law.offdiag_moment(1, 2) == doctest::Approx(1.0));
      CHECK(law.diag_moment(1, 2) == doctest::Approx(1.0));
      const double gamma = law.gamma(1);
      for (int p : {2, 3}) {
        double dfact = 1.0;
        for (int i = 2 * p - 1; i > 0; i -= 2) dfact *= i;
        CHECK(law.offdiag_moment(p, 1) <= std::pow(gamma, p - 1) * dfact + 1e-12);
        CHECK(law.diag_moment(p, 1) <= std::pow(gamma, p - 1) * dfact + 1e-12);
      }
      Rng rng = make_rng(42);
      auto s = law.sampler(rng);
      const int n = 1000000;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += s.base();
      CHECK(std::abs(sum / n) <= 4.0 / std::sqrt(n));
    }
    CHECK(EntryLaw(LawKind::uniform_symmetric).base_moment(2) == doctest::Approx(9.0 / 5.0));
    CHECK(EntryLaw(LawKind::gaussian).diag_moment(2, 1) == doctest::Approx(12.0));
    CHECK_THROWS(EntryLaw::from_name("cauchy"));
  }

  TEST_CASE("1 x 1 Gaussian Wigner matrix has variance 2") {
    const EntryLaw law(LawKind::gaussian);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
      const double x = sample_wigner(1, law, 1, derive_seed(9, t)).real(0, 0);
      sum += x;
      sum2 += x * x;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(var > 1.94);
    CHECK(var < 2.06);
  }

  TEST_CASE("Rademacher entries take the normalized values") {
    const auto w = sample_wigner(2, EntryLaw(LawKind::rademacher), 1, 5);
    CHECK(std::abs(w.real(0, 1)) == 1.0);
    CHECK(std::abs(w.real(0, 0)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(std::abs(w.real(1, 1)) == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("samples are Hermitian and reproducible") {
    for (int beta : {1, 2}) {
      const auto a = sample_wigner(7, EntryLaw(LawKind::uniform_symmetric), beta, 11);
      const auto b = sample_wigner(7, EntryLaw(LawKind::uniform_symmetric), beta, 11);
      const Eigen::MatrixXcd x = a.as_complex();
      CHECK((x - x.adjoint()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((x - b.as_complex()).cwiseAbs().maxCoeff() == 0.0);
      if (beta == 2) CHECK(x.imag().cwiseAbs().maxCoeff() > 0.0);
    }
  }

  TEST_CASE("deformations") {
    const auto d = Deformation::rank_one(0, 2.0);
    CHECK(d.r() == 1);
    const Eigen::MatrixXcd a = d.embedded(4);
    CHECK(a(0, 0) == std::complex<double>(2.0, 0.0));
    CHECK(a.cwiseAbs().sum() == doctest::Approx(2.0));
    CHECK(d.operator_norm() == doctest::Approx(2.0));

    Eigen::MatrixXcd at(2, 2);
    at << 1.0, 2.0, 2.0, -1.0;
    const Deformation two({1, 3}, at, 1);
    CHECK(two.eigenvalues()(0) == doctest::Approx(std::sqrt(5.0)));
    CHECK(two.eigenvalues()(1) == doctest::Approx(-std::sqrt(5.0)));
    const Eigen::MatrixXcd emb = two.embedded(5);
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXcd v = two.embedded_eigenvector(i, 5);
      CHECK(v.norm() == doctest::Approx(1.0));
      CHECK((emb * v - two.eigenvalues()(i) * v).norm() < 1e-10);
    }
    Eigen::MatrixXcd bad(2, 2);
    bad << 1.0, 2.0, 3.0, 1.0;
    CHECK_THROWS_AS(Deformation({0, 1}, bad, 1), DomainError);
    CHECK_THROWS_AS(Deformation({0, 0}, at, 1), DomainError);
  }

  TEST_CASE("assembly with zero noise gives A exactly") {
    const auto profile = build_uniform_profile(5);
    const auto x = assemble_deformed(profile, zero_wigner(5, 1), Deformation::rank_one(0, 2.0));
    const auto ev = hermitian_eigenvalues(x, true);
    CHECK(ev.front() == doctest::Approx(2.0));
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(std::abs(ev[i]) < 1e-12);

    const auto none = assemble_deformed(profile, sample_wigner(5, EntryLaw(), 1, 3), Deformation::none());
    const auto w = sample_wigner(5, EntryLaw(), 1, 3);
    CHECK((none.real - profile.sigma().cwiseProduct(w.real)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("uniform N = 2 entries by hand") {
    const auto profile = build_uniform_profile(2);
    const auto w = sample_wigner(2, EntryLaw(), 1, 17);
    const auto x = assemble_deformed(profile, w, Deformation::rank_one(1, 3.0));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(x.real(0, 0) == doctest::Approx(s * w.real(0, 0)));
    CHECK(x.real(0, 1) == doctest::Approx(s * w.real(0, 1)));
    CHECK(x.real(1, 1) == doctest::Approx(s * w.real(1, 1) + 3.0));
  }

  TEST_CASE("eigenvalues: trivial size, ordering and trace") {
    SampledMatrix one;
    one.real = Eigen::MatrixXd::Constant(1, 1, -0.7);
    CHECK(hermitian_eigenvalues(one) == std::vector<double>{-0.7});
    for (int beta : {1, 2}) {
      const auto x = sample_deformed(build_uniform_profile(60), EntryLaw(), beta, Deformation::rank_one(3, 1.7, beta), 8);
      const auto ev = hermitian_eigenvalues(x, true);
      CHECK(std::is_sorted(ev.rbegin(), ev.rend()));
      double sum = 0.0;
      for (double v : ev) sum += v;
      const Eigen::MatrixXcd c = x.as_complex();
      CHECK(std::abs(sum - c.trace().real()) <= 1e-8 * 60 * c.norm());
    }
  }

  TEST_CASE("Lanczos matches the dense top eigenvalue") {
    const auto x = sample_deformed(build_uniform_profile(300), EntryLaw(), 1, Deformation::rank_one(0, 2.0), 21);
    const auto ev = hermitian_eigenvalues(x);
    const auto top = lanczos_extreme(x.real, Extreme::largest, 4);
    const auto bottom = lanczos_extreme(x.real, Extreme::smallest, 4);
    CHECK(top.value == doctest::Approx(ev.front()).epsilon(1e-10));
    CHECK(bottom.value == doctest::Approx(ev.back()).epsilon(1e-10));
    CHECK((x.real * top.vector - top.value * top.vector).norm() < 1e-8);
  }

  TEST_CASE("parallel_for is deterministic and propagates the lowest-index error") {
    std::vector<double> a(100), b(100);
    parallel_for(100, 1, [&](std::size_t i) { a[i] = std::sin(double(i)); });
    parallel_for(100, 4, [&](std::size_t i) { b[i] = std::sin(double(i)); });
    CHECK(a == b);
    try {
      parallel_for(50, 3, [&](std::size_t i) {
        if (i == 7 || i == 30) throw NumericError("boom " + std::to_string(i), i);
      });
      FAIL("expected an exception");
    } catch (const NumericError& e) {
      CHECK(e.seed() == 7);
    }
  }

  TEST_CASE("derived seeds are distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 10; ++m)
      for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(m, i));
    CHECK(seen.size() == 10000);
  }
}
