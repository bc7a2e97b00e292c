#include <doctest.h>

#include <cmath>
#include <vector>

#include "bbp/errors.hpp"
#include "bbp/profile.hpp"

using namespace bbp;

namespace {

void require_stochastic(const VarianceProfile& p) {
  const Eigen::MatrixXd t = p.transition();
  for (int i = 0; i < p.n(); ++i) CHECK(t.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((p.sigma() - p.sigma().transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.sigma().minCoeff() >= 0.0);
}

}  // namespace

TEST_SUITE("profile") {
  TEST_CASE("band profile on a small circle spreads mass over the neighbourhood") {
    const auto p = build_band_profile(4, 1, 2.0, BandKernel::flat(1, 1.0));
    require_stochastic(p);
    // |i - j|/2 <= 1 covers the whole circle Z/4 (with wrap-around images).
    for (int i = 0; i < 4; ++i) CHECK(p.transition().row(i).minCoeff() > 0.0);
  }

  TEST_CASE("band profile with a Gaussian kernel has sigma*^2 close to |f|_inf / b") {
    const auto p = build_band_profile(8, 1, 2.0, BandKernel::gaussian(1));
    require_stochastic(p);
    const double ratio = p.sigma_star() * p.sigma_star() / (BandKernel::gaussian(1).sup_norm() / 2.0);
    CHECK(ratio > 0.5);
    CHECK(ratio < 1.5);
  }

  TEST_CASE("full-support flat kernel degenerates to the uniform profile") {
    const auto p = build_band_profile(3, 2, 1.5, BandKernel::flat(2, 1.0));
    CHECK(p.n() == 9);
    CHECK((p.transition().array() - 1.0 / 9.0).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("flat kernel on {-1, 0, 1}") {
    const auto p = build_band_profile(8, 1, 1.0, BandKernel::flat(1, 1.0));
    CHECK(p.sigma_star() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(p.sigma(0, 7) == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(p.sigma(0, 2) == 0.0);
  }

  TEST_CASE("degenerate kernels are rejected") {
    auto zero = BandKernel::custom(1, [](std::span<const double>) { return 0.0; }, 1.0, 1.0);
    CHECK_THROWS_AS(build_band_profile(8, 1, 2.0, zero), DomainError);
  }

  TEST_CASE("d-regular profiles") {
    const auto full = build_dregular_profile(Eigen::MatrixXi::Ones(4, 4));
    CHECK((full.sigma().array() - 0.5).abs().maxCoeff() < 1e-15);

    const std::vector<int> offsets = {1, 5};
    const auto cycle = build_dregular_profile(circulant_adjacency(6, offsets));
    require_stochastic(cycle);
    CHECK(cycle.sigma(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(cycle.sigma(0, 2) == 0.0);
    CHECK(markov_power_entry(cycle, 2, 0, 0) == doctest::Approx(0.5));

    Eigen::MatrixXi irregular = Eigen::MatrixXi::Ones(4, 4);
    irregular(2, 3) = irregular(3, 2) = 0;
    irregular(0, 0) = 0;
    CHECK_THROWS_AS(build_dregular_profile(irregular), DomainError);

    const std::vector<int> nine = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(build_dregular_profile(circulant_adjacency(9, nine)).sigma_star() == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("chiral profiles") {
    const auto p = build_chiral_profile(Eigen::MatrixXd::Identity(2, 2));
    CHECK(p.n() == 4);
    require_stochastic(p);
    const Eigen::MatrixXd t = p.transition();
    for (int j = 0; j < 4; ++j) CHECK(t.col(j).sum() == doctest::Approx(1.0));

    const auto u = build_chiral_profile(Eigen::MatrixXd::Constant(2, 2, 1.0 / std::sqrt(2.0)));
    CHECK(u.sigma(0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(u.sigma(0, 1) == 0.0);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 0) = std::sqrt(0.9);
    CHECK_THROWS_AS(build_chiral_profile(bad), DomainError);
  }

  TEST_CASE("uniform profile") {
    const auto p = build_uniform_profile(16);
    CHECK(p.sigma_star() == doctest::Approx(0.25));
    for (int k : {1, 2, 5}) CHECK(markov_power_entry(p, k, 3, 11) == doctest::Approx(1.0 / 16.0));
    const auto m = markov_power(p, 3);
    CHECK((m.array() - 1.0 / 16.0).abs().maxCoeff() < 1e-14);
  }

  TEST_CASE("first Markov power is P itself") {
    const auto p = build_band_profile(8, 1, 2.0, BandKernel::gaussian(1));
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) CHECK(markov_power_entry(p, 1, i, j) == doctest::Approx(p.sigma(i, j) * p.sigma(i, j)));
  }

  TEST_CASE("invalid sigma matrices are rejected") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(2, 2, std::sqrt(0.5));
    s(0, 1) = 0.1;
    CHECK_THROWS_AS(VarianceProfile{s}, DomainError);
    CHECK_THROWS_AS(VarianceProfile(Eigen::MatrixXd::Constant(2, 2, 0.6)), DomainError);
  }

  TEST_CASE("limit parameters for the uniform profile, a = 2, Gaussian entries") {
    const int n = 400;
    const auto p = build_uniform_profile(n);
    const std::vector<int> pos = {0};
    const auto lp = compute_limit_params(p, pos, 2.0, EntryLaw(LawKind::gaussian), 1, Eigen::MatrixXcd::Identity(1, 1), 1);
    CHECK(lp.g(0, 0) == doctest::Approx(1.0 / 12.0).epsilon(1e-3));
    CHECK(lp.g(0, 0) >= 0.0);
    CHECK(lp.chi(0) == doctest::Approx(0.25).epsilon(1e-12));
    // The diagonal entry has E W^4 = 12, which adds 9/N to the limiting 3.
    CHECK(lp.tau(0) == doctest::Approx((3.0 + 9.0 / n) / 4.0).epsilon(1e-12));
    CHECK(lp.sigma_tilde(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs((lp.q_rows * lp.q_rows.adjoint())(0, 0) - 1.0) < 1e-10);
  }

  TEST_CASE("g series truncation is stable") {
    const auto p = build_band_profile(64, 1, 8.0, BandKernel::flat(1, 1.0));
    const std::vector<int> pos = {5};
    const Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
    const EntryLaw law(LawKind::rademacher);
    const auto auto_k = compute_limit_params(p, pos, 1.5, law, 1, u, 1);
    const auto longer = compute_limit_params_truncated(p, pos, 1.5, law, 1, u, 1, auto_k.truncation + 40);
    CHECK(std::abs(auto_k.g(0, 0) - longer.g(0, 0)) < 1e-10);
    CHECK_THROWS_AS(compute_limit_params(p, pos, 0.9, law, 1, u, 1), DomainError);
  }

  TEST_CASE("profile JSON round trip") {
    const auto band = build_band_profile(16, 1, 3.0, BandKernel::gaussian(1));
    const auto back = profile_from_json(profile_to_json(band));
    CHECK((back.sigma() - band.sigma()).cwiseAbs().maxCoeff() < 1e-15);
    const auto with_rows = profile_from_json(profile_to_json(band, true));
    CHECK((with_rows.sigma() - band.sigma()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(profile_from_json(nlohmann::json{{"kind", "uniform"}, {"n", 4}, {"extra", 1}}), SchemaError);
    CHECK_THROWS_AS(profile_from_json(nlohmann::json{{"kind", "band"}, {"params", nlohmann::json::object()}}), SchemaError);
  }
}
