#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bbp/errors.hpp"
#include "bbp/wick.hpp"

using namespace bbp;
using json = nlohmann::json;

namespace {

Eigen::MatrixXd spike(int n, double a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m(0, 0) = a;
  return m;
}

VarianceProfile small_band() { return build_band_profile(4, 1, 1.0, BandKernel::flat(1, 1.0)); }

}  // namespace

TEST_SUITE("wick") {
  TEST_CASE("oracle: hand computations") {
    const auto u = build_uniform_profile(4);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
    CHECK(exact_moment_oracle(u, zero, {2}) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(exact_moment_oracle(u, zero, {3}) == 0.0);
    CHECK(exact_moment_oracle(u, spike(4, 2.0), {2}) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(exact_moment_oracle(u, spike(4, 2.0), {1}) == doctest::Approx(2.0).epsilon(1e-14));
    // Orthogonal-invariant normalization: E Tr H^4 = 2N + 5 + 5/N.
    CHECK(exact_moment_oracle(u, zero, {4}) == doctest::Approx(8.0 + 5.0 + 1.25).epsilon(1e-14));
    // E (Tr H)^2 = sum_i E H_ii^2 = 2.
    CHECK(exact_moment_oracle(u, zero, {1, 1}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(exact_moment_oracle(build_uniform_profile(9), Eigen::MatrixXd::Zero(9, 9), {2}), BudgetError);
    CHECK_THROWS_AS(exact_moment_oracle(u, Eigen::MatrixXd::Zero(3, 3), {2}), DomainError);
  }

  TEST_CASE("diagram function of the degenerate circle") {
    const Diagram circle = okounkov_contract(glue_polygons({2}, {}, {}));
    REQUIRE(circle.canonical() == "[b,]");
    const auto u = build_uniform_profile(4);
    CHECK(diagram_function(circle, u, spike(4, 2.0), {2}, 2.5) == doctest::Approx(0.64));
    CHECK(diagram_function(circle, u, spike(4, -2.0), {3}, 2.5, true) ==
          doctest::Approx((3.0 * 2.0 + 8.0) / std::pow(2.5, 3)));
    CHECK_THROWS_AS(diagram_function(circle, u, spike(4, 2.0), {2, 2}, 2.5), DomainError);
  }

  TEST_CASE("diagram function vanishes when the face is too short") {
    const Diagram d = okounkov_contract(glue_polygons({5}, {{1, 3}}, {Glue::opposite}));
    CHECK(d.graph().faces()[0].size() == 5);
    CHECK(diagram_function(d, build_uniform_profile(4), spike(4, 2.0), {3}, 2.5) == 0.0);
  }

  TEST_CASE("diagram expansion equals the oracle for small configurations") {
    for (const auto& profile : {build_uniform_profile(3), small_band()}) {
      const int n = profile.n();
      for (double a : {0.0, 2.0}) {
        const double rho = a > 1.0 ? a + 1.0 / a : 1.0;
        for (const std::vector<int>& k : std::vector<std::vector<int>>{{1}, {2}, {3}, {4}, {1, 1}, {2, 2}, {1, 3}}) {
          int total = 0;
          for (int x : k) total += x;
          const double oracle = exact_moment_oracle(profile, spike(n, a), k);
          const auto ex = diagram_expansion(profile, spike(n, a), k, rho);
          CHECK(std::abs(ex.sum - oracle * std::pow(rho, -total)) < 1e-9);
        }
      }
    }
  }

  TEST_CASE("golden oracle cache") {
    std::ifstream in(std::string(BBP_SOURCE_DIR) + "/tests/golden/oracle_cache.json");
    REQUIRE(in);
    const json golden = json::parse(in);
    int entries = 0;
    for (const auto& cfg : golden.at("configs")) {
      const VarianceProfile profile = profile_from_json(cfg.at("profile"));
      const int n = profile.n();
      Eigen::MatrixXd a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cfg.at("a")[i][j].get<double>();
      for (const auto& [key, value] : cfg.at("entries").items()) {
        const auto k = value.at("k_list").get<std::vector<int>>();
        const json key_doc = {{"profile", cfg.at("profile")}, {"a", cfg.at("a")}, {"k_list", k}};
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(key_doc.dump())));
        CHECK(key == hex);
        const double expected = value.at("oracle").get<double>();
        CHECK(std::abs(exact_moment_oracle(profile, a, k) - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
        ++entries;
      }
    }
    CHECK(entries == 84);
  }

  TEST_CASE("Monte Carlo agrees with the oracle") {
    const auto u = build_uniform_profile(4);
    const Model model{u, EntryLaw(), 1, Deformation::rank_one(0, 2.0)};
    const auto mc = monte_carlo_trace_moment(model, {4}, {50000, 3, 1});
    const double oracle = exact_moment_oracle(u, spike(4, 2.0), {4});
    CHECK(std::abs(mc.mean - oracle) < 4 * mc.stderr_mean);
    CHECK(mc.trials == 50000);
  }

  TEST_CASE("Catalan tree-count identity") {
    CHECK(catalan_tree_count(2, 2).lhs == 1);
    CHECK(catalan_tree_count(4, 2).lhs == 4);
    CHECK(catalan_tree_count(6, 2).lhs == 15);
    CHECK(catalan_tree_count(5, 2).lhs == 0);
    CHECK(catalan_tree_count(5, 2).rhs == 0);
    for (int k = 1; k <= 20; ++k)
      for (int n = 1; n <= k; ++n) {
        const auto c = catalan_tree_count(k, n);
        CHECK(c.lhs == c.rhs);
      }
    CHECK(catalan_number(10) == 16796);
    CHECK(binomial(60, 30) == BigInt("118264581564861424"));
  }

  TEST_CASE("binomial identity") {
    const auto b = binom_identity_check(2, 0, 2.0);
    CHECK(b.lhs == doctest::Approx(0.32));
    CHECK(b.rhs == doctest::Approx(0.32));
    const auto full = binom_identity_check(7, 7, 1.5);
    CHECK(full.lhs == doctest::Approx(std::pow(2.25 / 3.25, 7)));
    CHECK(binom_identity_check(2, 0, 1.0).lhs == doctest::Approx(0.5));
    for (double a : {1.0, 1.5, 2.0, 5.0})
      for (int k = 0; k <= 30; ++k)
        for (int n = k % 2; n <= k; n += 2) {
          const auto c = binom_identity_check(k, n, a);
          CHECK(std::abs(c.lhs - c.rhs) <= 1e-12);
        }
  }

  TEST_CASE("connected cumulants") {
    MomentTable m = {{{2}, 3.0}, {{4}, 5.0}, {{2, 4}, 15.0}};
    auto t = connected_cumulants(m);
    CHECK(t[{2, 4}] == doctest::Approx(0.0));
    CHECK(t[{2}] == 3.0);
    MomentTable m3 = {{{1}, 0.5}, {{2}, -1.0}, {{3}, 2.0}, {{1, 2}, 0.3}, {{1, 3}, 1.7}, {{2, 3}, -0.4}, {{1, 2, 3}, 0.9}};
    const auto back = moments_from_cumulants(connected_cumulants(m3));
    for (const auto& [k, v] : m3) CHECK(std::abs(back.at(k) - v) < 1e-12);
    const double expected = 0.9 - (0.5 * -0.4 + -1.0 * 1.7 + 2.0 * 0.3) + 2 * 0.5 * -1.0 * 2.0;
    CHECK(connected_cumulants(m3)[{1, 2, 3}] == doctest::Approx(expected));
    MomentTable missing = {{{1}, 1.0}, {{1, 2}, 1.0}};
    CHECK_THROWS_AS(connected_cumulants(missing), DomainError);
  }

  TEST_CASE("dominating function") {
    const double v = dominating_function(0, 1, 1, 1.0, 2.0, 1.0);
    CHECK(v == doctest::Approx(8.0 / 3.0 * std::pow(2048.0, 3)).epsilon(1e-12));
    CHECK(static_cast<double>(dominating_function_direct(0, 1, 1, 1.0, 2.0, 1.0)) == doctest::Approx(v).epsilon(1e-12));
    for (int g = 0; g < 6; ++g)
      for (int t = 1; t < 6; ++t) {
        const double l = log_dominating_function(g, t, 2, 0.7, 1.5, 1.3);
        const double d = std::log(static_cast<double>(dominating_function_direct(g, t, 2, 0.7, 1.5, 1.3)));
        CHECK(l == doctest::Approx(d).epsilon(1e-12));
        CHECK(log_dominating_function(g, t, 2, 0.7, 1.5, 2.0) > l);
      }
    CHECK_THROWS_AS(log_dominating_function(0, 1, 1, 1.0, 1.0, 1.0), DomainError);
  }

  TEST_CASE("dominating partial sums grow and the full sum converges") {
    const auto p = dominating_partial_sums(1, 1.0, 2.0, 1.0, 50);
    CHECK(p.log_partial.size() == 50);
    for (std::size_t i = 1; i < p.log_partial.size(); ++i) CHECK(p.log_partial[i] > p.log_partial[i - 1]);
    // The terms peak at m ~ e^{-1} * base, far beyond small orders, but eventually decay.
    const auto small = dominating_sum_adaptive(1, 0.01, 1.1, 1.0, 1e-16);
    CHECK(small.last_tail_ratio < 1e-16);
    CHECK(std::isfinite(small.log_total));
  }

  TEST_CASE("fnv1a") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  }
}
