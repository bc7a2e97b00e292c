#include "bbp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bbp/combinatorics.hpp"
#include "bbp/errors.hpp"
#include "bbp/fluctuation.hpp"
#include "bbp/profile.hpp"
#include "bbp/rng.hpp"
#include "bbp/spectral.hpp"
#include "bbp/wick.hpp"

namespace bbp {

using json = nlohmann::json;

namespace {

enum class FieldType { integer, number, string, boolean, list, int_list, number_list, string_list, object };

struct Field {
  std::string key;
  FieldType type;
};

struct ExperimentSchema {
  ExperimentInfo info;
  bool needs_model;
  std::vector<Field> params;
  std::vector<Field> tolerances;
};

const std::vector<ExperimentSchema>& schemas() {
  using F = FieldType;
  static const std::vector<ExperimentSchema> table = {
      {{"bbp_lln", "mean extreme eigenvalues against deformation-driven predictions",
        "outliers converge to a + 1/a beyond the transition, extremes stick to +-2 otherwise"},
       true,
       {{"j_max", F::integer}, {"checks", F::string_list}},
       {{"location", F::number}}},
      {{"spectral_measure", "moments q*X^m q along a deformation eigenvector",
        "the spectral measure at q converges to the semicircle-type law with an atom at a + 1/a"},
       true,
       {{"a_index", F::integer}, {"m_max", F::integer}, {"rule", F::string}},
       {{"moment", F::number}}},
      {{"fluctuation_ks", "rescaled outlier fluctuations against draws of the limiting matrix Z",
        "outlier fluctuations converge to the eigenvalues of Q(H_ID + H_Gauss + H_Diag)Q*"},
       true,
       {{"q_max", F::integer}, {"z_draws", F::integer}},
       {{"ks", F::number}, {"variance_se", F::number}}},
      {{"laplace", "normalized power traces against exponential moments of Z",
        "rho^{-k} Tr X^k with k ~ t/sigma* converges in law to Tr exp(c Z)"},
       true,
       {{"t", F::number_list}, {"z_draws", F::integer}, {"route", F::string}, {"probes", F::integer}},
       {{"z_score", F::number}}},
      {{"identities", "exact Catalan, binomial, cumulant and graph-lemma suites",
        "combinatorial identities behind the diagram expansion"},
       false,
       {{"catalan_k_max", F::integer},
        {"binom_k_max", F::integer},
        {"binom_a", F::number_list},
        {"cumulant_tables", F::integer},
        {"k_budget", F::integer}},
       {{"binom", F::number}, {"cumulant", F::number}}},
      {{"diagram_suite", "exhaustive diagram enumeration with lemma, count-bound and dominating-sum checks",
        "boundary-edge inequality, trivalent counts, count bound and summability of the dominating function"},
       false,
       {{"k_budget", F::integer},
        {"s_max", F::integer},
        {"real", F::boolean},
        {"golden", F::string},
        {"dominating", F::object}},
       {{"dominating_tail", F::number}}},
      {{"oracle_crosscheck", "diagram expansion against brute-force Wick sums and Monte Carlo",
        "E prod Tr X^{k_j} equals rho^k times the sum of diagram functions"},
       true,
       {{"k_sum", F::integer}, {"s_max", F::integer}, {"monte_carlo", F::object}},
       {{"expansion", F::number}, {"mc_sigmas", F::number}}},
  };
  return table;
}

const ExperimentSchema& schema_for(const std::string& name) {
  for (const auto& s : schemas())
    if (s.info.name == name) return s;
  throw SchemaError("unknown experiment '" + name + "'");
}

void check_type(const json& v, FieldType type, const std::string& where) {
  auto fail = [&](const char* what) { throw SchemaError(where + ": expected " + what); };
  switch (type) {
    case FieldType::integer:
      if (!v.is_number_integer()) fail("an integer");
      break;
    case FieldType::number:
      if (!v.is_number()) fail("a number");
      break;
    case FieldType::string:
      if (!v.is_string()) fail("a string");
      break;
    case FieldType::boolean:
      if (!v.is_boolean()) fail("a boolean");
      break;
    case FieldType::object:
      if (!v.is_object()) fail("an object");
      break;
    case FieldType::list:
      if (!v.is_array()) fail("a list");
      break;
    case FieldType::int_list:
    case FieldType::number_list:
    case FieldType::string_list:
      if (!v.is_array()) fail("a list");
      for (const auto& e : v) {
        if (type == FieldType::int_list && !e.is_number_integer()) fail("a list of integers");
        if (type == FieldType::number_list && !e.is_number()) fail("a list of numbers");
        if (type == FieldType::string_list && !e.is_string()) fail("a list of strings");
      }
      break;
  }
}

void check_fields(const json& obj, const std::vector<Field>& fields, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
    if (it == fields.end()) throw SchemaError(where + ": unknown field '" + key + "'");
    check_type(value, it->type, where + "." + key);
  }
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::complex<double> parse_entry(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw SchemaError(where + ": entries must be numbers or [re, im]");
}

Deformation build_deformation(const json& doc, int beta, int n) {
  if (doc.is_null()) return Deformation::none();
  const auto positions = doc.at("positions").get<std::vector<int>>();
  const json& rows = doc.at("a_tilde");
  const int r = static_cast<int>(positions.size());
  if (r == 0) return Deformation::none();
  if (!rows.is_array() || static_cast<int>(rows.size()) != r) throw SchemaError("deformation.a_tilde must be r x r");
  Eigen::MatrixXcd a(r, r);
  for (int i = 0; i < r; ++i) {
    if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != r)
      throw SchemaError("deformation.a_tilde must be r x r");
    for (int j = 0; j < r; ++j) a(i, j) = parse_entry(rows[i][j], "deformation.a_tilde");
  }
  for (int p : positions)
    if (p < 0 || p >= n) throw SchemaError("deformation.positions out of range");
  try {
    return Deformation(positions, a, beta);
  } catch (const DomainError& e) {
    throw SchemaError(std::string("deformation: ") + e.what());
  }
}

CsvTable make_table(std::string file, std::vector<std::string> columns) {
  CsvTable t;
  t.file = std::move(file);
  t.columns = std::move(columns);
  return t;
}

std::string str(double x) { return format_double(x); }
std::string str(long long x) { return std::to_string(x); }
std::string str(int x) { return std::to_string(x); }
std::string str(std::uint64_t x) { return std::to_string(x); }

std::string join(const std::vector<int>& v, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + std::to_string(v[i]);
  return out;
}

Check make_check(std::string name, double measured, double expected, double tolerance) {
  return {std::move(name), measured, expected, tolerance, std::abs(measured - expected) <= tolerance};
}

// Largest positive deformation eigenvalue beyond the transition gives the
// natural normalization rho; otherwise rho = 1.
double natural_rho(const Deformation& d) {
  double a = 0.0;
  for (int i = 0; i < d.r(); ++i) a = std::max(a, std::abs(d.eigenvalues()(i)));
  return a > 1.0 ? a + 1.0 / a : 1.0;
}

// ---------------------------------------------------------------------------

void run_bbp_lln(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const Model model = c.model();
  const int j_max = c.params.value("j_max", 1);
  const double tol = c.tolerances.value("location", 0.05);
  const BbpResult res = run_bbp_experiment(model, plan, j_max);
  rep.warnings.insert(rep.warnings.end(), res.warnings.begin(), res.warnings.end());

  auto label = [](const BbpRow& r) { return r.side == "norm" ? std::string("norm") : r.side + ":" + std::to_string(r.j); };
  std::vector<std::string> wanted;
  if (c.params.contains("checks")) {
    wanted = c.params["checks"].get<std::vector<std::string>>();
  } else {
    for (int j = 1; j <= j_max; ++j) wanted.push_back("top:" + std::to_string(j));
    for (int j = 1; j <= j_max; ++j) wanted.push_back("bottom:" + std::to_string(j));
  }
  for (const auto& w : wanted) {
    auto it = std::find_if(res.rows.begin(), res.rows.end(), [&](const BbpRow& r) { return label(r) == w; });
    if (it == res.rows.end()) throw SchemaError("params.checks: unknown row '" + w + "'");
    rep.checks.push_back(make_check("mean " + w, it->mean, it->prediction, tol));
  }

  auto summary = make_table("summary.csv", {"side", "j", "mean", "stddev", "stderr_mean", "prediction", "abs_error"});
  for (const auto& r : res.rows)
    summary.rows.push_back({r.side, str(r.j), str(r.mean), str(r.stddev), str(r.stderr_mean), str(r.prediction), str(r.abs_error)});
  std::vector<std::string> cols = {"trial", "seed"};
  for (const auto& r : res.rows) cols.push_back(label(r));
  auto values = make_table("eigenvalues.csv", cols);
  for (std::size_t t = 0; t < res.values.size(); ++t) {
    std::vector<std::string> row = {str(static_cast<int>(t)), str(derive_seed(plan.seed, t))};
    for (double v : res.values[t]) row.push_back(str(v));
    values.rows.push_back(std::move(row));
  }
  rep.tables.push_back(std::move(summary));
  rep.tables.push_back(std::move(values));
  rep.diagnostics["sigma_star"] = model.profile.sigma_star();
}

void run_spectral_measure(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const Model model = c.model();
  const int a_index = c.params.value("a_index", 0);
  const int m_max = c.params.value("m_max", 10);
  const std::string rule = c.params.value("rule", std::string("absolute"));
  if (rule != "absolute" && rule != "scaled") throw SchemaError("params.rule must be 'absolute' or 'scaled'");
  const double tol = c.tolerances.value("moment", 0.05);
  const SpectralMeasureResult res = verify_spectral_measure(model, plan, a_index, m_max);

  if (rule == "absolute")
    rep.checks.push_back({"max |moment error|, m = 1.." + std::to_string(m_max), res.max_abs_error, 0.0, tol,
                          res.max_abs_error <= tol});
  else
    rep.checks.push_back({"max |moment error| / max(1, |target|), m = 1.." + std::to_string(m_max),
                          res.max_scaled_error, 0.0, tol, res.max_scaled_error <= tol});
  rep.diagnostics["a"] = res.a;
  rep.diagnostics["max_abs_error"] = res.max_abs_error;
  rep.diagnostics["max_scaled_error"] = res.max_scaled_error;
  rep.diagnostics["atom_location"] = SpectralMeasureTarget(res.a).atom_location();
  rep.diagnostics["atom_mass"] = SpectralMeasureTarget(res.a).atom_mass();

  auto moments = make_table("moments.csv", {"m", "mean", "stderr_mean", "target", "abs_error"});
  for (const auto& r : res.rows)
    moments.rows.push_back({str(r.m), str(r.mean), str(r.stderr_mean), str(r.target), str(r.abs_error)});
  std::vector<std::string> cols = {"trial", "seed"};
  for (int m = 0; m <= m_max; ++m) cols.push_back("m" + std::to_string(m));
  auto values = make_table("values.csv", cols);
  for (std::size_t t = 0; t < res.values.size(); ++t) {
    std::vector<std::string> row = {str(static_cast<int>(t)), str(derive_seed(plan.seed, t))};
    for (double v : res.values[t]) row.push_back(str(v));
    values.rows.push_back(std::move(row));
  }
  rep.tables.push_back(std::move(moments));
  rep.tables.push_back(std::move(values));
}

struct SampleMoments {
  double mean = 0.0, variance = 0.0, variance_se = 0.0;
};

// Sample variance and its standard error sqrt((m4 - s^4) / n) from central moments.
SampleMoments sample_moments(const std::vector<double>& x) {
  SampleMoments out;
  const double n = static_cast<double>(x.size());
  for (double v : x) out.mean += v;
  out.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - out.mean) * (v - out.mean);
    m2 += d;
    m4 += d * d;
  }
  out.variance = m2 / (n - 1.0);
  m4 /= n;
  const double s2 = m2 / n;
  out.variance_se = std::sqrt(std::max(0.0, m4 - s2 * s2) / n);
  return out;
}

void run_fluctuation_ks(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const Model model = c.model();
  const int q_max = c.params.value("q_max", 1);
  const int z_draws = c.params.value("z_draws", 2000);
  const double ks_tol = c.tolerances.value("ks", 0.08);
  const double var_se = c.tolerances.value("variance_se", 3.0);
  const LimitLawParams lp = limit_params_for(model);
  const int q = static_cast<int>(lp.q_rows.rows());
  if (q_max < 1 || q_max > q) throw SchemaError("params.q_max must lie in [1, multiplicity of the top deformation eigenvalue]");

  const auto samples = collect_fluctuations(model, plan, q_max);
  const auto z = sample_Z_many(lp, model.law, z_draws, derive_seed(plan.seed, 0x2e2e2e2eULL), plan.threads);

  auto fl = make_table("fluctuations.csv", {"trial", "seed", "j", "lambda", "scaled"});
  for (const auto& s : samples) fl.rows.push_back({str(s.trial), str(s.seed), str(s.j), str(s.lambda), str(s.scaled)});
  auto zt = make_table("z_draws.csv", {"draw", "j", "z"});
  for (std::size_t d = 0; d < z.size(); ++d)
    for (int j = 0; j < q; ++j) zt.rows.push_back({str(static_cast<int>(d)), str(j + 1), str(z[d](j))});

  for (int j = 1; j <= q_max; ++j) {
    std::vector<double> emp, ref;
    for (const auto& s : samples)
      if (s.j == j) emp.push_back(s.scaled);
    for (const auto& v : z) ref.push_back(v(j - 1));
    const KsResult ks = compare_distributions(emp, ref, ks_tol);
    rep.checks.push_back({"KS statistic, j = " + std::to_string(j), ks.ks, 0.0, ks_tol, ks.pass});
    const SampleMoments em = sample_moments(emp);
    rep.diagnostics["mean_j" + std::to_string(j)] = em.mean;
    rep.diagnostics["variance_j" + std::to_string(j)] = em.variance;
  }

  if (lp.r == 1 && q == 1 && lp.beta == 1) {
    std::vector<double> emp;
    for (const auto& s : samples) emp.push_back(s.scaled);
    const SampleMoments em = sample_moments(emp);
    const double expected = scalar_z_variance(lp);
    const double tol = var_se * em.variance_se;
    rep.checks.push_back(make_check("variance of scaled outlier (" + format_double(var_se) + " standard errors)",
                                    em.variance, expected, tol));
    rep.diagnostics["variance_expected"] = expected;
    rep.diagnostics["variance_stderr"] = em.variance_se;
  } else {
    rep.warnings.push_back("variance check needs r = q = 1 and beta = 1; only KS is evaluated");
  }
  rep.diagnostics["sigma_star"] = lp.sigma_star;
  rep.diagnostics["g"] = lp.g(0, 0);
  rep.diagnostics["sigma_tilde"] = lp.sigma_tilde(0, 0);
  rep.diagnostics["tau"] = lp.tau(0);
  rep.diagnostics["chi"] = lp.chi(0);
  rep.tables.push_back(std::move(fl));
  rep.tables.push_back(std::move(zt));
}

void run_laplace(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const Model model = c.model();
  const auto t = c.params.value("t", std::vector<double>{1.0});
  const int z_draws = c.params.value("z_draws", 2000);
  const std::string route_name = c.params.value("route", std::string("deflated"));
  const int probes = c.params.value("probes", 2);
  const double tol = c.tolerances.value("z_score", 4.0);
  TraceRoute route;
  if (route_name == "deflated")
    route = TraceRoute::deflated;
  else if (route_name == "exact")
    route = TraceRoute::exact;
  else
    throw SchemaError("params.route must be 'deflated' or 'exact'");

  const LaplaceResult res = laplace_check(model, plan, t, z_draws, route, probes);
  rep.checks.push_back({"|lhs - rhs| / combined standard error", res.z_score, 0.0, tol, res.z_score <= tol});
  rep.diagnostics["lhs"] = res.lhs;
  rep.diagnostics["lhs_stderr"] = res.lhs_stderr;
  rep.diagnostics["rhs"] = res.rhs;
  rep.diagnostics["rhs_stderr"] = res.rhs_stderr;
  rep.diagnostics["rel_err"] = res.rel_err;
  rep.diagnostics["k"] = res.k;
  rep.diagnostics["c"] = res.c;

  auto lhs = make_table("lhs.csv", {"trial", "seed", "value"});
  for (std::size_t i = 0; i < res.lhs_values.size(); ++i)
    lhs.rows.push_back({str(static_cast<int>(i)), str(derive_seed(plan.seed, i)), str(res.lhs_values[i])});
  auto rhs = make_table("rhs.csv", {"draw", "value"});
  for (std::size_t i = 0; i < res.rhs_values.size(); ++i) rhs.rows.push_back({str(static_cast<int>(i)), str(res.rhs_values[i])});
  rep.tables.push_back(std::move(lhs));
  rep.tables.push_back(std::move(rhs));
}

struct LemmaTally {
  long long diagrams = 0, gluings = 0, failures = 0, not_idempotent = 0, typical_mismatch = 0;
  std::vector<std::string> first_failures;
  // (s, g, t) -> {diagrams, trivalent, typical, gluings}
  std::map<std::tuple<int, int, int>, std::array<long long, 4>> by_type;
};

void tally_diagrams(int k_budget, int s_max, bool real, int threads, LemmaTally& out) {
  for (int s = 1; s <= s_max; ++s) {
    const auto diagrams = enumerate_small_diagrams(k_budget, s, real, threads);
    for (const auto& e : diagrams) {
      const Diagram& d = e.diagram;
      ++out.diagrams;
      out.gluings += e.multiplicity;
      const auto problems = check_graph_lemmas(d);
      if (!problems.empty()) {
        ++out.failures;
        if (out.first_failures.size() < 5) out.first_failures.push_back(d.canonical() + ": " + problems.front());
      }
      if (okounkov_contract(d.graph()).canonical() != d.canonical()) ++out.not_idempotent;
      const DiagramClass cls = classify_diagram(d);
      if (cls.typical && (!cls.trivalent || cls.counts.v_int != 0)) ++out.typical_mismatch;
      auto& row = out.by_type[{s, d.graph().genus(), d.graph().punctures()}];
      ++row[0];
      if (cls.trivalent) ++row[1];
      if (cls.typical) ++row[2];
      row[3] += e.multiplicity;
    }
  }
}

void run_identities(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const int catalan_k = c.params.value("catalan_k_max", 20);
  const int binom_k = c.params.value("binom_k_max", 30);
  const auto binom_a = c.params.value("binom_a", std::vector<double>{1.0, 1.5, 2.0, 5.0});
  const int tables = c.params.value("cumulant_tables", 20);
  const int k_budget = c.params.value("k_budget", 6);
  const double binom_tol = c.tolerances.value("binom", 1e-12);
  const double cum_tol = c.tolerances.value("cumulant", 1e-10);
  auto summary = make_table("identities.csv", {"suite", "cases", "measured", "tolerance"});

  long long cases = 0, mismatches = 0;
  for (int k = 1; k <= catalan_k; ++k)
    for (int n = 1; n <= k; ++n) {
      if ((k - n) % 2) continue;
      const CatalanCheck cc = catalan_tree_count(k, n);
      ++cases;
      if (cc.lhs != cc.rhs) ++mismatches;
    }
  rep.checks.push_back(make_check("Catalan tree-count mismatches", static_cast<double>(mismatches), 0.0, 0.0));
  summary.rows.push_back({"catalan_tree_count", str(cases), str(static_cast<double>(mismatches)), str(0.0)});

  cases = 0;
  double worst = 0.0;
  for (double a : binom_a)
    for (int k = 0; k <= binom_k; ++k)
      for (int n = k % 2; n <= k; n += 2) {
        const BinomCheck bc = binom_identity_check(k, n, a);
        worst = std::max(worst, std::abs(bc.lhs - bc.rhs));
        ++cases;
      }
  rep.checks.push_back({"binomial identity max |lhs - rhs|", worst, 0.0, binom_tol, worst <= binom_tol});
  summary.rows.push_back({"binomial_identity", str(cases), str(worst), str(binom_tol)});

  // Random tables closed under sub-tuples of one base tuple, s <= 3.
  Rng rng = make_rng(derive_seed(plan.seed, 0xc0c0ULL));
  std::uniform_int_distribution<int> kdist(1, 6), sdist(1, 3);
  std::uniform_real_distribution<double> vdist(-2.0, 2.0);
  double round_trip = 0.0, factor = 0.0;
  for (int i = 0; i < tables; ++i) {
    const int s = sdist(rng);
    std::vector<int> base(s);
    for (int& k : base) k = kdist(rng);
    MomentTable m, fm;
    for (std::uint32_t mask = 1; mask < (1u << s); ++mask) {
      std::vector<int> key;
      for (int j = 0; j < s; ++j)
        if (mask >> j & 1u) key.push_back(base[j]);
      if (!m.count(key)) m[key] = vdist(rng);
    }
    // Factorizing table: products of single moments.
    for (const auto& [key, _] : m) {
      double p = 1.0;
      for (int k : key) p *= m[{k}];
      fm[key] = p;
    }
    const MomentTable back = moments_from_cumulants(connected_cumulants(m));
    for (const auto& [key, v] : m) round_trip = std::max(round_trip, std::abs(back.at(key) - v));
    const MomentTable ft = connected_cumulants(fm);
    for (const auto& [key, v] : ft)
      if (key.size() > 1) factor = std::max(factor, std::abs(v));
  }
  rep.checks.push_back({"cumulant round-trip max error", round_trip, 0.0, cum_tol, round_trip <= cum_tol});
  rep.checks.push_back({"cumulants of factorizing tables", factor, 0.0, cum_tol, factor <= cum_tol});
  summary.rows.push_back({"cumulant_round_trip", str(tables), str(round_trip), str(cum_tol)});
  summary.rows.push_back({"cumulant_factorization", str(tables), str(factor), str(cum_tol)});

  LemmaTally tally;
  tally_diagrams(k_budget, k_budget, true, plan.threads, tally);
  rep.checks.push_back(make_check("graph-lemma failures (k_budget " + std::to_string(k_budget) + ")",
                                  static_cast<double>(tally.failures), 0.0, 0.0));
  rep.checks.push_back(make_check("non-idempotent contractions", static_cast<double>(tally.not_idempotent), 0.0, 0.0));
  summary.rows.push_back({"graph_lemmas", str(tally.diagrams), str(static_cast<double>(tally.failures)), str(0.0)});
  for (const auto& f : tally.first_failures) rep.warnings.push_back("lemma failure: " + f);
  rep.tables.push_back(std::move(summary));
}

void run_diagram_suite(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const int k_budget = c.params.value("k_budget", 8);
  const int s_max = c.params.value("s_max", k_budget);
  const bool real = c.params.value("real", true);
  if (k_budget < 1 || s_max < 1 || s_max > k_budget) throw SchemaError("params: need 1 <= s_max <= k_budget");

  LemmaTally tally;
  tally_diagrams(k_budget, s_max, real, plan.threads, tally);
  rep.checks.push_back(make_check("graph-lemma failures", static_cast<double>(tally.failures), 0.0, 0.0));
  rep.checks.push_back(make_check("non-idempotent contractions", static_cast<double>(tally.not_idempotent), 0.0, 0.0));
  rep.checks.push_back(make_check("typical diagrams that are not trivalent without interior vertices",
                                  static_cast<double>(tally.typical_mismatch), 0.0, 0.0));
  for (const auto& f : tally.first_failures) rep.warnings.push_back("lemma failure: " + f);

  // Count bound against enumerated trivalent counts, as log(count / bound).
  double worst_log_ratio = -INFINITY;
  auto counts = make_table("diagram_counts.csv", {"s", "g", "t", "diagrams", "trivalent", "typical", "gluings", "log_bound"});
  json golden_now = json::array();
  for (const auto& [key, row] : tally.by_type) {
    const auto [s, g, t] = key;
    std::string log_bound = "";
    if (t >= 1) {
      const double lb = log_trivalent_count_bound(g, t, s);
      log_bound = str(lb);
      if (row[1] > 0) worst_log_ratio = std::max(worst_log_ratio, std::log(static_cast<double>(row[1])) - lb);
    }
    counts.rows.push_back({str(s), str(g), str(t), str(row[0]), str(row[1]), str(row[2]), str(row[3]), log_bound});
    golden_now.push_back({{"s", s}, {"g", g}, {"t", t}, {"diagrams", row[0]}, {"trivalent", row[1]},
                          {"typical", row[2]}, {"gluings", row[3]}});
  }
  rep.checks.push_back({"max log(trivalent count / bound)", worst_log_ratio, 0.0, 0.0, worst_log_ratio <= 0.0});
  rep.diagnostics["diagrams"] = tally.diagrams;
  rep.diagnostics["gluings"] = tally.gluings;
  json doc = {{"k_budget", k_budget}, {"s_max", s_max}, {"real", real}, {"counts", golden_now}};
  rep.json_files.emplace_back("diagram_counts.json", doc);

  if (c.params.contains("golden")) {
    const std::string path = c.params["golden"].get<std::string>();
    std::ifstream in(path);
    if (!in) throw SchemaError("params.golden: cannot read " + path);
    json golden;
    try {
      golden = json::parse(in);
    } catch (const json::exception& e) {
      throw SchemaError("params.golden: " + std::string(e.what()));
    }
    long long diffs = 0;
    bool found = false;
    for (const auto& entry : golden.is_array() ? golden : json::array({golden})) {
      if (entry.value("k_budget", -1) != k_budget || entry.value("s_max", -1) != s_max || entry.value("real", true) != real)
        continue;
      found = true;
      if (entry.at("counts") != golden_now) ++diffs;
    }
    if (!found) throw SchemaError("params.golden: no entry for this k_budget/s_max/real");
    rep.checks.push_back(make_check("golden count table mismatches", static_cast<double>(diffs), 0.0, 0.0));
  }

  if (c.params.contains("dominating")) {
    const json& dp = c.params["dominating"];
    check_fields(dp,
                 {{"s", FieldType::integer},
                  {"xi", FieldType::number},
                  {"a", FieldType::number},
                  {"lambda", FieldType::number},
                  {"max_order", FieldType::integer}},
                 "params.dominating");
    const int s = dp.value("s", 1);
    const double xi = dp.value("xi", 1.0), a = dp.value("a", 2.0), lambda = dp.value("lambda", 1.0);
    const int order = dp.value("max_order", 200);
    const double tol = c.tolerances.value("dominating_tail", 1e-6);
    const DominatingSum ds = dominating_partial_sums(s, xi, a, lambda, order);
    rep.checks.push_back({"dominating sum: last shell / partial sum at g + t = " + std::to_string(order),
                          ds.last_tail_ratio, 0.0, tol, ds.last_tail_ratio < tol});
    auto part = make_table("dominating_partial_sums.csv", {"order", "log_partial_sum"});
    for (std::size_t m = 0; m < ds.log_partial.size(); ++m) part.rows.push_back({str(static_cast<int>(m + 1)), str(ds.log_partial[m])});
    rep.tables.push_back(std::move(part));
    const DominatingSum full = dominating_sum_adaptive(s, xi, a, lambda);
    rep.diagnostics["dominating_converged_order"] = full.max_order;
    rep.diagnostics["dominating_log_total"] = full.log_total;
    rep.diagnostics["dominating_log_partial_at_order"] = ds.log_total;
  }
  rep.tables.push_back(std::move(counts));
}

void ordered_k_lists(int k_sum, int s_max, std::vector<int>& cur, int used, std::vector<std::vector<int>>& out) {
  if (!cur.empty()) out.push_back(cur);
  if (static_cast<int>(cur.size()) == s_max) return;
  for (int k = 1; used + k <= k_sum; ++k) {
    cur.push_back(k);
    ordered_k_lists(k_sum, s_max, cur, used + k, out);
    cur.pop_back();
  }
}

void run_oracle_crosscheck(const ExperimentConfig& c, const TrialPlan& plan, RunReport& rep) {
  const Model model = c.model();
  if (model.beta != 1) throw SchemaError("oracle_crosscheck needs beta = 1");
  if (model.law.kind() != LawKind::gaussian) throw SchemaError("oracle_crosscheck needs gaussian entries");
  const int k_sum = c.params.value("k_sum", 6);
  const int s_max = c.params.value("s_max", 2);
  const double tol = c.tolerances.value("expansion", 1e-9);
  const int n = model.profile.n();
  const Eigen::MatrixXcd ac = model.deformation.embedded(n);
  if (ac.imag().cwiseAbs().maxCoeff() > 0.0) throw SchemaError("oracle_crosscheck needs a real deformation");
  const Eigen::MatrixXd a = ac.real();
  const double rho = natural_rho(model.deformation);

  std::vector<std::vector<int>> lists;
  std::vector<int> cur;
  ordered_k_lists(k_sum, s_max, cur, 0, lists);

  const json profile_doc = profile_to_json(model.profile, true);
  json a_rows = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(a(i, j));
    a_rows.push_back(row);
  }

  auto table = make_table("oracle.csv", {"k_list", "oracle", "scaled_oracle", "expansion", "abs_error", "diagrams", "gluings"});
  json cache = json::object();
  double worst = 0.0;
  for (const auto& k_list : lists) {
    int k = 0;
    for (int kj : k_list) k += kj;
    const double oracle = exact_moment_oracle(model.profile, a, k_list);
    const ExpansionResult ex = diagram_expansion(model.profile, a, k_list, rho);
    const double scaled = oracle * std::pow(rho, -k);
    const double err = std::abs(ex.sum - scaled);
    worst = std::max(worst, err);
    table.rows.push_back({join(k_list), str(oracle), str(scaled), str(ex.sum), str(err), str(ex.diagrams), str(ex.gluings)});
    const json key_doc = {{"profile", profile_doc}, {"a", a_rows}, {"k_list", k_list}};
    cache[hex64(fnv1a(key_doc.dump()))] = {{"k_list", k_list}, {"rho", rho}, {"oracle", oracle}, {"expansion", ex.sum}};
  }
  rep.checks.push_back({"max |sum of diagram functions - rho^{-k} oracle|", worst, 0.0, tol, worst <= tol});
  rep.diagnostics["k_lists"] = lists.size();
  rep.diagnostics["rho"] = rho;
  rep.json_files.emplace_back("oracle_cache.json", json{{"profile", profile_doc}, {"a", a_rows}, {"entries", cache}});

  if (c.params.contains("monte_carlo")) {
    const json& mp = c.params["monte_carlo"];
    check_fields(mp, {{"k", FieldType::int_list}, {"trials", FieldType::integer}}, "params.monte_carlo");
    const auto k_list = mp.value("k", std::vector<int>{4});
    TrialPlan mc = plan;
    mc.trials = mp.value("trials", 1000000);
    const double sigmas = c.tolerances.value("mc_sigmas", 4.0);
    const double oracle = exact_moment_oracle(model.profile, a, k_list);
    const MonteCarloMoment m = monte_carlo_trace_moment(model, k_list, mc);
    const double z = std::abs(m.mean - oracle) / m.stderr_mean;
    rep.checks.push_back({"Monte Carlo mean vs oracle, standard errors (k = " + join(k_list, ",") + ")", z, 0.0, sigmas,
                          z <= sigmas});
    rep.diagnostics["mc_mean"] = m.mean;
    rep.diagnostics["mc_stderr"] = m.stderr_mean;
    rep.diagnostics["mc_oracle"] = oracle;
  }
  rep.tables.push_back(std::move(table));
}

}  // namespace

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> out = [] {
    std::vector<ExperimentInfo> v;
    for (const auto& s : schemas()) v.push_back(s.info);
    return v;
  }();
  return out;
}

ExperimentConfig ExperimentConfig::parse(const json& doc) {
  if (!doc.is_object()) throw SchemaError("config must be a JSON object");
  static const std::vector<Field> top = {
      {"experiment", FieldType::string}, {"description", FieldType::string}, {"profile", FieldType::object},
      {"law", FieldType::string},        {"beta", FieldType::integer},       {"deformation", FieldType::object},
      {"trials", FieldType::integer},    {"seed", FieldType::integer},       {"tolerances", FieldType::object},
      {"params", FieldType::object},
  };
  check_fields(doc, top, "config");
  if (!doc.contains("experiment")) throw SchemaError("config: missing field 'experiment'");

  ExperimentConfig c;
  c.raw = doc;
  c.experiment = doc["experiment"].get<std::string>();
  const ExperimentSchema& schema = schema_for(c.experiment);
  c.description = doc.value("description", std::string());
  if (doc.contains("profile")) c.profile = doc["profile"];
  c.law = doc.value("law", std::string("gaussian"));
  c.beta = doc.value("beta", 1);
  if (c.beta != 1 && c.beta != 2) throw SchemaError("config.beta must be 1 or 2");
  if (doc.contains("deformation")) {
    c.deformation = doc["deformation"];
    check_fields(c.deformation, {{"positions", FieldType::int_list}, {"a_tilde", FieldType::list}}, "deformation");
    if (!c.deformation.contains("positions") || !c.deformation.contains("a_tilde"))
      throw SchemaError("deformation needs 'positions' and 'a_tilde'");
  }
  c.trials = doc.value("trials", 100);
  if (c.trials < 1) throw SchemaError("config.trials must be positive");
  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned())
      c.seed = doc["seed"].get<std::uint64_t>();
    else if (doc["seed"].get<long long>() >= 0)
      c.seed = static_cast<std::uint64_t>(doc["seed"].get<long long>());
    else
      throw SchemaError("config.seed must be non-negative");
  }
  if (doc.contains("tolerances")) c.tolerances = doc["tolerances"];
  if (doc.contains("params")) c.params = doc["params"];
  check_fields(c.tolerances, schema.tolerances, "tolerances");
  check_fields(c.params, schema.params, "params");
  for (const auto& [key, value] : c.tolerances.items())
    if (!(value.get<double>() >= 0.0)) throw SchemaError("tolerances." + key + " must be non-negative");

  if (schema.needs_model) {
    if (!c.profile) throw SchemaError("experiment '" + c.experiment + "' needs a profile");
    c.model();  // validates profile, law and deformation
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse(doc);
}

bool ExperimentConfig::needs_model() const { return schema_for(experiment).needs_model; }

Model ExperimentConfig::model() const {
  if (!profile) throw SchemaError("config has no profile");
  auto built = [&]() -> VarianceProfile {
    try {
      return profile_from_json(*profile);
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(std::string("profile: ") + e.what());
    }
  }();
  EntryLaw entry_law;
  try {
    entry_law = EntryLaw::from_name(law);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("law: ") + e.what());
  }
  Deformation d = build_deformation(deformation, beta, built.n());
  return Model{std::move(built), entry_law, beta, std::move(d)};
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(raw.dump())); }

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json RunReport::to_json() const {
  json checks_doc = json::array();
  for (const auto& c : checks)
    checks_doc.push_back({{"name", c.name},
                          {"measured", c.measured},
                          {"expected", c.expected},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
  json files = json::array();
  for (const auto& t : tables) files.push_back(t.file);
  for (const auto& [name, _] : json_files) files.push_back(name);
  return {{"experiment", experiment},
          {"config_hash", config_hash},
          {"seed", seed},
          {"threads", threads},
          {"wall_seconds", wall_seconds},
          {"pass", pass()},
          {"checks", checks_doc},
          {"warnings", warnings},
          {"diagnostics", diagnostics},
          {"files", files}};
}

RunReport run_experiment(const ExperimentConfig& config, int threads, std::optional<std::uint64_t> seed_override) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.experiment = config.experiment;
  rep.config_hash = config.hash();
  rep.seed = seed_override.value_or(config.seed);
  rep.threads = std::max(1, threads);
  const TrialPlan plan{config.trials, rep.seed, rep.threads};

  const std::string& e = config.experiment;
  if (e == "bbp_lln")
    run_bbp_lln(config, plan, rep);
  else if (e == "spectral_measure")
    run_spectral_measure(config, plan, rep);
  else if (e == "fluctuation_ks")
    run_fluctuation_ks(config, plan, rep);
  else if (e == "laplace")
    run_laplace(config, plan, rep);
  else if (e == "identities")
    run_identities(config, plan, rep);
  else if (e == "diagram_suite")
    run_diagram_suite(config, plan, rep);
  else if (e == "oracle_crosscheck")
    run_oracle_crosscheck(config, plan, rep);
  else
    throw SchemaError("unknown experiment '" + e + "'");

  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

void write_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& t : report.tables) {
    std::ofstream out(dir / t.file);
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
  }
  for (const auto& [name, doc] : report.json_files) std::ofstream(dir / name) << doc.dump(2) << '\n';
  std::ofstream(dir / "report.json") << report.to_json().dump(2) << '\n';
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace bbp
