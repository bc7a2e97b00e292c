#include "bbp/wick.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_set>

#include "bbp/errors.hpp"
#include "bbp/parallel.hpp"
#include "bbp/rng.hpp"

namespace bbp {

namespace {

// E W^m for a real Gaussian of variance `var`.
double gaussian_moment(int m, double var) {
  if (m % 2) return 0.0;
  double out = 1.0;
  for (int i = m - 1; i > 0; i -= 2) out *= i;
  return out * std::pow(var, m / 2);
}

struct CornerLayout {
  std::vector<int> next;  // side l runs from corner l to corner next[l]
  int k = 0;
};

CornerLayout layout(const std::vector<int>& k_list) {
  CornerLayout c;
  for (int kj : k_list) {
    if (kj < 1) throw DomainError("trace powers must be >= 1");
    for (int i = 0; i < kj; ++i) c.next.push_back(c.k + (i + 1) % kj);
    c.k += kj;
  }
  return c;
}

void check_square(const VarianceProfile& profile, const Eigen::MatrixXd& a) {
  if (a.rows() != profile.n() || a.cols() != profile.n()) throw DomainError("A must be N x N");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 0.0) throw DomainError("A must be symmetric");
}

}  // namespace

double exact_moment_oracle(const VarianceProfile& profile, const Eigen::MatrixXd& a, const std::vector<int>& k_list) {
  check_square(profile, a);
  const CornerLayout lay = layout(k_list);
  const int n = profile.n(), k = lay.k;
  if (n > 8) throw BudgetError("exact_moment_oracle: N above 8");
  if (std::pow(static_cast<double>(n), k) * std::pow(2.0, k) > 2e9) throw BudgetError("exact_moment_oracle: N^k 2^k too large");

  const Eigen::MatrixXd& sigma = profile.sigma();
  std::vector<int> eta(k, 0);
  std::vector<double> aval(k), sval(k);
  std::vector<int> pair_id(k);
  std::vector<int> mult(n * n);
  double total = 0.0;

  const std::uint32_t masks = 1u << k;
  while (true) {
    for (int l = 0; l < k; ++l) {
      const int u = eta[l], v = eta[lay.next[l]];
      aval[l] = a(u, v);
      sval[l] = sigma(u, v);
      pair_id[l] = std::min(u, v) * n + std::max(u, v);
    }
    double sum_eta = 0.0;
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
      double w = 1.0;
      bool zero = false;
      for (int l = 0; l < k && !zero; ++l) {
        if (mask >> l & 1u) {
          if (sval[l] == 0.0) zero = true;
          w *= sval[l];
        } else {
          if (aval[l] == 0.0) zero = true;
          w *= aval[l];
        }
      }
      if (zero) continue;
      std::fill(mult.begin(), mult.end(), 0);
      for (int l = 0; l < k; ++l)
        if (mask >> l & 1u) ++mult[pair_id[l]];
      for (int p = 0; p < n * n && w != 0.0; ++p) {
        if (!mult[p]) continue;
        const bool diag = p / n == p % n;
        w *= gaussian_moment(mult[p], diag ? 2.0 : 1.0);
      }
      sum_eta += w;
    }
    total += sum_eta;
    int pos = k - 1;
    while (pos >= 0 && eta[pos] == n - 1) eta[pos--] = 0;
    if (pos < 0) break;
    ++eta[pos];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Diagram function

double diagram_function(const Diagram& d, const VarianceProfile& profile, const Eigen::MatrixXd& a,
                        const std::vector<int>& k_list, double rho, bool use_absolute) {
  check_square(profile, a);
  const RibbonGraph& g = d.graph();
  if (static_cast<int>(k_list.size()) != g.num_faces()) throw DomainError("diagram faces do not match the trace list");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  int k = 0, kmax = 0;
  for (int kj : k_list) {
    if (kj < 1) throw DomainError("trace powers must be >= 1");
    k += kj;
    kmax = std::max(kmax, kj);
  }
  const int n = profile.n();

  // Edges: one per boundary side, one per glued pair.
  struct Edge {
    int u, v;
    bool interior;
  };
  std::vector<Edge> edges;
  std::vector<int> edge_of(g.num_sides(), -1);
  for (int x = 0; x < g.num_sides(); ++x) {
    const int y = g.sides()[x].partner;
    if (y >= 0 && y < x) {
      edge_of[x] = edge_of[y];
      continue;
    }
    edge_of[x] = static_cast<int>(edges.size());
    edges.push_back({g.start_vertex(x), g.end_vertex(x), y >= 0});
  }
  const int ne = static_cast<int>(edges.size());
  // face_use[j][e]: how many sides of face j belong to edge e
  std::vector<std::vector<int>> face_use(g.num_faces(), std::vector<int>(ne, 0));
  for (int j = 0; j < g.num_faces(); ++j)
    for (int x : g.faces()[j]) ++face_use[j][edge_of[x]];

  // Face factors that do not depend on lengths.
  double point_factor = 1.0;
  for (int j = 0; j < g.num_faces(); ++j) {
    if (!g.faces()[j].empty()) continue;
    if (k_list[j] % 2) return 0.0;
    point_factor *= static_cast<double>(catalan_number(k_list[j] / 2));
  }

  std::vector<Eigen::MatrixXd> ppow(kmax + 1), apow(kmax + 1);
  const Eigen::MatrixXd p = profile.transition();
  const Eigen::MatrixXd aa = use_absolute ? Eigen::MatrixXd(a.cwiseAbs()) : a;
  ppow[0] = apow[0] = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i <= kmax; ++i) {
    ppow[i] = ppow[i - 1] * p;
    apow[i] = apow[i - 1] * aa;
  }

  std::vector<double> binom_cache((kmax + 1) * (kmax + 1));
  for (int i = 0; i <= kmax; ++i)
    for (int j = 0; j <= i; ++j) binom_cache[i * (kmax + 1) + j] = static_cast<double>(binomial(i, j));

  const int nv = g.num_vertices();
  std::vector<int> len(ne, 1), used(g.num_faces(), 0);
  double total = 0.0;

  std::function<void(int)> assign = [&](int e) {
    if (e == ne) {
      double face_weight = point_factor;
      for (int j = 0; j < g.num_faces(); ++j) {
        if (g.faces()[j].empty()) continue;
        const int rest = k_list[j] - used[j];
        if (rest < 0 || rest % 2) return;
        face_weight *= binom_cache[k_list[j] * (kmax + 1) + rest / 2];
      }
      if (face_weight == 0.0) return;
      // Sum over labels of the vertices.
      std::vector<int> eta(nv, 0);
      double s = 0.0;
      while (true) {
        double w = 1.0;
        for (int i = 0; i < ne && w != 0.0; ++i) {
          const Eigen::MatrixXd& m = edges[i].interior ? ppow[len[i]] : apow[len[i]];
          w *= m(eta[edges[i].u], eta[edges[i].v]);
        }
        s += w;
        int pos = nv - 1;
        while (pos >= 0 && eta[pos] == n - 1) eta[pos--] = 0;
        if (pos < 0) break;
        ++eta[pos];
      }
      total += face_weight * s;
      return;
    }
    for (int l = 1;; ++l) {
      bool fits = true;
      for (int j = 0; j < g.num_faces(); ++j)
        if (used[j] + face_use[j][e] * l > k_list[j]) fits = false;
      if (!fits) break;
      len[e] = l;
      for (int j = 0; j < g.num_faces(); ++j) used[j] += face_use[j][e] * l;
      assign(e + 1);
      for (int j = 0; j < g.num_faces(); ++j) used[j] -= face_use[j][e] * l;
    }
  };
  assign(0);
  return total * std::pow(rho, -k);
}

ExpansionResult diagram_expansion(const VarianceProfile& profile, const Eigen::MatrixXd& a,
                                  const std::vector<int>& k_list, double rho) {
  ExpansionResult out;
  const auto diagrams = contracted_diagrams(k_list, true);
  for (const auto& e : diagrams) {
    out.sum += diagram_function(e.diagram, profile, a, k_list, rho);
    out.gluings += e.multiplicity;
  }
  out.diagrams = static_cast<int>(diagrams.size());
  return out;
}

// ---------------------------------------------------------------------------
// Exact identities

BigInt binomial(int n, int k) {
  if (k < 0 || k > n || n < 0) return 0;
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) {
    out *= n - k + i;
    out /= i;
  }
  return out;
}

BigInt catalan_number(int n) {
  if (n < 0) return 0;
  return binomial(2 * n, n) / (n + 1);
}

CatalanCheck catalan_tree_count(int k, int n) {
  if (n < 1 || n > k) throw DomainError("catalan_tree_count: need 1 <= n <= k");
  CatalanCheck out;
  if ((k - n) % 2) {
    out.lhs = out.rhs = 0;
    return out;
  }
  const int m = (k - n) / 2;
  std::vector<BigInt> cat(m + 1);
  for (int i = 0; i <= m; ++i) cat[i] = catalan_number(i);
  // Explicit enumeration of compositions u_1 + ... + u_n = m.
  std::vector<int> u(n, 0);
  BigInt lhs = 0;
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      u[i] = left;
      BigInt term = 2 * u[0] + 1;
      for (int t = 0; t < n; ++t) term *= cat[u[t]];
      lhs += term;
      return;
    }
    for (int v = 0; v <= left; ++v) {
      u[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, m);
  out.lhs = lhs;
  out.rhs = binomial(k, m);
  return out;
}

BinomCheck binom_identity_check(int k, int n, double a) {
  if (n < 0 || n > k) throw DomainError("binom_identity_check: need 0 <= n <= k");
  if (!(a > 0.0)) throw DomainError("binom_identity_check: a must be positive");
  BinomCheck out;
  if ((k - n) % 2) return out;
  const double p = a * a / (a * a + 1.0);
  const int succ = (k + n) / 2;
  out.lhs = static_cast<double>(binomial(k, succ)) * std::pow(p, succ) * std::pow(1.0 - p, k - succ);
  const double rho = a + 1.0 / a;
  out.rhs = std::pow(rho, -k) * std::pow(a, n) * static_cast<double>(binomial(k, (k - n) / 2));
  return out;
}

// ---------------------------------------------------------------------------
// Cumulants

namespace {

// Calls fn(blocks) for every set partition of {0..s-1}.
void for_each_partition(int s, const std::function<void(const std::vector<std::vector<int>>&)>& fn) {
  std::vector<std::vector<int>> blocks;
  std::function<void(int)> rec = [&](int i) {
    if (i == s) {
      fn(blocks);
      return;
    }
    // Index access: the recursion may grow `blocks` and move its elements.
    const std::size_t count = blocks.size();
    for (std::size_t b = 0; b < count; ++b) {
      blocks[b].push_back(i);
      rec(i + 1);
      blocks[b].pop_back();
    }
    blocks.push_back({i});
    rec(i + 1);
    blocks.pop_back();
  };
  rec(0);
}

std::vector<int> sub_tuple(const std::vector<int>& key, const std::vector<int>& idx) {
  std::vector<int> out;
  for (int i : idx) out.push_back(key[i]);
  return out;
}

double lookup(const MomentTable& t, const std::vector<int>& key) {
  auto it = t.find(key);
  if (it == t.end()) {
    std::string s;
    for (int v : key) s += std::to_string(v) + " ";
    throw DomainError("moment table is missing the sub-tuple ( " + s + ")");
  }
  return it->second;
}

}  // namespace

MomentTable connected_cumulants(const MomentTable& moments) {
  MomentTable out;
  // Process keys by length so sub-tuples are already known.
  std::vector<std::vector<int>> keys;
  for (const auto& [key, _] : moments) keys.push_back(key);
  std::stable_sort(keys.begin(), keys.end(), [](const auto& x, const auto& y) { return x.size() < y.size(); });
  for (const auto& key : keys) {
    const int s = static_cast<int>(key.size());
    double value = lookup(moments, key);
    for_each_partition(s, [&](const std::vector<std::vector<int>>& blocks) {
      if (blocks.size() < 2) return;
      double prod = 1.0;
      for (const auto& b : blocks) {
        const auto sub = sub_tuple(key, b);
        lookup(moments, sub);
        prod *= lookup(out, sub);
      }
      value -= prod;
    });
    out[key] = value;
  }
  return out;
}

MomentTable moments_from_cumulants(const MomentTable& cumulants) {
  MomentTable out;
  for (const auto& [key, _] : cumulants) {
    double value = 0.0;
    for_each_partition(static_cast<int>(key.size()), [&](const std::vector<std::vector<int>>& blocks) {
      double prod = 1.0;
      for (const auto& b : blocks) prod *= lookup(cumulants, sub_tuple(key, b));
      value += prod;
    });
    out[key] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dominating function

namespace {

void check_dominating_args(int g, int t, int s, double xi, double a, double lambda) {
  if (g < 0 || t < 1 || s < 1) throw DomainError("dominating function: need g >= 0, t >= 1, s >= 1");
  if (!(xi > 0.0) || !(a > 1.0) || !(lambda >= 1.0))
    throw DomainError("dominating function: need xi > 0, a > 1, lambda >= 1");
}

double log_shell(int m, int s, double xi, double a, double lambda) {
  // D depends on (g, t) through m = g + t; the shell has m pairs (t = 1..m).
  return std::log(static_cast<double>(m)) + log_dominating_function(0, m, s, xi, a, lambda);
}

double log_add(double x, double y) {
  if (x == -INFINITY) return y;
  if (y == -INFINITY) return x;
  const double hi = std::max(x, y), lo = std::min(x, y);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

double log_dominating_function(int g, int t, int s, double xi, double a, double lambda) {
  check_dominating_args(g, t, s, xi, a, lambda);
  const double m = g + t;
  return (2 * m + 2 * s - 4) * std::log(2.0 * xi * s) +
         (3 * m + 4 * s - 6) * std::log(2.0 * lambda * a * a / (a * a - 1.0)) + (m + 2 * s) * std::log(2048.0) -
         std::lgamma(m + 1.0);
}

long double dominating_function_direct(int g, int t, int s, double xi, double a, double lambda) {
  check_dominating_args(g, t, s, xi, a, lambda);
  const int m = g + t;
  auto ipow = [](long double base, int e) {
    long double out = 1.0L;
    if (e < 0) {
      base = 1.0L / base;
      e = -e;
    }
    for (int i = 0; i < e; ++i) out *= base;
    return out;
  };
  long double value = ipow(2.0L * xi * s, 2 * m + 2 * s - 4);
  value *= ipow(2.0L * lambda * a * a / (a * a - 1.0L), 3 * m + 4 * s - 6);
  value *= ipow(2048.0L, m + 2 * s);
  for (int i = 2; i <= m; ++i) value /= i;
  return value;
}

DominatingSum dominating_partial_sums(int s, double xi, double a, double lambda, int max_order) {
  if (max_order < 1) throw DomainError("max_order must be >= 1");
  DominatingSum out;
  double total = -INFINITY;
  double prev = -INFINITY;
  for (int m = 1; m <= max_order; ++m) {
    prev = total;
    total = log_add(total, log_shell(m, s, xi, a, lambda));
    out.log_partial.push_back(total);
  }
  out.max_order = max_order;
  out.log_total = total;
  out.last_tail_ratio = max_order > 1 ? -std::expm1(prev - total) : 1.0;
  return out;
}

DominatingSum dominating_sum_adaptive(int s, double xi, double a, double lambda, double rel_tol, int max_order) {
  DominatingSum out;
  double total = -INFINITY, prev_shell = -INFINITY;
  for (int m = 1; m <= max_order; ++m) {
    const double shell = log_shell(m, s, xi, a, lambda);
    const double before = total;
    total = log_add(total, shell);
    const bool decreasing = shell < prev_shell;
    prev_shell = shell;
    if (decreasing && shell - total < std::log(rel_tol)) {
      out.max_order = m;
      out.log_total = total;
      out.last_tail_ratio = -std::expm1(before - total);
      return out;
    }
  }
  throw NumericError("dominating sum did not converge within max_order");
}

MonteCarloMoment monte_carlo_trace_moment(const Model& model, const std::vector<int>& k_list, const TrialPlan& plan) {
  if (plan.trials < 2) throw DomainError("monte_carlo_trace_moment needs at least two trials");
  for (int k : k_list)
    if (k < 1) throw DomainError("trace powers must be >= 1");
  // Chunks keep per-trial results out of memory; chunk sums are combined in order.
  constexpr long chunk = 4096;
  const long chunks = (plan.trials + chunk - 1) / chunk;
  std::vector<RunningStats> partial(chunks);
  parallel_for(chunks, plan.threads, [&](std::size_t c) {
    const long lo = static_cast<long>(c) * chunk, hi = std::min<long>(plan.trials, lo + chunk);
    for (long t = lo; t < hi; ++t) {
      const Eigen::MatrixXcd x = model.sample(derive_seed(plan.seed, t)).as_complex();
      double prod = 1.0;
      for (int k : k_list) {
        Eigen::MatrixXcd power = x;
        for (int i = 1; i < k; ++i) power = (power * x).eval();
        prod *= power.trace().real();
      }
      partial[c].add(prod);
    }
  });
  // Chan et al. pairwise combination of the chunk statistics.
  RunningStats total;
  for (const auto& p : partial) {
    if (p.count == 0) continue;
    const long n = total.count + p.count;
    const double delta = p.mean - total.mean;
    total.m2 += p.m2 + delta * delta * static_cast<double>(total.count) * p.count / n;
    total.mean += delta * p.count / n;
    total.count = n;
  }
  return {total.mean, total.stderr_mean(), total.count};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bbp
