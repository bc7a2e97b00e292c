#include "bbp/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "bbp/errors.hpp"
#include "bbp/parallel.hpp"

namespace bbp {

using nlohmann::json;

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Mutable face/side lists used while contracting.
struct Raw {
  std::vector<std::vector<int>> faces;
  std::vector<Side> sides;
  std::vector<char> alive;
};

struct Where {
  std::vector<int> face, pos;
};

Where locate(const Raw& g) {
  Where w;
  w.face.assign(g.sides.size(), -1);
  w.pos.assign(g.sides.size(), -1);
  for (std::size_t f = 0; f < g.faces.size(); ++f)
    for (std::size_t p = 0; p < g.faces[f].size(); ++p) {
      w.face[g.faces[f][p]] = static_cast<int>(f);
      w.pos[g.faces[f][p]] = static_cast<int>(p);
    }
  return w;
}

// Corner c_x is the start of side x. Returns the representative of each start corner.
std::vector<int> corner_classes(const Raw& g, const Where& w) {
  const int n = static_cast<int>(g.sides.size());
  UnionFind uf(n);
  auto next = [&](int x) {
    const auto& face = g.faces[w.face[x]];
    return face[(w.pos[x] + 1) % face.size()];
  };
  for (int x = 0; x < n; ++x) {
    if (!g.alive[x]) continue;
    const int y = g.sides[x].partner;
    if (y < 0 || y < x) continue;
    if (g.sides[x].glue == Glue::opposite) {
      uf.unite(x, next(y));
      uf.unite(next(x), y);
    } else {
      uf.unite(x, y);
      uf.unite(next(x), next(y));
    }
  }
  std::vector<int> rep(n, -1);
  for (int x = 0; x < n; ++x)
    if (g.alive[x]) rep[x] = uf.find(x);
  return rep;
}

void check_structure(const std::vector<std::vector<int>>& faces, const std::vector<Side>& sides) {
  const int n = static_cast<int>(sides.size());
  std::vector<int> seen(n, 0);
  for (const auto& f : faces)
    for (int x : f) {
      if (x < 0 || x >= n) throw DomainError("ribbon graph: side index out of range");
      if (seen[x]++) throw DomainError("ribbon graph: side listed twice");
    }
  for (int x = 0; x < n; ++x) {
    if (!seen[x]) throw DomainError("ribbon graph: side not in any face");
    const int y = sides[x].partner;
    if (y == -1) continue;
    if (y < 0 || y >= n || y == x) throw DomainError("ribbon graph: invalid partner");
    if (sides[y].partner != x || sides[y].glue != sides[x].glue)
      throw DomainError("ribbon graph: gluing is not a symmetric pairing");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// RibbonGraph

RibbonGraph::RibbonGraph(std::vector<std::vector<int>> faces, std::vector<Side> sides)
    : faces_(std::move(faces)), sides_(std::move(sides)) {
  check_structure(faces_, sides_);
  const int n = num_sides();
  const int s = num_faces();
  face_of_.assign(n, -1);
  pos_of_.assign(n, -1);
  for (int f = 0; f < s; ++f)
    for (std::size_t p = 0; p < faces_[f].size(); ++p) {
      face_of_[faces_[f][p]] = f;
      pos_of_[faces_[f][p]] = static_cast<int>(p);
    }

  // Vertices: classes of start corners, numbered by first appearance in face order,
  // with each empty face contributing its own point vertex.
  UnionFind uf(n);
  for (int x = 0; x < n; ++x) {
    const int y = sides_[x].partner;
    if (y < 0 || y < x) continue;
    if (sides_[x].glue == Glue::opposite) {
      uf.unite(x, next(y));
      uf.unite(next(x), y);
    } else {
      uf.unite(x, y);
      uf.unite(next(x), next(y));
    }
  }
  start_vertex_.assign(n, -1);
  point_vertex_.assign(s, -1);
  marked_vertex_.assign(s, -1);
  std::vector<int> id_of_root(n, -1);
  for (int f = 0; f < s; ++f) {
    if (faces_[f].empty()) {
      point_vertex_[f] = num_vertices_++;
      marked_vertex_[f] = point_vertex_[f];
      continue;
    }
    for (int x : faces_[f]) {
      const int r = uf.find(x);
      if (id_of_root[r] < 0) id_of_root[r] = num_vertices_++;
      start_vertex_[x] = id_of_root[r];
    }
    marked_vertex_[f] = start_vertex_[faces_[f][0]];
  }

  degree_.assign(num_vertices_, 0);
  boundary_degree_.assign(num_vertices_, 0);
  marked_.assign(num_vertices_, 0);
  for (int f = 0; f < s; ++f) marked_[marked_vertex_[f]] = 1;
  for (int x = 0; x < n; ++x) {
    const int y = sides_[x].partner;
    if (y < 0) {
      ++num_boundary_edges_;
      ++degree_[start_vertex(x)];
      ++degree_[end_vertex(x)];
      ++boundary_degree_[start_vertex(x)];
      ++boundary_degree_[end_vertex(x)];
    } else if (x < y) {
      ++num_interior_edges_;
      ++degree_[start_vertex(x)];
      ++degree_[end_vertex(x)];
    }
  }
  for (int v = 0; v < num_vertices_; ++v)
    if (boundary_degree_[v] > 0) ++num_boundary_vertices_;

  // Components and orientability over faces.
  UnionFind fuf(s);
  std::vector<std::vector<std::pair<int, int>>> adj(s);  // (face, sign flip)
  for (int x = 0; x < n; ++x) {
    const int y = sides_[x].partner;
    if (y < 0 || y < x) continue;
    fuf.unite(face_of_[x], face_of_[y]);
    const int flip = sides_[x].glue == Glue::same ? 1 : 0;
    adj[face_of_[x]].emplace_back(face_of_[y], flip);
    adj[face_of_[y]].emplace_back(face_of_[x], flip);
  }
  std::vector<int> comp_of_face(s);
  for (int f = 0; f < s; ++f) comp_of_face[f] = fuf.find(f);
  std::vector<int> roots(comp_of_face);
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  components_ = static_cast<int>(roots.size());

  std::vector<int> sign(s, -1);
  for (int f0 = 0; f0 < s; ++f0) {
    if (sign[f0] >= 0) continue;
    sign[f0] = 0;
    std::queue<int> q;
    q.push(f0);
    while (!q.empty()) {
      const int f = q.front();
      q.pop();
      for (auto [g, flip] : adj[f]) {
        const int want = sign[f] ^ flip;
        if (sign[g] < 0) {
          sign[g] = want;
          q.push(g);
        } else if (sign[g] != want) {
          orientable_ = false;
        }
      }
    }
  }

  // Boundary circles. State (side, d): side touches the current vertex and is
  // traversed forward (d = +1) or backward (d = -1) if it is a boundary side.
  std::vector<char> visited(n, 0);
  auto advance = [&](int side, int d) { return d > 0 ? next(side) : prev(side); };
  for (int e = 0; e < n; ++e) {
    if (sides_[e].partner >= 0 || visited[e]) continue;
    std::vector<std::pair<int, int>> cycle;
    int cur = e, d = 1;
    for (int guard = 0; guard <= 4 * n + 4; ++guard) {
      // cur is a boundary side traversed in direction d.
      visited[cur] = 1;
      cycle.emplace_back(cur, d);
      int f = advance(cur, d);
      int fd = d;
      int spins = 0;
      while (sides_[f].partner >= 0) {
        const int fp = sides_[f].partner;
        const int nd = sides_[f].glue == Glue::opposite ? fd : -fd;
        f = nd > 0 ? next(fp) : prev(fp);
        fd = nd;
        if (++spins > 2 * n + 2) throw NumericError("ribbon graph: boundary walk does not terminate");
      }
      cur = f;
      d = fd;
      if (cur == e) break;
      if (visited[cur]) throw NumericError("ribbon graph: boundary walk revisits a side");
    }
    if (cur != e) throw NumericError("ribbon graph: boundary walk does not close");
    cycles_.push_back(std::move(cycle));
  }
  punctures_ = static_cast<int>(cycles_.size());
  genus_ = 2 * components_ - euler_characteristic() - punctures_;
}

int RibbonGraph::next(int side) const {
  const auto& f = faces_[face_of_[side]];
  return f[(pos_of_[side] + 1) % f.size()];
}

int RibbonGraph::prev(int side) const {
  const auto& f = faces_[face_of_[side]];
  return f[(pos_of_[side] + f.size() - 1) % f.size()];
}

bool RibbonGraph::has_point_face() const {
  return std::any_of(faces_.begin(), faces_.end(), [](const auto& f) { return f.empty(); });
}

std::string RibbonGraph::canonical() const {
  std::vector<int> offset(num_faces() + 1, 0);
  for (int f = 0; f < num_faces(); ++f) offset[f + 1] = offset[f] + static_cast<int>(faces_[f].size());
  auto index = [&](int side) { return offset[face_of_[side]] + pos_of_[side]; };
  std::string out;
  out.reserve(8 * (num_sides() + num_faces()));
  for (int f = 0; f < num_faces(); ++f) {
    out += '[';
    for (int x : faces_[f]) {
      const int y = sides_[x].partner;
      if (y < 0) {
        out += 'b';
      } else {
        out += std::to_string(index(y));
        out += sides_[x].glue == Glue::same ? 's' : 'o';
      }
      out += ',';
    }
    out += ']';
  }
  return out;
}

RibbonGraph glue_polygons(const std::vector<int>& perimeters, const std::vector<std::pair<int, int>>& pairs,
                          const std::vector<Glue>& glue, const std::vector<int>& marks) {
  if (pairs.size() != glue.size()) throw DomainError("glue_polygons: one orientation per pair is required");
  if (!marks.empty() && marks.size() != perimeters.size())
    throw DomainError("glue_polygons: one mark per face is required");
  int k = 0;
  for (int p : perimeters) {
    if (p < 0) throw DomainError("glue_polygons: perimeters must be non-negative");
    k += p;
  }
  std::vector<Side> sides(k);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [u, v] = pairs[i];
    if (u < 0 || v < 0 || u >= k || v >= k) throw DomainError("glue_polygons: glued side outside [0, k)");
    if (u == v || sides[u].partner >= 0 || sides[v].partner >= 0)
      throw DomainError("glue_polygons: pairs overlap");
    sides[u] = {v, glue[i]};
    sides[v] = {u, glue[i]};
  }
  std::vector<std::vector<int>> faces(perimeters.size());
  int offset = 0;
  for (std::size_t f = 0; f < perimeters.size(); ++f) {
    const int p = perimeters[f];
    const int m = marks.empty() ? 0 : marks[f];
    if (p > 0 && (m < 0 || m >= p)) throw DomainError("glue_polygons: mark outside the face");
    for (int i = 0; i < p; ++i) faces[f].push_back(offset + (m + i) % p);
    offset += p;
  }
  return RibbonGraph(std::move(faces), std::move(sides));
}

// ---------------------------------------------------------------------------
// Contraction

namespace {

bool remove_one_leaf(Raw& g) {
  for (auto& face : g.faces) {
    const int len = static_cast<int>(face.size());
    if (len < 2) continue;
    for (int p = 0; p < len; ++p) {
      const int x = face[p], y = face[(p + 1) % len];
      if (g.sides[x].partner != y || g.sides[x].glue != Glue::opposite) continue;
      // The corner between x and y is a leaf.
      const bool mark_moves = p == 0 || (p + 1) % len == 0 || (p + 2) % len == 0;
      std::vector<int> rest;
      rest.reserve(len - 2);
      if (mark_moves) {
        for (int i = 2; i < len; ++i) rest.push_back(face[(p + i) % len]);
      } else {
        for (int i = 0; i < len; ++i)
          if (i != p && i != (p + 1) % len) rest.push_back(face[i]);
      }
      face = std::move(rest);
      g.alive[x] = g.alive[y] = 0;
      g.sides[x].partner = g.sides[y].partner = -1;
      return true;
    }
  }
  return false;
}

void erase_side(Raw& g, const Where& w, int x) {
  auto& face = g.faces[w.face[x]];
  face.erase(face.begin() + w.pos[x]);
  g.alive[x] = 0;
  g.sides[x].partner = -1;
}

bool suppress_one_divalent(Raw& g) {
  const Where w = locate(g);
  const std::vector<int> rep = corner_classes(g, w);
  const int n = static_cast<int>(g.sides.size());
  auto next = [&](int x) {
    const auto& f = g.faces[w.face[x]];
    return f[(w.pos[x] + 1) % f.size()];
  };
  auto prev = [&](int x) {
    const auto& f = g.faces[w.face[x]];
    return f[(w.pos[x] + f.size() - 1) % f.size()];
  };
  std::vector<int> degree(n, 0);
  std::vector<char> marked(n, 0);
  for (const auto& f : g.faces)
    if (!f.empty()) marked[rep[f[0]]] = 1;
  for (int x = 0; x < n; ++x) {
    if (!g.alive[x]) continue;
    const int y = g.sides[x].partner;
    if (y >= 0 && y < x) continue;
    ++degree[rep[x]];
    ++degree[rep[next(x)]];
  }
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const auto& face = g.faces[fi];
    const int len = static_cast<int>(face.size());
    for (int q = 1; q < len; ++q) {
      const int x = face[q - 1], y = face[q];
      const int v = rep[y];
      if (marked[v] || degree[v] != 2) continue;
      const Side sx = g.sides[x], sy = g.sides[y];
      if (sx.partner < 0 && sy.partner < 0) {
        erase_side(g, w, y);
        return true;
      }
      if (sx.partner < 0 || sy.partner < 0 || sx.partner == y) continue;
      const int xp = sx.partner;
      if (sx.glue == Glue::opposite) {
        const int yp = prev(xp);  // must be the partner of y
        if (sy.partner != yp || sy.glue != Glue::opposite) continue;
        // merged x.y glued opposite to merged yp.xp; keep x and yp.
        erase_side(g, w, y);
        const Where w2 = locate(g);
        erase_side(g, w2, xp);
        g.sides[x] = {yp, Glue::opposite};
        g.sides[yp] = {x, Glue::opposite};
      } else {
        const int yp = next(xp);
        if (sy.partner != yp || sy.glue != Glue::same) continue;
        erase_side(g, w, y);
        const Where w2 = locate(g);
        erase_side(g, w2, yp);
        g.sides[x] = {xp, Glue::same};
        g.sides[xp] = {x, Glue::same};
      }
      return true;
    }
  }
  return false;
}

// Renumbers live sides face by face.
RibbonGraph compact(const Raw& g) {
  std::vector<int> id(g.sides.size(), -1);
  int count = 0;
  for (const auto& f : g.faces)
    for (int x : f) id[x] = count++;
  std::vector<std::vector<int>> faces(g.faces.size());
  std::vector<Side> sides(count);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi)
    for (int x : g.faces[fi]) {
      faces[fi].push_back(id[x]);
      const Side s = g.sides[x];
      sides[id[x]] = {s.partner < 0 ? -1 : id[s.partner], s.glue};
    }
  return RibbonGraph(std::move(faces), std::move(sides));
}

bool is_degenerate(const RibbonGraph& g) {
  return std::none_of(g.degrees().begin(), g.degrees().end(), [](int d) { return d >= 3; });
}

}  // namespace

Diagram::Diagram(RibbonGraph graph) : graph_(std::move(graph)), degenerate_(is_degenerate(graph_)) {}

Diagram okounkov_contract(const RibbonGraph& graph) {
  Raw g{graph.faces(), graph.sides(), std::vector<char>(graph.num_sides(), 1)};
  while (remove_one_leaf(g)) {
  }
  while (suppress_one_divalent(g)) {
  }
  Diagram d(compact(g));
  const RibbonGraph& c = d.graph();
  if (c.euler_characteristic() != graph.euler_characteristic() || c.genus() != graph.genus() ||
      c.punctures() != graph.punctures() || c.orientable() != graph.orientable())
    throw NumericError("okounkov_contract changed the topology of " + graph.canonical());
  return d;
}

// ---------------------------------------------------------------------------
// Classification and lemma checks

DiagramClass classify_diagram(const Diagram& d) {
  const RibbonGraph& g = d.graph();
  DiagramClass c;
  c.counts = {g.num_vertices(),         g.num_edges(),          g.num_boundary_vertices(),
              g.num_boundary_edges(),   g.num_interior_vertices(), g.num_interior_edges()};
  bool local = true;
  for (int v = 0; v < g.num_vertices(); ++v) {
    const int want = g.is_marked(v) ? 2 : 3;
    if (g.degrees()[v] != want) local = false;
  }
  std::vector<int> marks;
  for (int f = 0; f < g.num_faces(); ++f) marks.push_back(g.marked_vertex(f));
  std::sort(marks.begin(), marks.end());
  c.distinct_marks = std::adjacent_find(marks.begin(), marks.end()) == marks.end();
  c.locally_trivalent = local;
  c.trivalent = local && !d.degenerate();
  bool marks_on_boundary = true;
  for (int f = 0; f < g.num_faces(); ++f)
    if (g.boundary_degrees()[g.marked_vertex(f)] == 0) marks_on_boundary = false;
  c.typical = c.trivalent && c.counts.v_int == 0 && marks_on_boundary;
  return c;
}

std::vector<std::string> check_graph_lemmas(const Diagram& d) {
  std::vector<std::string> bad;
  const RibbonGraph& g = d.graph();
  const DiagramClass c = classify_diagram(d);
  const auto& n = c.counts;
  const int s = g.num_faces();
  auto fail = [&](const std::string& what) { bad.push_back(what + " in " + g.canonical()); };

  if (g.genus() < 0) fail("negative genus");
  if (n.v - n.e + s != 2 * g.components() - g.genus() - g.punctures()) fail("Euler formula");
  for (int v = 0; v < g.num_vertices(); ++v)
    if (g.boundary_degrees()[v] != 0 && g.boundary_degrees()[v] != 2) fail("boundary vertex of boundary-degree != 2");
  if (n.e_b != n.v_b) fail("|E_b| != |V_b|");
  if (g.has_point_face()) return bad;  // a bare point carries no edges; the inequalities do not apply

  for (int v = 0; v < g.num_vertices(); ++v) {
    if (g.is_marked(v) && g.degrees()[v] < 2) fail("marked vertex of degree < 2");
    if (!g.is_marked(v) && g.degrees()[v] < 3) fail("unmarked vertex of degree < 3");
  }
  const int lhs = n.e_b + 3 * n.v_int, rhs = 2 * n.e_int + s;
  if (lhs > rhs) fail("boundary-edge inequality violated");
  const bool equality_class = c.locally_trivalent && c.distinct_marks;
  if ((lhs == rhs) != equality_class) fail("equality case does not match the trivalent/distinct-marks class");
  if (equality_class) {
    const int gg = g.genus(), t = g.punctures(), comp = g.components(), l = n.v_int;
    if (n.v != 2 * gg + 2 * t + 3 * s - 4 * comp) fail("|V| count");
    if (n.e != 3 * gg + 3 * t + 4 * s - 6 * comp) fail("|E| count");
    if (n.v_b != 2 * gg + 2 * t + 3 * s - 4 * comp - l) fail("|V_b| count");
    if (n.e_int != gg + t + s + l - 2 * comp) fail("|E_int| count");
  }
  if (c.typical != (n.e_b == 2 * n.e_int + s && !d.degenerate())) fail("typical predicate");
  if (c.typical && (!c.trivalent || n.v_int != 0)) fail("typical without trivalence");
  return bad;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

void compositions(int total, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (parts == 0) {
    if (total == 0) out.push_back(cur);
    return;
  }
  for (int first = 1; first <= total - (parts - 1); ++first) {
    cur.push_back(first);
    compositions(total - first, parts - 1, cur, out);
    cur.pop_back();
  }
}

using DiagramMap = std::map<std::string, EnumeratedDiagram>;

void collect(const std::vector<int>& perimeters, bool real, DiagramMap& out) {
  for_each_gluing(perimeters, real, [&](const RibbonGraph& g) {
    Diagram d = okounkov_contract(g);
    std::string key = d.canonical();
    auto it = out.find(key);
    if (it == out.end()) it = out.emplace(std::move(key), EnumeratedDiagram{std::move(d), perimeters, 0}).first;
    ++it->second.multiplicity;
  });
}

std::vector<EnumeratedDiagram> to_vector(DiagramMap& m) {
  std::vector<EnumeratedDiagram> out;
  out.reserve(m.size());
  for (auto& [_, v] : m) out.push_back(std::move(v));
  return out;
}

}  // namespace

std::vector<EnumeratedDiagram> contracted_diagrams(const std::vector<int>& perimeters, bool real) {
  DiagramMap m;
  collect(perimeters, real, m);
  return to_vector(m);
}

std::vector<EnumeratedDiagram> enumerate_small_diagrams(int k_budget, int s, bool real, int threads) {
  if (k_budget > 10) throw BudgetError("enumerate_small_diagrams: k_budget above 10");
  if (s < 1) throw DomainError("enumerate_small_diagrams: s must be positive");
  std::vector<std::vector<int>> comps;
  std::vector<int> cur;
  for (int total = s; total <= k_budget; ++total) compositions(total, s, cur, comps);

  std::vector<DiagramMap> partial(comps.size());
  parallel_for(comps.size(), threads, [&](std::size_t i) { collect(comps[i], real, partial[i]); });
  DiagramMap merged;
  for (auto& part : partial)
    for (auto& [key, value] : part) {
      auto it = merged.find(key);
      if (it == merged.end())
        merged.emplace(key, std::move(value));
      else
        it->second.multiplicity += value.multiplicity;
    }
  return to_vector(merged);
}

double log_trivalent_count_bound(int g, int t, int s) {
  if (g < 0 || t < 1 || s < 1) throw DomainError("trivalent_count_bound: need g >= 0, t >= 1, s >= 1");
  const double m = g + t + 2 * s;
  const double e = g + t + 3 * s - 3;
  return m * std::log(128.0) + e * std::log(m) - std::lgamma(static_cast<double>(s));
}

double trivalent_count_bound(int g, int t, int s) { return std::exp(log_trivalent_count_bound(g, t, s)); }

// ---------------------------------------------------------------------------
// JSON

json diagram_to_json(const Diagram& d) {
  const RibbonGraph& g = d.graph();
  json faces = json::array();
  for (const auto& f : g.faces()) {
    json sides = json::array();
    for (int x : f) {
      const Side& sd = g.sides()[x];
      json side = {{"id", x}, {"start", g.start_vertex(x)}, {"end", g.end_vertex(x)}};
      if (sd.partner < 0) {
        side["type"] = "boundary";
      } else {
        side["type"] = "interior";
        side["partner"] = sd.partner;
        side["glue"] = sd.glue == Glue::same ? "same" : "opposite";
      }
      sides.push_back(side);
    }
    faces.push_back(sides);
  }
  json vertices = json::array();
  for (int v = 0; v < g.num_vertices(); ++v)
    vertices.push_back({{"id", v},
                        {"degree", g.degrees()[v]},
                        {"boundary", g.boundary_degrees()[v] > 0},
                        {"marked", g.is_marked(v)}});
  return {{"faces", faces},     {"vertices", vertices},         {"genus", g.genus()},
          {"punctures", g.punctures()}, {"orientable", g.orientable()}, {"degenerate", d.degenerate()},
          {"canonical", d.canonical()}};
}

Diagram diagram_from_json(const json& doc) {
  if (!doc.contains("faces") || !doc["faces"].is_array()) throw SchemaError("diagram needs a faces array");
  std::vector<std::vector<int>> faces;
  std::vector<std::pair<int, Side>> entries;
  int max_id = -1;
  for (const auto& f : doc["faces"]) {
    std::vector<int> ids;
    for (const auto& side : f) {
      const int id = side.at("id").get<int>();
      Side sd;
      if (side.at("type").get<std::string>() == "interior") {
        sd.partner = side.at("partner").get<int>();
        sd.glue = side.at("glue").get<std::string>() == "same" ? Glue::same : Glue::opposite;
      }
      ids.push_back(id);
      entries.emplace_back(id, sd);
      max_id = std::max(max_id, id);
    }
    faces.push_back(ids);
  }
  std::vector<Side> sides(max_id + 1);
  for (const auto& [id, sd] : entries) {
    if (id < 0) throw SchemaError("diagram side ids must be non-negative");
    sides[id] = sd;
  }
  return Diagram(RibbonGraph(std::move(faces), std::move(sides)));
}

}  // namespace bbp
