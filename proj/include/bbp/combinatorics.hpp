#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace bbp {

// How two glued sides are identified: opposite runs start(s) onto end(t)
// (orientable gluing); same runs start(s) onto start(t) (real case only).
enum class Glue : std::uint8_t { opposite = 0, same = 1 };

struct Side {
  int partner = -1;  // -1: boundary side
  Glue glue = Glue::opposite;
};

// Oriented polygons ("faces") whose sides are optionally glued in pairs.
// Sides are numbered face by face; faces[j] lists the sides of face j in
// cyclic order starting at its marked corner (the start of faces[j][0]).
// A face without sides is a single marked point. All derived data are
// computed at construction; the object is immutable.
class RibbonGraph {
 public:
  RibbonGraph(std::vector<std::vector<int>> faces, std::vector<Side> sides);

  int num_faces() const noexcept { return static_cast<int>(faces_.size()); }
  int num_sides() const noexcept { return static_cast<int>(sides_.size()); }
  const std::vector<std::vector<int>>& faces() const noexcept { return faces_; }
  const std::vector<Side>& sides() const noexcept { return sides_; }

  int face_of(int side) const { return face_of_[side]; }
  int position_of(int side) const { return pos_of_[side]; }
  int next(int side) const;  // gamma
  int prev(int side) const;  // gamma^{-1}
  // Vertex ids (0..V-1) of the start and end corner of a side.
  int start_vertex(int side) const { return start_vertex_[side]; }
  int end_vertex(int side) const { return start_vertex_[next(side)]; }
  // Vertex carrying the mark of face j.
  int marked_vertex(int face) const { return marked_vertex_[face]; }

  int num_vertices() const noexcept { return num_vertices_; }
  int num_edges() const noexcept { return num_boundary_edges_ + num_interior_edges_; }
  int num_boundary_edges() const noexcept { return num_boundary_edges_; }
  int num_interior_edges() const noexcept { return num_interior_edges_; }
  int num_boundary_vertices() const noexcept { return num_boundary_vertices_; }
  int num_interior_vertices() const noexcept { return num_vertices_ - num_boundary_vertices_; }
  // Edge-ends at each vertex (a loop counts twice) and boundary edge-ends.
  const std::vector<int>& degrees() const noexcept { return degree_; }
  const std::vector<int>& boundary_degrees() const noexcept { return boundary_degree_; }
  bool is_marked(int vertex) const { return marked_[vertex]; }
  bool has_point_face() const;

  int euler_characteristic() const noexcept { return num_vertices_ - num_edges() + num_faces(); }
  int components() const noexcept { return components_; }
  // Total Euler genus g and boundary circles t: chi = 2c - g - t for c components.
  int genus() const noexcept { return genus_; }
  int punctures() const noexcept { return punctures_; }
  bool orientable() const noexcept { return orientable_; }
  bool closed() const noexcept { return punctures_ == 0; }
  // Boundary circles as sequences of (side, +1/-1 traversal direction).
  const std::vector<std::vector<std::pair<int, int>>>& boundary_cycles() const noexcept { return cycles_; }

  // Canonical text encoding: equal iff the graphs agree as marked, face-labelled objects.
  std::string canonical() const;

 private:
  std::vector<std::vector<int>> faces_;
  std::vector<Side> sides_;
  std::vector<int> face_of_, pos_of_;
  std::vector<int> start_vertex_;
  std::vector<int> marked_vertex_;
  std::vector<int> point_vertex_;  // per face, vertex id for empty faces, else -1
  std::vector<int> degree_, boundary_degree_;
  std::vector<char> marked_;
  int num_vertices_ = 0;
  int num_boundary_edges_ = 0;
  int num_interior_edges_ = 0;
  int num_boundary_vertices_ = 0;
  int components_ = 0;
  int genus_ = 0;
  int punctures_ = 0;
  bool orientable_ = true;
  std::vector<std::vector<std::pair<int, int>>> cycles_;
};

// Glues polygons of perimeters k_1..k_s. pairs[i] = (u, v) are global side
// indices (face 0 owns 0..k_1-1, ...); glue[i] their orientation. marks[j]
// is the corner of face j carrying its marked point (default 0); faces are
// rotated so the mark sits at position 0.
RibbonGraph glue_polygons(const std::vector<int>& perimeters, const std::vector<std::pair<int, int>>& pairs,
                          const std::vector<Glue>& glue, const std::vector<int>& marks = {});

// Contracted ribbon graph: no leaves and no unmarked divalent vertices.
class Diagram {
 public:
  explicit Diagram(RibbonGraph graph);
  const RibbonGraph& graph() const noexcept { return graph_; }
  // No vertex of degree >= 3 (circles, points, projective planes, ...).
  bool degenerate() const noexcept { return degenerate_; }
  std::string canonical() const { return graph_.canonical(); }

 private:
  RibbonGraph graph_;
  bool degenerate_;
};

// Deletes leaves (marks slide to the root of their tree), then suppresses
// unmarked divalent vertices by merging their two edges. Preserves chi, g, t, s.
Diagram okounkov_contract(const RibbonGraph& graph);

struct DiagramCounts {
  int v = 0, e = 0, v_b = 0, e_b = 0, v_int = 0, e_int = 0;
};

struct DiagramClass {
  bool trivalent = false;   // not degenerate, unmarked degree 3, marked degree 2
  bool typical = false;     // trivalent, no interior vertex, marks on the boundary
  bool locally_trivalent = false;  // unmarked degree 3, marked degree 2 (degenerate allowed)
  bool distinct_marks = false;     // the s marks sit on s different vertices
  DiagramCounts counts;
};

DiagramClass classify_diagram(const Diagram& d);

// Lemma-style checks on one diagram; empty vector means all hold.
std::vector<std::string> check_graph_lemmas(const Diagram& d);

struct EnumeratedDiagram {
  Diagram diagram;
  std::vector<int> perimeters;  // first gluing (in enumeration order) producing it
  long long multiplicity = 0;   // number of gluings contracting to it (over all perimeters)
};

// Every gluing of s polygons with sum of perimeters <= k_budget (each >= 1),
// both orientations per pair when real, contracted and deduplicated by
// canonical form; sorted by canonical form. Throws BudgetError above 10.
std::vector<EnumeratedDiagram> enumerate_small_diagrams(int k_budget, int s, bool real = true, int threads = 1);

// All gluings of polygons with the given perimeters; calls fn(graph) for each.
// Returns the number of gluings visited.
template <class Fn>
long long for_each_gluing(const std::vector<int>& perimeters, bool real, Fn&& fn);

// Distinct contracted diagrams for one perimeter list, with multiplicities.
std::vector<EnumeratedDiagram> contracted_diagrams(const std::vector<int>& perimeters, bool real = true);

// Upper bound 128^{g+t+2s} (g+t+2s)^{g+t+3s-3} / (s-1)! on trivalent diagrams; log and value.
double log_trivalent_count_bound(int g, int t, int s);
double trivalent_count_bound(int g, int t, int s);

// Diagram document: faces as side lists with partner/glue/type, vertices with degrees.
nlohmann::json diagram_to_json(const Diagram& d);
Diagram diagram_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------

namespace detail {

// Perfect matchings of `items` (sorted); calls fn(pairs).
template <class Fn>
void for_each_matching(std::vector<int>& items, std::vector<std::pair<int, int>>& pairs, Fn& fn) {
  if (items.empty()) {
    fn(pairs);
    return;
  }
  const int first = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) {
    const int other = items[i];
    std::vector<int> rest;
    rest.reserve(items.size() - 2);
    for (std::size_t j = 1; j < items.size(); ++j)
      if (j != i) rest.push_back(items[j]);
    pairs.emplace_back(first, other);
    for_each_matching(rest, pairs, fn);
    pairs.pop_back();
  }
}

}  // namespace detail

template <class Fn>
long long for_each_gluing(const std::vector<int>& perimeters, bool real, Fn&& fn) {
  int k = 0;
  for (int p : perimeters) k += p;
  if (k > 30) throw std::length_error("for_each_gluing: too many sides");
  long long visited = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<Glue> glue;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    if (__builtin_popcount(mask) % 2) continue;
    std::vector<int> items;
    for (int i = 0; i < k; ++i)
      if (mask >> i & 1u) items.push_back(i);
    auto on_matching = [&](const std::vector<std::pair<int, int>>& m) {
      const int np = static_cast<int>(m.size());
      const std::uint32_t flag_count = real ? (1u << np) : 1u;
      for (std::uint32_t flags = 0; flags < flag_count; ++flags) {
        glue.assign(np, Glue::opposite);
        for (int i = 0; i < np; ++i)
          if (flags >> i & 1u) glue[i] = Glue::same;
        ++visited;
        fn(glue_polygons(perimeters, m, glue));
      }
    };
    detail::for_each_matching(items, pairs, on_matching);
  }
  return visited;
}

}  // namespace bbp
