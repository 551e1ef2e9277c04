#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geowalk/tree.hpp"
#include "geowalk/words.hpp"

namespace geowalk {

struct TreeLexLess {
    bool operator()(const ReducedWord& u, const ReducedWord& v) const {
        return tree_lex_less(u, v);
    }
};

// Finitely supported lamp configuration on the tree, values in Z_m.  Only
// nonzero residues are stored; an absent vertex reads as 0.
struct LampConfig {
    int modulus = 2;
    std::map<ReducedWord, int, TreeLexLess> entries;

    explicit LampConfig(int m = 2);

    int value_at(const ReducedWord& v) const;
    // Adds delta mod m at v, dropping the entry when the sum lands on 0.
    void add_at(const ReducedWord& v, int delta);

    bool operator==(const LampConfig& o) const {
        return modulus == o.modulus && entries == o.entries;
    }
    bool operator!=(const LampConfig& o) const { return !(*this == o); }
};

// Group element of Z_m wr F_k, which is also a vertex of its Cayley graph:
// the walker's tree position plus the current lamp configuration.
struct LampState {
    ReducedWord pos;
    LampConfig lamps;

    bool operator==(const LampState& o) const {
        return pos == o.pos && lamps == o.lamps;
    }
    bool operator!=(const LampState& o) const { return !(*this == o); }
};

// Number of edges of the smallest subtree containing the root e and every
// listed vertex, i.e. the count of distinct nonempty prefixes.
std::int64_t steiner_edge_count(std::vector<ReducedWord> vertices);

// Edge path in the Cayley graph; length() counts generator steps.
struct CayleyPath {
    std::vector<LampState> states;
    std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
};

// The wreath product Z_m wr F_k acting on its own Cayley graph by left
// multiplication, with the word metric of the standard generating set
// (tree moves plus single-lamp presses at the walker's position).
struct LampGroup {
    int modulus = 2;
    int rank = 2;
    FreeGroup tree;

    using Element = LampState;
    using Point = LampState;

    LampGroup(int m, int k);

    Element identity() const { return LampState{ReducedWord{}, LampConfig(modulus)}; }
    // (x, f) * (y, g) = (x y, f + g shifted by x).
    Element compose(const Element& u, const Element& v) const;
    Element inverse(const Element& u) const;
    Point basepoint() const { return identity(); }
    Point act(const Element& g, const Point& p) const { return compose(g, p); }
    double distance(const Point& u, const Point& v) const;

    // Exact word length: lamp presses (min(v, m-v) each) plus twice the
    // Steiner subtree of {e, pos} and the lamp support, minus |pos|.  The
    // walker's cheapest route covers every branch edge twice and every edge
    // toward its final position once.
    std::int64_t word_length(const Element& g) const;

    // Tree moves a1, a1^-1, ..., ak, ak^-1, then the lamp press (e, +delta_e)
    // and, when m > 2, its inverse.  For m = 2 the press is an involution and
    // appears once.
    std::vector<Element> generators() const;

    // "pos=<word>; lamps=<word>:<value>,..." with entries in tree order.
    std::string element_literal(const Element& g) const;
    Element parse_element(const std::string& text) const;
    std::size_t element_size(const Element& g) const;
};

std::int64_t lamp_word_distance(const LampGroup& G, const LampState& u, const LampState& v);

// One step of a canonical route: exactly one of move/press is nonzero.
// A move walks one tree edge, a press adds the given delta to the lamp at
// the walker's position.
struct RouteOp {
    Letter move = 0;
    std::int8_t press = 0;
};

// Generator script of the canonical geodesic from u to v: depth-first over
// the Steiner subtree of the difference, children in tree order, branches
// hanging off the walker path served before crossing past their attachment
// point, lamps pressed to their target the first time the route arrives.
// The op count equals lamp_word_distance(G, u, v) and the tree projection
// crosses each edge of [pos(u), pos(v)] exactly once.
std::vector<RouteOp> lamp_route(const LampGroup& G, const LampState& u, const LampState& v);

// The same geodesic with every intermediate state materialized.  Intended
// for small instances; long segments should replay the route instead.
CayleyPath lamp_geodesic(const LampGroup& G, const LampState& u, const LampState& v);

// Forward-only replay of a route from its start state.
class RouteCursor {
  public:
    RouteCursor(const LampGroup& G, LampState start, const std::vector<RouteOp>& ops);
    // State after the first t ops; t must not decrease across calls.
    const LampState& at(std::size_t t);

  private:
    const LampGroup* group_;
    const std::vector<RouteOp>* ops_;
    LampState state_;
    std::size_t consumed_ = 0;
};

// How many times the path's tree projection traverses each edge of the
// tree geodesic [x, y], reported edge by edge from x to y.
std::vector<int> path_edge_crossings(const CayleyPath& path, const ReducedWord& x,
                                     const ReducedWord& y);

// Boundary datum of a divergent walk: a tree end plus the lamp entries that
// have already frozen outside the end's certified cone.
struct LimitConfiguration {
    TreeEnd end;
    LampConfig lamps;
    std::int64_t stabilization_radius = 0;

    explicit LimitConfiguration(int m = 2) : lamps(m) {}
};

// Estimates the limit configuration from a sample path: the end estimate of
// the positions, together with the lamp entries constant across the final
// quarter of the path that lie outside the certified cone.  While the end
// is uncertified every stable entry is reported.
LimitConfiguration limit_estimate(const std::vector<LampState>& images);

// Exact Cayley-ball distance table, keyed by element literal.
struct LampBallTable {
    std::int64_t radius = 0;
    std::unordered_map<std::string, std::int64_t> dist;

    std::optional<std::int64_t> lookup(const LampGroup& G, const LampState& g) const;
};

// Breadth-first enumeration of the ball of the given radius.  The budget
// bounds the number of stored states.
LampBallTable lamp_ball_table(const LampGroup& G, std::int64_t radius,
                              std::size_t budget = 5'000'000);

} // namespace geowalk
