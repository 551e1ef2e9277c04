#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "geowalk/words.hpp"

namespace geowalk {

// Summable decreasing conformal factors used to rescale Cayley-graph edges.
// geom: lambda^r with 0 < lambda < 1; poly: (1 + r)^-p with p > 1.
struct ScalingFunction {
    enum class Kind { Geometric, Polynomial };
    Kind kind = Kind::Geometric;
    double param = 0.5;

    double value(std::int64_t r) const;
    // Sum_{j >= r} value(j), exact for the geometric series and via an
    // Euler-Maclaurin tail for the polynomial one (no naive truncation).
    double tail(std::int64_t r) const;

    static ScalingFunction geometric(double lambda);
    static ScalingFunction polynomial(double p);
    // "geom:0.5" / "poly:2.0"
    static ScalingFunction parse(const std::string& text);
    std::string to_string() const;
};

// Weight of the Cayley-tree edge {a, b}: min(F(|a|), F(|b|)).  The words
// must differ by one letter.
double edge_weight(const ReducedWord& a, const ReducedWord& b, const ScalingFunction& F);

struct FloydDistance {
    double value = 0.0;
    bool certified = false;
};

// Rescaled length metric between vertices of the free-group Cayley tree,
// restricted to the ball of word-radius R_t.  Requires |u|, |v| <= R_t - 2.
// Certification recomputes at R_t + 2 and checks agreement below 1e-12;
// on a tree the unique simple path is optimal and excursions past the
// truncation shell cost at least 2 F(R_t + 1) extra, so the certificate
// records that enlarging the ball cannot improve the value.
FloydDistance floyd_distance(const ReducedWord& u, const ReducedWord& v,
                             const ScalingFunction& F, std::int64_t truncation_radius);

// 4 r F(r) + 2 sum_{j >= r} F(j) with r = d(e, [u, v]); an upper bound for
// the rescaled distance between u and v.
double karlsson_bound(const ReducedWord& u, const ReducedWord& v, const ScalingFunction& F);
double karlsson_bound_at(std::int64_t r, const ScalingFunction& F);

// Explicit weighted ball with Dijkstra, the small-scale reference route for
// floyd_distance.  Vertex 0 is the identity.
struct FloydBall {
    FreeGroup group;
    std::int64_t truncation_radius = 0;
    ScalingFunction scaling;
    std::vector<ReducedWord> vertices;
    std::unordered_map<ReducedWord, std::size_t, WordHash> index;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;

    static FloydBall build(const FreeGroup& G, std::int64_t radius, const ScalingFunction& F,
                           std::size_t budget = 2'000'000);

    double dijkstra(const ReducedWord& u, const ReducedWord& v) const;
};

} // namespace geowalk
