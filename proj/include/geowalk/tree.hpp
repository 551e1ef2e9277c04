#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "geowalk/words.hpp"

namespace geowalk {

// Geometry of the Cayley tree of a free group.  Vertices are reduced words;
// the word metric makes the tree 0-hyperbolic, which is what several of the
// exact (tolerance-free) checks below rely on.

// Vertex path of the unique geodesic segment.  vertices.front() == from,
// vertices.back() == to, consecutive vertices at distance one.
struct TreeGeodesic {
    std::vector<ReducedWord> vertices;

    std::int64_t length() const { return static_cast<std::int64_t>(vertices.size()) - 1; }
};

TreeGeodesic tree_geodesic(const ReducedWord& from, const ReducedWord& to);

// (y, z)_x = (d(x,y) + d(x,z) - d(y,z)) / 2.  On the tree this is an integer
// and equals the distance from x to the segment [y, z].
std::int64_t gromov_product(const ReducedWord& x, const ReducedWord& y, const ReducedWord& z);

// min over vertices of the segment; direct evaluation used as the reference
// route for the Gromov-product identity.
std::int64_t distance_to_segment(const ReducedWord& x, const TreeGeodesic& seg);

// End of the tree, represented by a finite approximating prefix.  The first
// stable_length letters are certified (e.g. shared by a whole observation
// window); the rest of the prefix is the best current guess beyond that.
struct TreeEnd {
    ReducedWord prefix;
    std::size_t stable_length = 0;

    ReducedWord certified() const { return prefix.prefix(stable_length); }
};

// Certified end estimate from a list of vertices: the returned stable_length
// is the length of the longest prefix shared by the final quarter of the
// list (the last ceil(n/4) entries), and prefix is the final vertex.
TreeEnd end_estimate(const std::vector<ReducedWord>& images);

// Deepest vertex lying on every ray toward both ends; requires the certified
// prefixes to diverge at an index visible in both.
ReducedWord confluence(const TreeEnd& xi, const TreeEnd& eta);

// Bi-infinite vertex path through confluence(xi, eta), truncated to what the
// end prefixes support.  Parameter 0 sits at the confluence and the positive
// direction runs toward xi.  Beyond the known prefixes evaluation clamps to
// the last known vertex, so callers should keep |t| within reach().
struct TreePencil {
    ReducedWord xi_prefix;   // full approximating prefix toward xi
    ReducedWord eta_prefix;  // full approximating prefix toward eta
    std::size_t confluence_len = 0;

    std::int64_t reach_forward() const {
        return static_cast<std::int64_t>(xi_prefix.size()) -
               static_cast<std::int64_t>(confluence_len);
    }
    std::int64_t reach_backward() const {
        return static_cast<std::int64_t>(eta_prefix.size()) -
               static_cast<std::int64_t>(confluence_len);
    }

    ReducedWord vertex_at(std::int64_t t) const;

    // Distance from w to the point at parameter t, with fractional t taken
    // inside the corresponding edge of the metric tree.
    double param_distance(const ReducedWord& w, double t) const;

    // Exact distance from w to the whole line.
    std::int64_t nearest_vertex_distance(const ReducedWord& w) const;
    double nearest_distance(const ReducedWord& w) const {
        return static_cast<double>(nearest_vertex_distance(w));
    }

    // Same quantities from streaming statistics (|w|, lcp with each prefix)
    // so callers never have to materialise path vertices.
    std::int64_t nearest_from_stats(std::int64_t wlen, std::int64_t lcp_xi,
                                    std::int64_t lcp_eta) const;
    double param_distance_from_stats(std::int64_t wlen, std::int64_t lcp_xi,
                                     std::int64_t lcp_eta, double t) const;
};

TreePencil pencil_line(const TreeEnd& xi, const TreeEnd& eta);

// Image of an end under left multiplication.  Fails if cancellation swallows
// the whole certified prefix.
TreeEnd act_on_end(const FreeGroup& G, const ReducedWord& g, const TreeEnd& end);

// Incrementally tracks the common prefix length of a mutating word against a
// fixed target.  Feed it the same push/pop sequence applied to the word.
class LcpTracker {
public:
    LcpTracker() = default;
    explicit LcpTracker(const ReducedWord* target) : target_(target) {}

    void reset(const ReducedWord* target) {
        target_ = target;
        len_ = 0;
        lcp_ = 0;
    }

    // Call before/after mutating the tracked word by one letter.
    void on_push(Letter pushed) {
        if (lcp_ == len_ && len_ < static_cast<std::int64_t>(target_->size()) &&
            target_->letters[static_cast<std::size_t>(len_)] == pushed)
            ++lcp_;
        ++len_;
    }
    void on_pop() {
        --len_;
        if (lcp_ > len_) lcp_ = len_;
    }

    std::int64_t lcp() const { return lcp_; }
    std::int64_t word_length() const { return len_; }

private:
    const ReducedWord* target_ = nullptr;
    std::int64_t len_ = 0;
    std::int64_t lcp_ = 0;
};

} // namespace geowalk
