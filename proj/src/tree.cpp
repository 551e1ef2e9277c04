#include "geowalk/tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geowalk {

TreeGeodesic tree_geodesic(const ReducedWord& from, const ReducedWord& to) {
    const std::size_t p = common_prefix_length(from, to);
    TreeGeodesic seg;
    seg.vertices.reserve(from.size() + to.size() - 2 * p + 1);
    // Walk up from `from` to the meet, then down to `to`.
    for (std::size_t len = from.size(); len > p; --len)
        seg.vertices.push_back(from.prefix(len));
    for (std::size_t len = p; len <= to.size(); ++len)
        seg.vertices.push_back(to.prefix(len));
    return seg;
}

std::int64_t gromov_product(const ReducedWord& x, const ReducedWord& y, const ReducedWord& z) {
    const std::int64_t s = word_distance(x, y) + word_distance(x, z) - word_distance(y, z);
    // Tree distances make the sum even; the product is a whole number here.
    return s / 2;
}

std::int64_t distance_to_segment(const ReducedWord& x, const TreeGeodesic& seg) {
    std::int64_t best = -1;
    for (const auto& v : seg.vertices) {
        const std::int64_t d = word_distance(x, v);
        if (best < 0 || d < best) best = d;
    }
    return best;
}

TreeEnd end_estimate(const std::vector<ReducedWord>& images) {
    if (images.empty()) throw std::invalid_argument("end_estimate: empty image list");
    const std::size_t n = images.size();
    const std::size_t window = (n + 3) / 4; // final quarter, at least one entry
    const ReducedWord& last = images.back();
    // Shared prefix of the window = min of each entry's agreement with the
    // last one.
    std::size_t shared = last.size();
    for (std::size_t i = n - window; i + 1 < n; ++i)
        shared = std::min(shared, common_prefix_length(images[i], last));
    TreeEnd end;
    end.prefix = last;
    end.stable_length = shared;
    return end;
}

ReducedWord confluence(const TreeEnd& xi, const TreeEnd& eta) {
    const ReducedWord cx = xi.certified();
    const ReducedWord ce = eta.certified();
    const std::size_t p = common_prefix_length(cx, ce);
    if (p >= std::min(cx.size(), ce.size()))
        throw std::invalid_argument(
            "confluence: ends not distinguishable at the given precision");
    return cx.prefix(p);
}

TreePencil pencil_line(const TreeEnd& xi, const TreeEnd& eta) {
    const ReducedWord c = confluence(xi, eta);
    TreePencil line;
    line.xi_prefix = xi.prefix;
    line.eta_prefix = eta.prefix;
    line.confluence_len = c.size();
    return line;
}

ReducedWord TreePencil::vertex_at(std::int64_t t) const {
    if (t >= 0) {
        const std::int64_t level = std::min<std::int64_t>(
            static_cast<std::int64_t>(confluence_len) + t,
            static_cast<std::int64_t>(xi_prefix.size()));
        return xi_prefix.prefix(static_cast<std::size_t>(level));
    }
    const std::int64_t level = std::min<std::int64_t>(
        static_cast<std::int64_t>(confluence_len) - t,
        static_cast<std::int64_t>(eta_prefix.size()));
    return eta_prefix.prefix(static_cast<std::size_t>(level));
}

double TreePencil::param_distance(const ReducedWord& w, double t) const {
    const double mag = std::abs(t);
    const std::int64_t lo = static_cast<std::int64_t>(std::floor(mag));
    const double frac = mag - static_cast<double>(lo);
    const std::int64_t s = t >= 0 ? 1 : -1;
    const ReducedWord lo_v = vertex_at(s * lo);
    const double d_lo = static_cast<double>(word_distance(w, lo_v));
    if (frac == 0.0) return d_lo;
    const ReducedWord hi_v = vertex_at(s * (lo + 1));
    // Clamped past the known prefix the edge collapses onto its endpoint.
    if (hi_v == lo_v) return d_lo;
    const double d_hi = static_cast<double>(word_distance(w, hi_v));
    // Point inside the edge: the geodesic to it runs through one endpoint.
    return std::min(d_lo + frac, d_hi + (1.0 - frac));
}

namespace {

// d(w, vertex at depth m on a fixed ray prefix), given |w| and lcp(w, prefix).
inline std::int64_t vertex_dist(std::int64_t wlen, std::int64_t lcp, std::int64_t m) {
    return wlen + m - 2 * std::min(lcp, m);
}

// Min over vertex depths m in [lo, hi] of vertex_dist; minimiser is lcp
// clamped into the range.
inline std::int64_t ray_dist(std::int64_t wlen, std::int64_t lcp, std::int64_t lo,
                             std::int64_t hi) {
    const std::int64_t m = std::clamp(lcp, lo, hi);
    return vertex_dist(wlen, lcp, m);
}

} // namespace

std::int64_t TreePencil::nearest_from_stats(std::int64_t wlen, std::int64_t lcp_xi,
                                            std::int64_t lcp_eta) const {
    const std::int64_t c = static_cast<std::int64_t>(confluence_len);
    const std::int64_t dx =
        ray_dist(wlen, lcp_xi, c, static_cast<std::int64_t>(xi_prefix.size()));
    const std::int64_t de =
        ray_dist(wlen, lcp_eta, c, static_cast<std::int64_t>(eta_prefix.size()));
    return std::min(dx, de);
}

double TreePencil::param_distance_from_stats(std::int64_t wlen, std::int64_t lcp_xi,
                                             std::int64_t lcp_eta, double t) const {
    const std::int64_t c = static_cast<std::int64_t>(confluence_len);
    const bool forward = t >= 0;
    const std::int64_t lcp = forward ? lcp_xi : lcp_eta;
    const std::int64_t plen = static_cast<std::int64_t>(
        forward ? xi_prefix.size() : eta_prefix.size());
    const double level = static_cast<double>(c) + std::abs(t);
    if (level >= static_cast<double>(plen)) // clamp past the known prefix
        return static_cast<double>(vertex_dist(wlen, lcp, plen));
    const std::int64_t lo = static_cast<std::int64_t>(std::floor(level));
    const double frac = level - static_cast<double>(lo);
    const double d_lo = static_cast<double>(vertex_dist(wlen, lcp, lo));
    if (frac == 0.0) return d_lo;
    const double d_hi = static_cast<double>(vertex_dist(wlen, lcp, lo + 1));
    // Point inside the edge: the geodesic to it runs through one endpoint.
    return std::min(d_lo + frac, d_hi + (1.0 - frac));
}

std::int64_t TreePencil::nearest_vertex_distance(const ReducedWord& w) const {
    const auto wlen = static_cast<std::int64_t>(w.size());
    const auto lx = static_cast<std::int64_t>(common_prefix_length(w, xi_prefix));
    const auto le = static_cast<std::int64_t>(common_prefix_length(w, eta_prefix));
    return nearest_from_stats(wlen, lx, le);
}

TreeEnd act_on_end(const FreeGroup& G, const ReducedWord& g, const TreeEnd& end) {
    const ReducedWord moved = G.compose(g, end.prefix);
    const std::size_t cancelled = (g.size() + end.prefix.size() - moved.size()) / 2;
    if (cancelled >= end.stable_length)
        throw std::invalid_argument(
            "act_on_end: cancellation swallows the certified prefix");
    TreeEnd out;
    out.prefix = moved;
    out.stable_length = g.size() + end.stable_length - 2 * cancelled;
    return out;
}

} // namespace geowalk
