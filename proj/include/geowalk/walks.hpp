#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_set>
#include <vector>

#include "geowalk/measure.hpp"
#include "geowalk/rng.hpp"

namespace geowalk {

// Default cap on the exact size of any stored group element (letters of a
// word, support entries of a lamp configuration).  Hitting it is a resource
// error, reported with the offending step index.
inline constexpr std::size_t DEFAULT_ELEMENT_BUDGET = std::size_t{1} << 27;

template <class SpaceT, class Element>
void check_element_budget(const SpaceT& space, const Element& g, std::size_t budget,
                          std::int64_t step_index) {
    if constexpr (requires { space.element_size(g); }) {
        if (space.element_size(g) > budget)
            throw ResourceError("element size budget exceeded at step " +
                                std::to_string(step_index));
    }
}

// Forward sample path w_n = g_1 ... g_n: increments, running products, and
// their images of the basepoint, all aligned so index i-1 holds step/prefix
// /image number i.
template <class SpaceT>
struct SamplePath {
    using Element = typename SpaceT::Element;
    using Point = typename SpaceT::Point;

    std::vector<Element> steps;
    std::vector<Element> prefixes;
    std::vector<Point> images;
    Point basepoint;
    std::uint64_t seed = 0;

    std::size_t length() const { return steps.size(); }
};

template <class SpaceT>
SamplePath<SpaceT> walk(const SpaceT& space, const FiniteMeasure<SpaceT>& mu, std::size_t n,
                        const typename SpaceT::Point& basepoint, RngStream& rng,
                        std::uint64_t seed_tag = 0,
                        std::size_t element_budget = DEFAULT_ELEMENT_BUDGET) {
    SamplePath<SpaceT> path;
    path.basepoint = basepoint;
    path.seed = seed_tag;
    path.steps.reserve(n);
    path.prefixes.reserve(n);
    path.images.reserve(n);
    auto w = space.identity();
    for (std::size_t i = 1; i <= n; ++i) {
        const auto& g = mu.sample(rng);
        w = space.compose(w, g);
        check_element_budget(space, w, element_budget, static_cast<std::int64_t>(i));
        path.steps.push_back(g);
        path.prefixes.push_back(w);
        path.images.push_back(space.act(w, basepoint));
    }
    return path;
}

// Two-sided path over increments g_k, |k| <= N.  Forward prefixes are
// w_n = g_1 ... g_n; the backward side stores b_j = g_0^-1 g_-1^-1 ... g_-j^-1,
// the products that converge to the backward boundary point.
template <class SpaceT>
struct BilateralPath {
    using Element = typename SpaceT::Element;
    using Point = typename SpaceT::Point;

    std::int64_t horizon = 0;
    std::vector<Element> steps; // steps[N + k] holds g_k, k in [-N, N]
    std::vector<Element> fwd_prefixes; // w_1 .. w_N
    std::vector<Point> fwd_images;
    std::vector<Element> bwd_prefixes; // b_0 .. b_N
    std::vector<Point> bwd_images;
    Point basepoint;
    std::uint64_t seed = 0;

    const Element& step_at(std::int64_t k) const {
        return steps[static_cast<std::size_t>(horizon + k)];
    }
};

template <class SpaceT>
BilateralPath<SpaceT> bilateral_walk(const SpaceT& space, const FiniteMeasure<SpaceT>& mu,
                                     std::int64_t horizon,
                                     const typename SpaceT::Point& basepoint, RngStream& rng,
                                     std::uint64_t seed_tag = 0,
                                     std::size_t element_budget = DEFAULT_ELEMENT_BUDGET) {
    BilateralPath<SpaceT> path;
    path.horizon = horizon;
    path.basepoint = basepoint;
    path.seed = seed_tag;
    const std::size_t total = static_cast<std::size_t>(2 * horizon + 1);
    path.steps.reserve(total);
    for (std::size_t i = 0; i < total; ++i) path.steps.push_back(mu.sample(rng));
    auto w = space.identity();
    for (std::int64_t n = 1; n <= horizon; ++n) {
        w = space.compose(w, path.step_at(n));
        check_element_budget(space, w, element_budget, n);
        path.fwd_prefixes.push_back(w);
        path.fwd_images.push_back(space.act(w, basepoint));
    }
    auto b = space.identity();
    for (std::int64_t j = 0; j <= horizon; ++j) {
        b = space.compose(b, space.inverse(path.step_at(-j)));
        check_element_budget(space, b, element_budget, -j);
        path.bwd_prefixes.push_back(b);
        path.bwd_images.push_back(space.act(b, basepoint));
    }
    return path;
}

// Re-bases the increment sequence at index k: the new path has increments
// h_j = g_{j+k} and horizon N - |k|.  Forward prefixes of the shifted path
// satisfy w'_n = w_k^-1 w_{k+n}.
template <class SpaceT>
BilateralPath<SpaceT> shift_path(const SpaceT& space, const BilateralPath<SpaceT>& path,
                                 std::int64_t k) {
    const std::int64_t N = path.horizon;
    if (k <= -N || k >= N)
        throw std::invalid_argument("shift_path: |k| must be smaller than the horizon");
    BilateralPath<SpaceT> out;
    out.horizon = N - std::abs(k);
    out.basepoint = path.basepoint;
    out.seed = path.seed;
    for (std::int64_t j = -out.horizon; j <= out.horizon; ++j)
        out.steps.push_back(path.step_at(j + k));
    auto w = space.identity();
    for (std::int64_t n = 1; n <= out.horizon; ++n) {
        w = space.compose(w, out.steps[static_cast<std::size_t>(out.horizon + n)]);
        out.fwd_prefixes.push_back(w);
        out.fwd_images.push_back(space.act(w, out.basepoint));
    }
    auto b = space.identity();
    for (std::int64_t j = 0; j <= out.horizon; ++j) {
        b = space.compose(b, space.inverse(out.steps[static_cast<std::size_t>(out.horizon - j)]));
        out.bwd_prefixes.push_back(b);
        out.bwd_images.push_back(space.act(b, out.basepoint));
    }
    return out;
}

// #{ g : d(x, g x) <= R } by breadth-first enumeration over products of the
// given generators.  Elements beyond radius R are recorded (they bound the
// search) but not expanded; for word metrics this visits exactly the ball
// plus its unit shell.  The enumeration assumes generating sets whose
// reduced products do not re-enter the ball after leaving it, which holds
// for every space instantiated here.
template <class SpaceT>
std::size_t ball_growth(const SpaceT& space,
                        const std::vector<typename SpaceT::Element>& generators, double R,
                        std::size_t budget = 10'000'000) {
    const auto x = space.basepoint();
    std::unordered_set<std::string> seen;
    std::deque<typename SpaceT::Element> frontier;
    const auto e = space.identity();
    seen.insert(space.element_literal(e));
    std::size_t count = space.distance(x, space.act(e, x)) <= R ? 1 : 0;
    frontier.push_back(e);
    while (!frontier.empty()) {
        const auto g = frontier.front();
        frontier.pop_front();
        for (const auto& s : generators) {
            auto h = space.compose(g, s);
            auto key = space.element_literal(h);
            if (!seen.insert(std::move(key)).second) continue;
            if (seen.size() > budget)
                throw ResourceError("ball_growth: enumeration exceeded budget of " +
                                    std::to_string(budget) + " elements");
            if (space.distance(x, space.act(h, x)) <= R) {
                ++count;
                frontier.push_back(std::move(h));
            }
        }
    }
    return count;
}

} // namespace geowalk
