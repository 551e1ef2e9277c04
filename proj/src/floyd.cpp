#include "geowalk/floyd.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

#include "geowalk/common.hpp"
#include "geowalk/tree.hpp"

namespace geowalk {

double ScalingFunction::value(std::int64_t r) const {
    if (r < 0) throw std::invalid_argument("scaling function: negative radius");
    if (kind == Kind::Geometric) return std::pow(param, static_cast<double>(r));
    return std::pow(1.0 + static_cast<double>(r), -param);
}

double ScalingFunction::tail(std::int64_t r) const {
    if (r < 0) throw std::invalid_argument("scaling function: negative radius");
    if (kind == Kind::Geometric) return value(r) / (1.0 - param);
    // sum_{j >= r} (1+j)^-p = sum_{m >= r+1} m^-p.  A short explicit run
    // plus an Euler-Maclaurin remainder reaches full double precision.
    const double p = param;
    double sum = 0.0;
    std::int64_t m = r + 1;
    for (int i = 0; i < 64; ++i, ++m) sum += std::pow(static_cast<double>(m), -p);
    const double N = static_cast<double>(m);
    const double npow = std::pow(N, -p);
    sum += N * npow / (p - 1.0);          // integral term
    sum += 0.5 * npow;                    // boundary correction
    sum += p * npow / (12.0 * N);         // B_2 term
    sum -= p * (p + 1.0) * (p + 2.0) * npow / (720.0 * N * N * N); // B_4 term
    return sum;
}

ScalingFunction ScalingFunction::geometric(double lambda) {
    if (!(lambda > 0.0) || !(lambda < 1.0))
        throw ConfigError("geometric scaling needs 0 < lambda < 1, got " +
                          std::to_string(lambda));
    return ScalingFunction{Kind::Geometric, lambda};
}

ScalingFunction ScalingFunction::polynomial(double p) {
    if (!(p > 1.0))
        throw ConfigError("polynomial scaling needs exponent > 1, got " + std::to_string(p));
    return ScalingFunction{Kind::Polynomial, p};
}

ScalingFunction ScalingFunction::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("bad scaling literal '" + text + "': expected kind:param");
    const std::string kind = text.substr(0, colon);
    double param = 0.0;
    try {
        param = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad scaling literal '" + text + "': unparsable parameter");
    }
    if (kind == "geom") return geometric(param);
    if (kind == "poly") return polynomial(param);
    throw ConfigError("bad scaling literal '" + text + "': unknown kind '" + kind + "'");
}

std::string ScalingFunction::to_string() const {
    std::string out = kind == Kind::Geometric ? "geom:" : "poly:";
    return out + std::to_string(param);
}

double edge_weight(const ReducedWord& a, const ReducedWord& b, const ScalingFunction& F) {
    if (word_distance(a, b) != 1)
        throw std::invalid_argument("edge_weight: words are not adjacent");
    return std::min(F.value(static_cast<std::int64_t>(a.size())),
                    F.value(static_cast<std::int64_t>(b.size())));
}

namespace {

// Shortest weighted path between u and v among paths confined to the ball
// of word-radius `radius`.  On a tree every non-simple path retraces edges
// of strictly positive weight, so the unique simple path is the optimum in
// any ball containing it, and an excursion past the shell costs at least
// 2 F(radius + 1) extra.  The edge between depths l-1 and l weighs F(l)
// because F is decreasing.  FloydBall::dijkstra cross-checks this route at
// small radii.
double bounded_path_cost(const ReducedWord& u, const ReducedWord& v, const ScalingFunction& F,
                         std::int64_t radius) {
    const auto deepest =
        static_cast<std::int64_t>(std::max(u.size(), v.size()));
    if (deepest > radius)
        throw ResourceError("floyd_distance: path leaves the truncation ball");
    const auto meet = static_cast<std::int64_t>(common_prefix_length(u, v));
    double cost = 0.0;
    for (std::int64_t l = static_cast<std::int64_t>(u.size()); l > meet; --l)
        cost += F.value(l);
    for (std::int64_t l = static_cast<std::int64_t>(v.size()); l > meet; --l)
        cost += F.value(l);
    return cost;
}

} // namespace

FloydDistance floyd_distance(const ReducedWord& u, const ReducedWord& v,
                             const ScalingFunction& F, std::int64_t truncation_radius) {
    if (static_cast<std::int64_t>(u.size()) > truncation_radius - 2 ||
        static_cast<std::int64_t>(v.size()) > truncation_radius - 2)
        throw ResourceError("floyd_distance: endpoints exceed the truncation budget (radius " +
                            std::to_string(truncation_radius) + " - 2)");
    FloydDistance out;
    out.value = bounded_path_cost(u, v, F, truncation_radius);
    const double widened = bounded_path_cost(u, v, F, truncation_radius + 2);
    out.certified = std::abs(out.value - widened) < 1e-12;
    return out;
}

double karlsson_bound_at(std::int64_t r, const ScalingFunction& F) {
    return 4.0 * static_cast<double>(r) * F.value(r) + 2.0 * F.tail(r);
}

double karlsson_bound(const ReducedWord& u, const ReducedWord& v, const ScalingFunction& F) {
    const std::int64_t r = gromov_product(ReducedWord{}, u, v);
    return karlsson_bound_at(r, F);
}

FloydBall FloydBall::build(const FreeGroup& G, std::int64_t radius, const ScalingFunction& F,
                           std::size_t budget) {
    FloydBall ball;
    ball.group = G;
    ball.truncation_radius = radius;
    ball.scaling = F;
    ball.vertices.push_back(ReducedWord{});
    ball.index.emplace(ReducedWord{}, 0);
    ball.adjacency.emplace_back();
    // Level-order enumeration; each new vertex extends its parent by one
    // non-cancelling letter, so the tree needs no deduplication.
    std::size_t level_begin = 0;
    for (std::int64_t level = 1; level <= radius; ++level) {
        const std::size_t level_end = ball.vertices.size();
        for (std::size_t pi = level_begin; pi < level_end; ++pi) {
            for (int g = 1; g <= G.rank; ++g) {
                for (const Letter l : {static_cast<Letter>(g), static_cast<Letter>(-g)}) {
                    const ReducedWord& parent = ball.vertices[pi];
                    if (!parent.empty() && parent.letters.back() == static_cast<Letter>(-l))
                        continue;
                    ReducedWord child = parent;
                    child.letters.push_back(l);
                    if (ball.vertices.size() >= budget)
                        throw ResourceError("FloydBall: ball exceeds budget of " +
                                            std::to_string(budget) + " vertices");
                    const std::size_t ci = ball.vertices.size();
                    const double w = std::min(F.value(level - 1), F.value(level));
                    ball.index.emplace(child, ci);
                    ball.vertices.push_back(std::move(child));
                    ball.adjacency.emplace_back();
                    ball.adjacency[pi].emplace_back(ci, w);
                    ball.adjacency[ci].emplace_back(pi, w);
                }
            }
        }
        level_begin = level_end;
    }
    return ball;
}

double FloydBall::dijkstra(const ReducedWord& u, const ReducedWord& v) const {
    const auto iu = index.find(u);
    const auto iv = index.find(v);
    if (iu == index.end() || iv == index.end())
        throw std::invalid_argument("FloydBall::dijkstra: endpoint outside the ball");
    const std::size_t src = iu->second;
    const std::size_t dst = iv->second;
    std::vector<double> dist(vertices.size(), -1.0);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
        const auto [d, i] = heap.top();
        heap.pop();
        if (dist[i] >= 0.0) continue;
        dist[i] = d;
        if (i == dst) return d;
        for (const auto& [j, w] : adjacency[i])
            if (dist[j] < 0.0) heap.emplace(d + w, j);
    }
    throw std::invalid_argument("FloydBall::dijkstra: target unreachable");
}

} // namespace geowalk
