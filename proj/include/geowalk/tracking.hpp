#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geowalk/lamplighter.hpp"
#include "geowalk/measure.hpp"
#include "geowalk/rng.hpp"
#include "geowalk/tree.hpp"
#include "geowalk/walks.hpp"

namespace geowalk {

// In-place right multiplication by one increment.  The generic form rebuilds
// the product; word-based spaces get O(|g|) splicing so million-step walks
// stay linear overall.
template <class SpaceT>
void append_step(const SpaceT& space, typename SpaceT::Element& w,
                 const typename SpaceT::Element& g) {
    w = space.compose(w, g);
}

inline void append_step(const FreeGroup&, ReducedWord& w, const ReducedWord& g) {
    for (Letter l : g.letters) w.push_cancel(l);
}

inline void append_step(const LampGroup& G, LampState& w, const LampState& g) {
    // (x, f) * (y, h): translate h by the old position first, then move.
    for (const auto& [v, val] : g.lamps.entries)
        w.lamps.add_at(G.tree.compose(w.pos, v), val);
    for (Letter l : g.pos.letters) w.pos.push_cancel(l);
}

struct DriftEstimate {
    double a_hat = 0.0;
    double spread = 0.0; // sample standard deviation across trials
    std::vector<double> per_trial;
};

// The tracking statement is vacuous at A = 0, so experiments skip fitting a
// ray when the estimate is statistically indistinguishable from zero.
inline bool zero_drift(const DriftEstimate& d) { return d.a_hat < 3.0 * d.spread; }

// Streams w_n = g_1 ... g_n one increment at a time and reports the mean and
// spread of d(x, w_n x)/n across trials.  Trial t draws from the derived
// stream (master_seed, t), so the result never depends on scheduling.
template <class SpaceT>
DriftEstimate drift_estimate(const SpaceT& space, const FiniteMeasure<SpaceT>& mu,
                             const typename SpaceT::Point& basepoint, std::int64_t n,
                             std::int64_t trials, std::uint64_t master_seed,
                             std::size_t element_budget = DEFAULT_ELEMENT_BUDGET) {
    if (n < 100) throw ConfigError("drift_estimate: n must be >= 100");
    if (trials < 1) throw ConfigError("drift_estimate: trials must be >= 1");
    DriftEstimate out;
    out.per_trial.reserve(static_cast<std::size_t>(trials));
    for (std::int64_t t = 0; t < trials; ++t) {
        RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(t));
        auto w = space.identity();
        for (std::int64_t i = 1; i <= n; ++i) {
            append_step(space, w, mu.sample(rng));
            if ((i & 1023) == 0) check_element_budget(space, w, element_budget, i);
        }
        check_element_budget(space, w, element_budget, n);
        out.per_trial.push_back(space.distance(basepoint, space.act(w, basepoint)) /
                                static_cast<double>(n));
    }
    double sum = 0.0;
    for (double v : out.per_trial) sum += v;
    out.a_hat = sum / static_cast<double>(trials);
    if (trials >= 2) {
        double ss = 0.0;
        for (double v : out.per_trial) ss += (v - out.a_hat) * (v - out.a_hat);
        out.spread = std::sqrt(ss / static_cast<double>(trials - 1));
    }
    return out;
}

// Decadic checkpoint grid 100, 1000, ... up to n.
inline std::vector<std::int64_t> decadic_checkpoints(std::int64_t n) {
    std::vector<std::int64_t> out;
    for (std::int64_t c = 100; c <= n; c *= 10) out.push_back(c);
    return out;
}

struct CheckpointStat {
    std::int64_t n = 0;
    double dist_to_param = 0.0; // d(w_n x, gamma(sign * A * n))
    double e = 0.0;             // dist_to_param / n
    double nearest = 0.0;       // d(w_n x, gamma)
};

struct TrackingReport {
    double drift = 0.0;
    int orientation = 1; // sign s with gamma(s * A * n) tracking the walk
    std::vector<CheckpointStat> checkpoints;
    std::string verdict = "tracked";
};

// Tracking-error profile of a path against a unit-speed geodesic: e_n =
// d(w_n x, gamma(A n))/n at each checkpoint, with the ray orientation chosen
// to minimise the error at the last checkpoint.  The geodesic provides
// param_distance(point, t) and nearest_distance(point).
template <class SpaceT, class GeoT>
TrackingReport tracking_profile(const SamplePath<SpaceT>& path, const GeoT& geo, double A,
                                std::vector<std::int64_t> checkpoints = {}) {
    if (A < 0.0) throw ConfigError("tracking_profile: drift must be nonnegative");
    TrackingReport report;
    report.drift = A;
    const auto limit = static_cast<std::int64_t>(path.length());
    if (checkpoints.empty()) checkpoints = decadic_checkpoints(limit);
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    while (!checkpoints.empty() && (checkpoints.back() > limit || checkpoints.front() < 1)) {
        if (checkpoints.back() > limit) checkpoints.pop_back();
        if (!checkpoints.empty() && checkpoints.front() < 1)
            checkpoints.erase(checkpoints.begin());
    }
    if (checkpoints.empty()) {
        report.verdict = "no-checkpoints";
        return report;
    }
    const std::int64_t last = checkpoints.back();
    const auto& tail = path.images[static_cast<std::size_t>(last - 1)];
    const double ahead = geo.param_distance(tail, A * static_cast<double>(last));
    const double behind = geo.param_distance(tail, -A * static_cast<double>(last));
    report.orientation = ahead <= behind ? 1 : -1;
    for (std::int64_t n : checkpoints) {
        const auto& w = path.images[static_cast<std::size_t>(n - 1)];
        CheckpointStat st;
        st.n = n;
        st.dist_to_param =
            geo.param_distance(w, report.orientation * A * static_cast<double>(n));
        st.e = st.dist_to_param / static_cast<double>(n);
        st.nearest = geo.nearest_distance(w);
        report.checkpoints.push_back(st);
    }
    return report;
}

// Values of the distance-to-pencil function along the forward orbit, with
// increments and the per-step triangle bound.
struct OrbitFunctionTrace {
    std::vector<double> f;          // f[n] = d(w_n x, gamma), n = 0..N
    std::vector<double> g;          // g[n] = f[n+1] - f[n]
    std::vector<double> step_bound; // d(x, g_{n+1} x), aligned with g
};

template <class SpaceT, class GeoT>
OrbitFunctionTrace ergodic_trace(const SpaceT& space, const BilateralPath<SpaceT>& path,
                                 const GeoT& geo) {
    OrbitFunctionTrace tr;
    const std::int64_t N = path.horizon;
    tr.f.reserve(static_cast<std::size_t>(N) + 1);
    tr.f.push_back(geo.nearest_distance(path.basepoint));
    for (std::int64_t n = 1; n <= N; ++n)
        tr.f.push_back(geo.nearest_distance(path.fwd_images[static_cast<std::size_t>(n - 1)]));
    tr.g.reserve(static_cast<std::size_t>(N));
    tr.step_bound.reserve(static_cast<std::size_t>(N));
    for (std::int64_t n = 0; n < N; ++n) {
        tr.g.push_back(tr.f[static_cast<std::size_t>(n + 1)] - tr.f[static_cast<std::size_t>(n)]);
        tr.step_bound.push_back(
            space.distance(path.basepoint, space.act(path.step_at(n + 1), path.basepoint)));
    }
    return tr;
}

// Max over n of |sum_{k<n} g_k - (f_n - f_0)|; zero up to the arithmetic of
// the underlying metric because the sum telescopes.
inline double telescoping_check(const OrbitFunctionTrace& tr) {
    // Kahan summation: a plain running sum of 10^4 increments rounds at the
    // ulp of the partial sums, which alone would dwarf the residual.
    double residual = 0.0, sum = 0.0, carry = 0.0;
    for (std::size_t n = 0; n < tr.g.size(); ++n) {
        const double y = tr.g[n] - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
        residual = std::max(residual, std::abs(sum - (tr.f[n + 1] - tr.f[0])));
    }
    return residual;
}

// Worst violation of |f_{n+1} - f_n| <= d(x, g_{n+1} x); zero when the
// triangle bound holds everywhere.
inline double increment_violation(const OrbitFunctionTrace& tr) {
    double worst = 0.0;
    for (std::size_t n = 0; n < tr.g.size(); ++n)
        worst = std::max(worst, std::abs(tr.g[n]) - tr.step_bound[n]);
    return worst;
}

// Fraction of indices n in [first, last] with f_n <= C.
inline double density(const std::vector<double>& f, double C, std::size_t first,
                      std::size_t last) {
    if (last >= f.size() || first > last)
        throw std::invalid_argument("density: bad index range");
    std::size_t hits = 0;
    for (std::size_t n = first; n <= last; ++n)
        if (f[n] <= C) ++hits;
    return static_cast<double>(hits) / static_cast<double>(last - first + 1);
}

// |{1 <= n <= N : f_n <= C}| / N over a trace of f_0 .. f_N.
inline double density(const std::vector<double>& f, double C) {
    if (f.size() < 2) throw std::invalid_argument("density: trace too short");
    return density(f, C, 1, f.size() - 1);
}

struct VisibilityReport {
    std::vector<std::int64_t> depths;
    std::vector<double> radii; // d(basepoint, connecting segment), per depth
    std::vector<double> running_max;
    bool stabilized = false; // running max flat over the last half
};

// Probes stable visibility: pair_at(depth) yields the two approximating
// endpoints, segment_dist(u, v) the distance from the basepoint to the
// geodesic segment joining them.  The pair is stably visible in the probed
// range when the running maximum stops growing.
template <class PairAt, class SegmentDist>
VisibilityReport visibility_probe(const std::vector<std::int64_t>& depths, PairAt&& pair_at,
                                  SegmentDist&& segment_dist) {
    VisibilityReport out;
    out.depths = depths;
    double peak = 0.0;
    for (std::int64_t d : depths) {
        const auto [u, v] = pair_at(d);
        const double r = segment_dist(u, v);
        peak = std::max(peak, r);
        out.radii.push_back(r);
        out.running_max.push_back(peak);
    }
    if (!out.running_max.empty())
        out.stabilized = out.running_max[out.running_max.size() / 2] == out.running_max.back();
    return out;
}

// Compares the forward end estimate of the k-shifted path against the
// w_k^-1-translate of the unshifted estimate at matched horizons.  Both are
// prefixes of the same translated final word, so their certified parts must
// agree letter for letter.  Returns the index of the first disagreement, or
// nullopt for full agreement.
inline std::optional<std::size_t> equivariance_check(const FreeGroup& space,
                                                     const BilateralPath<FreeGroup>& path,
                                                     std::int64_t k) {
    if (k < 0 || k >= path.horizon)
        throw std::invalid_argument("equivariance_check: k out of range");
    const TreeEnd base = end_estimate(path.fwd_images);
    const ReducedWord wk =
        k == 0 ? space.identity() : path.fwd_prefixes[static_cast<std::size_t>(k - 1)];
    const TreeEnd translated = act_on_end(space, space.inverse(wk), base);

    const BilateralPath<FreeGroup> shifted = shift_path(space, path, k);
    const TreeEnd direct = end_estimate(shifted.fwd_images);

    const ReducedWord a = translated.certified();
    const ReducedWord b = direct.certified();
    const std::size_t upto = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < upto; ++i)
        if (a.letters[i] != b.letters[i]) return i;
    return std::nullopt;
}

// Median of a sample, interpolated for even sizes.
inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

} // namespace geowalk
