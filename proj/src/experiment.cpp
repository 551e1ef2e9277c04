#include "geowalk/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "geowalk/floyd.hpp"
#include "geowalk/rng.hpp"
#include "geowalk/tree.hpp"
#include "geowalk/walks.hpp"

namespace geowalk {

namespace {

constexpr std::int64_t kDriftTrials = 16;
// Salts the internal drift estimate so its streams never collide with the
// tracking trials of the same master seed.
constexpr std::uint64_t kDriftSalt = 0x5eed0ff5e7d81f37ULL;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- small string/number helpers ----------------------------------------

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

std::vector<std::string> split_list(const std::string& v, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const std::size_t next = v.find(sep, pos);
        const std::string part =
            trim(next == std::string::npos ? v.substr(pos) : v.substr(pos, next - pos));
        if (!part.empty()) out.push_back(part);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
    std::int64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(key + ": bad integer '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(key + ": bad unsigned integer '" + v + "'");
    return x;
}

int parse_int(const std::string& key, const std::string& v) {
    const std::int64_t x = parse_i64(key, v);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(key + ": value '" + v + "' out of range");
    return static_cast<int>(x);
}

double parse_f64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": bad number '" + v + "'");
    }
}

std::vector<std::int64_t> parse_i64_list(const std::string& key, const std::string& v) {
    std::vector<std::int64_t> out;
    for (const auto& part : split_list(v, ',')) out.push_back(parse_i64(key, part));
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_i64(std::int64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_u64(std::uint64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::optional<double> opt_of(double v) {
    if (std::isfinite(v)) return v;
    return std::nullopt;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : "na"; }

std::string read_text_file(const std::string& key, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(key + ": cannot open file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

// ---- run plumbing ---------------------------------------------------------

std::vector<std::int64_t> resolved_checkpoints(const ExperimentConfig& cfg) {
    return cfg.checkpoints.empty() ? decadic_checkpoints(cfg.n) : cfg.checkpoints;
}

std::vector<std::int64_t> resolved_depths(const ExperimentConfig& cfg) {
    if (!cfg.depths.empty()) return cfg.depths;
    std::vector<std::int64_t> out;
    for (std::int64_t d = 1; d <= 20; ++d) out.push_back(d);
    return out;
}

int resolved_jobs(const ExperimentConfig& cfg) {
    if (cfg.jobs > 0) return cfg.jobs;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void require_checkpoint_grid(const std::vector<std::int64_t>& cps, std::int64_t horizon) {
    if (cps.empty()) throw std::invalid_argument("checkpoints: empty grid");
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (cps[i] < 1 || cps[i] > horizon)
            throw std::invalid_argument("checkpoints: entry outside [1, horizon]");
        if (i > 0 && cps[i] <= cps[i - 1])
            throw std::invalid_argument("checkpoints: must increase strictly");
    }
}

// Runs fn(0..trials-1) exactly once each on up to `jobs` threads.  Results
// land in per-trial slots, so the assembled row stream is identical for
// every worker count.
template <class TrialFn>
std::vector<std::vector<ReportRow>> run_trials(int jobs, std::int64_t trials, TrialFn&& fn) {
    std::vector<std::vector<ReportRow>> slots(static_cast<std::size_t>(trials));
    const int workers = static_cast<int>(std::min<std::int64_t>(std::max(jobs, 1), trials));
    if (workers <= 1) {
        for (std::int64_t t = 0; t < trials; ++t) slots[static_cast<std::size_t>(t)] = fn(t);
        return slots;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    auto body = [&] {
        for (;;) {
            const std::int64_t t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                slots[static_cast<std::size_t>(t)] = fn(t);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    return slots;
}

void flatten_rows(ExperimentResult& res, std::vector<std::vector<ReportRow>>&& slots) {
    for (auto& rows : slots)
        for (auto& r : rows) res.rows.push_back(std::move(r));
}

// ---- per-space drift ------------------------------------------------------

template <class SpaceT>
double displacement_after(const SpaceT& space, const FiniteMeasure<SpaceT>& mu, std::int64_t n,
                          std::uint64_t master_seed, std::int64_t trial) {
    RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(trial));
    auto w = space.identity();
    for (std::int64_t i = 1; i <= n; ++i) {
        append_step(space, w, mu.sample(rng));
        if ((i & 1023) == 0) check_element_budget(space, w, DEFAULT_ELEMENT_BUDGET, i);
    }
    return space.distance(space.basepoint(), space.act(w, space.basepoint()));
}

// Half-plane products overflow raw doubles long before n = 10^4, so the
// drift streams the scale-free inverse product and reads its displacement.
double displacement_after(const HPlaneSpace&, const FiniteMeasure<HPlaneSpace>& mu,
                          std::int64_t n, std::uint64_t master_seed, std::int64_t trial) {
    RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(trial));
    ScaledMoebius V = scaled_identity();
    for (std::int64_t i = 1; i <= n; ++i) V = scaled_left_mul(moebius_inverse(mu.sample(rng)), V);
    return scaled_displacement(V);
}

template <class SpaceT>
DriftEstimate estimate_drift_for(const SpaceT& space, const FiniteMeasure<SpaceT>& mu,
                                 std::int64_t n, std::int64_t trials,
                                 std::uint64_t master_seed) {
    DriftEstimate est;
    est.per_trial.reserve(static_cast<std::size_t>(trials));
    for (std::int64_t t = 0; t < trials; ++t)
        est.per_trial.push_back(displacement_after(space, mu, n, master_seed, t) /
                                static_cast<double>(n));
    double sum = 0.0;
    for (double v : est.per_trial) sum += v;
    est.a_hat = sum / static_cast<double>(trials);
    if (trials >= 2) {
        double ss = 0.0;
        for (double v : est.per_trial) ss += (v - est.a_hat) * (v - est.a_hat);
        est.spread = std::sqrt(ss / static_cast<double>(trials - 1));
    }
    return est;
}

// ---- streaming tree core --------------------------------------------------

// Mirrors push_cancel while feeding the same push/pop sequence to trackers.
void push_tracked(ReducedWord& w, Letter l, LcpTracker* a, LcpTracker* b = nullptr) {
    if (!w.letters.empty() && w.letters.back() == static_cast<Letter>(-l)) {
        w.letters.pop_back();
        a->on_pop();
        if (b) b->on_pop();
    } else {
        w.letters.push_back(l);
        a->on_push(l);
        if (b) b->on_push(l);
    }
}

struct TreeCore {
    std::uint64_t seed = 0;
    bool pencil_ok = false;
    TreePencil pencil;
    std::vector<double> f;                             // f[n], n = 0..H
    std::vector<std::int64_t> step_len;                // |g_n|, n = 1..H
    std::vector<std::array<std::int64_t, 3>> cp_stats; // (|w_n|, lcp_xi, lcp_eta)
    std::vector<std::int64_t> cp_disp;                 // |w_n| per checkpoint
};

// One two-sided walk, processed in streaming passes so memory stays linear
// in the horizon: draw the step indices, reduce both final words, replay to
// measure the stable prefixes, build the pencil, replay once more for the
// distance trace.  Matches bilateral_walk draw order and the end-estimate
// windows exactly.
TreeCore tree_core(const FreeGroup& G, const FiniteMeasure<FreeGroup>& mu, std::int64_t H,
                   const std::vector<std::int64_t>& cps, std::uint64_t master_seed,
                   std::int64_t trial, bool want_steps) {
    TreeCore core;
    core.seed = derived_seed(master_seed, static_cast<std::uint64_t>(trial));
    RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(trial));

    std::vector<std::uint32_t> idx(static_cast<std::size_t>(2 * H + 1));
    for (auto& i : idx) i = static_cast<std::uint32_t>(mu.sample_index(rng));
    std::vector<ReducedWord> inv;
    inv.reserve(mu.atoms.size());
    for (const auto& [g, wgt] : mu.atoms) {
        (void)wgt;
        inv.push_back(G.inverse(g));
    }
    const auto fwd_atom = [&](std::int64_t n) -> const ReducedWord& {
        return mu.atoms[idx[static_cast<std::size_t>(H + n)]].first;
    };
    const auto bwd_atom = [&](std::int64_t j) -> const ReducedWord& {
        return inv[idx[static_cast<std::size_t>(H - j)]];
    };

    // Pass 1: final words of both sides; forward displacement checkpoints.
    ReducedWord w_final;
    {
        std::size_t ci = 0;
        for (std::int64_t n = 1; n <= H; ++n) {
            for (Letter l : fwd_atom(n).letters) w_final.push_cancel(l);
            if (ci < cps.size() && n == cps[ci]) {
                core.cp_disp.push_back(static_cast<std::int64_t>(w_final.size()));
                ++ci;
            }
        }
    }
    ReducedWord b_final;
    for (std::int64_t j = 0; j <= H; ++j)
        for (Letter l : bwd_atom(j).letters) b_final.push_cancel(l);

    // Pass 2: stable prefix lengths of the end estimates, final-quarter
    // window against the last word of each side.
    std::int64_t stable_x = static_cast<std::int64_t>(w_final.size());
    {
        const std::int64_t window = (H + 3) / 4;
        ReducedWord w;
        LcpTracker tr(&w_final);
        for (std::int64_t n = 1; n <= H; ++n) {
            for (Letter l : fwd_atom(n).letters) push_tracked(w, l, &tr);
            if (n >= H - window + 1 && n <= H - 1) stable_x = std::min(stable_x, tr.lcp());
        }
    }
    std::int64_t stable_e = static_cast<std::int64_t>(b_final.size());
    {
        const std::int64_t window = (H + 4) / 4; // backward side has H + 1 entries
        ReducedWord b;
        LcpTracker tr(&b_final);
        for (std::int64_t j = 0; j <= H; ++j) {
            for (Letter l : bwd_atom(j).letters) push_tracked(b, l, &tr);
            if (j >= H + 1 - window && j <= H - 1) stable_e = std::min(stable_e, tr.lcp());
        }
    }

    TreeEnd xi{w_final, static_cast<std::size_t>(stable_x)};
    TreeEnd eta{b_final, static_cast<std::size_t>(stable_e)};
    try {
        core.pencil = pencil_line(xi, eta);
        core.pencil_ok = true;
    } catch (const std::invalid_argument&) {
        return core; // ends indistinguishable at this horizon
    }

    // Pass 3: distance-to-pencil trace and checkpoint stats.
    core.f.reserve(static_cast<std::size_t>(H) + 1);
    core.f.push_back(static_cast<double>(core.pencil.nearest_from_stats(0, 0, 0)));
    if (want_steps) core.step_len.reserve(static_cast<std::size_t>(H));
    {
        ReducedWord w;
        LcpTracker tx(&core.pencil.xi_prefix);
        LcpTracker te(&core.pencil.eta_prefix);
        std::size_t ci = 0;
        for (std::int64_t n = 1; n <= H; ++n) {
            const ReducedWord& g = fwd_atom(n);
            for (Letter l : g.letters) push_tracked(w, l, &tx, &te);
            if (want_steps) core.step_len.push_back(static_cast<std::int64_t>(g.size()));
            const auto len = static_cast<std::int64_t>(w.size());
            core.f.push_back(
                static_cast<double>(core.pencil.nearest_from_stats(len, tx.lcp(), te.lcp())));
            if (ci < cps.size() && n == cps[ci]) {
                core.cp_stats.push_back({len, tx.lcp(), te.lcp()});
                ++ci;
            }
        }
    }
    return core;
}

// ---- boundary pull helpers for the half-plane ------------------------------

BoundaryPoint pull_boundary(const ScaledMoebius& V, const BoundaryPoint& p) {
    double v;
    if (p.kind == BoundaryPoint::Kind::Finite)
        v = scaled_apply_boundary(V, p.value);
    else
        v = V.m.c != 0.0 ? V.m.a / V.m.c : std::numeric_limits<double>::infinity();
    return std::isfinite(v) ? BoundaryPoint::finite(v) : BoundaryPoint::infinity();
}

double pulled_basepoint_dist(const BoundaryPoint& xi, const BoundaryPoint& eta) {
    if (xi.kind == BoundaryPoint::Kind::Finite && eta.kind == BoundaryPoint::Kind::Finite) {
        if (xi.value == eta.value) return kNaN;
        return log_point_distance_to_arc(xi.value, eta.value, LogPoint{0.0, 0.0});
    }
    if (xi.kind == eta.kind) return kNaN; // both at infinity: no geodesic
    const double x0 = xi.kind == BoundaryPoint::Kind::Finite ? xi.value : eta.value;
    return std::asinh(std::abs(x0)); // vertical line seen from i
}

// d(i, gamma(t)) in the frame pulled back by w_n^-1: q is the pulled
// gamma(0), t is signed arclength toward the pulled xi.
double pulled_param_dist(const BoundaryPoint& xi, const BoundaryPoint& eta, const LogPoint& q,
                         double t) {
    if (xi.kind == BoundaryPoint::Kind::Finite && eta.kind == BoundaryPoint::Kind::Finite) {
        if (xi.value == eta.value) return kNaN;
        const double c = 0.5 * (xi.value + eta.value);
        const double R = 0.5 * std::abs(eta.value - xi.value);
        const double uq = arc_coordinate(c, R, q.x, q.log_y);
        if (!std::isfinite(uq)) return kNaN;
        const double dir = xi.value < eta.value ? 1.0 : -1.0;
        const double u = uq + dir * t;
        const double au = std::abs(u);
        const double log_cosh = au + std::log1p(std::exp(-2.0 * au)) - std::log(2.0);
        const LogPoint P{c - R * std::tanh(u), std::log(R) - log_cosh};
        return log_point_distance(LogPoint{0.0, 0.0}, P);
    }
    if (xi.kind == eta.kind) return kNaN;
    const double x0 = xi.kind == BoundaryPoint::Kind::Finite ? xi.value : eta.value;
    const double dir = xi.kind == BoundaryPoint::Kind::Infinity ? 1.0 : -1.0;
    return log_point_distance(LogPoint{0.0, 0.0}, LogPoint{x0, q.log_y + dir * t});
}

} // namespace

// ---- per-trial building blocks ---------------------------------------------

TreeTrackTrial tree_track_trial(const FreeGroup& G, const FiniteMeasure<FreeGroup>& mu,
                                std::int64_t horizon,
                                const std::vector<std::int64_t>& checkpoints, double A,
                                double density_c, std::uint64_t master_seed,
                                std::int64_t trial) {
    require_checkpoint_grid(checkpoints, horizon);
    if (A < 0.0) throw std::invalid_argument("tree_track_trial: drift must be nonnegative");
    TreeCore core = tree_core(G, mu, horizon, checkpoints, master_seed, trial, false);
    TreeTrackTrial out;
    out.seed = core.seed;
    out.displacement = core.cp_disp;
    if (!core.pencil_ok) {
        out.verdict = "pencil-unavailable";
        return out;
    }
    const auto& last = core.cp_stats.back();
    const double tn = A * static_cast<double>(checkpoints.back());
    const double ahead = core.pencil.param_distance_from_stats(last[0], last[1], last[2], tn);
    const double behind = core.pencil.param_distance_from_stats(last[0], last[1], last[2], -tn);
    out.orientation = ahead <= behind ? 1 : -1;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const std::int64_t n = checkpoints[i];
        const auto& s = core.cp_stats[i];
        CheckpointStat st;
        st.n = n;
        st.dist_to_param = core.pencil.param_distance_from_stats(
            s[0], s[1], s[2], out.orientation * A * static_cast<double>(n));
        st.e = st.dist_to_param / static_cast<double>(n);
        st.nearest = static_cast<double>(core.pencil.nearest_from_stats(s[0], s[1], s[2]));
        out.stats.push_back(st);
        out.density.push_back(density(core.f, density_c, 1, static_cast<std::size_t>(n)));
    }
    return out;
}

TreeErgodicTrial tree_ergodic_trial(const FreeGroup& G, const FiniteMeasure<FreeGroup>& mu,
                                    std::int64_t horizon, std::uint64_t master_seed,
                                    std::int64_t trial) {
    if (horizon < 4) throw std::invalid_argument("tree_ergodic_trial: horizon too short");
    TreeCore core = tree_core(G, mu, horizon, {horizon}, master_seed, trial, true);
    TreeErgodicTrial out;
    out.seed = core.seed;
    if (!core.pencil_ok) {
        out.verdict = "pencil-unavailable";
        return out;
    }
    out.trace.f = std::move(core.f);
    out.trace.g.reserve(static_cast<std::size_t>(horizon));
    out.trace.step_bound.reserve(static_cast<std::size_t>(horizon));
    for (std::int64_t n = 0; n < horizon; ++n) {
        out.trace.g.push_back(out.trace.f[static_cast<std::size_t>(n + 1)] -
                              out.trace.f[static_cast<std::size_t>(n)]);
        out.trace.step_bound.push_back(
            static_cast<double>(core.step_len[static_cast<std::size_t>(n)]));
    }
    return out;
}

namespace {

// Exact nearest distance from a target to the route, scanned with two
// Lipschitz prunes: a cheap tree-position lower bound decides whether the
// full wreath distance is worth evaluating, and both feed the jump size.
double lamp_nearest_on_route(const LampGroup& G, const LampState& target,
                             const LampState& start, const std::vector<RouteOp>& ops,
                             std::int64_t init_best) {
    std::int64_t best = init_best;
    RouteCursor cur(G, start, ops);
    const auto L = static_cast<std::int64_t>(ops.size());
    std::int64_t t = 0;
    while (t <= L) {
        const LampState& s = cur.at(static_cast<std::size_t>(t));
        const std::int64_t lb = word_distance(s.pos, target.pos);
        if (lb >= best) {
            t += std::max<std::int64_t>(1, lb - best);
            continue;
        }
        const std::int64_t d = lamp_word_distance(G, s, target);
        if (d < best) best = d;
        t += std::max<std::int64_t>(1, d - best);
    }
    return static_cast<double>(best);
}

} // namespace

LampTrackTrial lamp_track_trial(const LampGroup& G, const FiniteMeasure<LampGroup>& mu,
                                std::int64_t horizon,
                                const std::vector<std::int64_t>& checkpoints, double A,
                                bool with_nearest, std::uint64_t master_seed,
                                std::int64_t trial) {
    require_checkpoint_grid(checkpoints, horizon);
    if (A < 0.0) throw std::invalid_argument("lamp_track_trial: drift must be nonnegative");
    LampTrackTrial out;
    out.seed = derived_seed(master_seed, static_cast<std::uint64_t>(trial));
    RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(trial));

    const std::int64_t H = horizon;
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(2 * H + 1));
    for (auto& i : idx) i = static_cast<std::uint32_t>(mu.sample_index(rng));
    std::vector<LampState> inv;
    inv.reserve(mu.atoms.size());
    for (const auto& [g, wgt] : mu.atoms) {
        (void)wgt;
        inv.push_back(G.inverse(g));
    }

    // Forward stream with checkpoint snapshots.
    std::vector<LampState> w_cp;
    LampState w = G.identity();
    {
        std::size_t ci = 0;
        for (std::int64_t n = 1; n <= H; ++n) {
            append_step(G, w, mu.atoms[idx[static_cast<std::size_t>(H + n)]].first);
            if ((n & 1023) == 0) check_element_budget(G, w, DEFAULT_ELEMENT_BUDGET, n);
            if (ci < checkpoints.size() && n == checkpoints[ci]) {
                w_cp.push_back(w);
                out.displacement.push_back(G.word_length(w));
                ++ci;
            }
        }
    }
    LampState b = G.identity();
    for (std::int64_t j = 0; j <= H; ++j) {
        append_step(G, b, inv[idx[static_cast<std::size_t>(H - j)]]);
        if ((j & 1023) == 0) check_element_budget(G, b, DEFAULT_ELEMENT_BUDGET, j);
    }

    if (w == b) {
        out.verdict = "segment-degenerate";
        return out;
    }
    const std::vector<RouteOp> ops = lamp_route(G, b, w);
    const auto L = static_cast<std::int64_t>(ops.size());

    // Anchor: first route point nearest the identity in the tree.
    std::int64_t t0 = 0;
    {
        ReducedWord pos = b.pos;
        std::int64_t best_depth = static_cast<std::int64_t>(pos.size());
        for (std::int64_t t = 1; t <= L; ++t) {
            if (ops[static_cast<std::size_t>(t - 1)].move != 0) {
                pos.push_cancel(ops[static_cast<std::size_t>(t - 1)].move);
                if (static_cast<std::int64_t>(pos.size()) < best_depth) {
                    best_depth = static_cast<std::int64_t>(pos.size());
                    t0 = t;
                }
            }
        }
    }

    // Materialize the target states in one forward replay.
    const auto clamp_t = [&](std::int64_t t) { return std::clamp<std::int64_t>(t, 0, L); };
    std::vector<std::int64_t> targets;
    for (std::int64_t n : checkpoints) {
        const auto off = static_cast<std::int64_t>(std::llround(A * static_cast<double>(n)));
        targets.push_back(clamp_t(t0 + off));
        targets.push_back(clamp_t(t0 - off));
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::map<std::int64_t, LampState> at_target;
    {
        RouteCursor cur(G, b, ops);
        for (std::int64_t t : targets) at_target.emplace(t, cur.at(static_cast<std::size_t>(t)));
    }

    std::vector<double> d_plus(checkpoints.size()), d_minus(checkpoints.size());
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const auto off =
            static_cast<std::int64_t>(std::llround(A * static_cast<double>(checkpoints[i])));
        d_plus[i] = static_cast<double>(
            lamp_word_distance(G, at_target.at(clamp_t(t0 + off)), w_cp[i]));
        d_minus[i] = static_cast<double>(
            lamp_word_distance(G, at_target.at(clamp_t(t0 - off)), w_cp[i]));
    }
    out.orientation = d_plus.back() <= d_minus.back() ? 1 : -1;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        CheckpointStat st;
        st.n = checkpoints[i];
        st.dist_to_param = out.orientation > 0 ? d_plus[i] : d_minus[i];
        st.e = st.dist_to_param / static_cast<double>(checkpoints[i]);
        st.nearest = kNaN;
        if (with_nearest)
            st.nearest = lamp_nearest_on_route(
                G, w_cp[i], b, ops,
                static_cast<std::int64_t>(std::min(d_plus[i], d_minus[i])));
        out.stats.push_back(st);
    }
    return out;
}

HTrackTrial hplane_track_trial(const HPlaneSpace& S, const FiniteMeasure<HPlaneSpace>& mu,
                               std::int64_t horizon,
                               const std::vector<std::int64_t>& checkpoints, double A,
                               double density_c, std::uint64_t master_seed,
                               std::int64_t trial) {
    (void)S;
    require_checkpoint_grid(checkpoints, horizon);
    if (A < 0.0) throw std::invalid_argument("hplane_track_trial: drift must be nonnegative");
    HTrackTrial out;
    out.seed = derived_seed(master_seed, static_cast<std::uint64_t>(trial));
    RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(trial));

    const std::int64_t H = horizon;
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(2 * H + 1));
    for (auto& i : idx) i = static_cast<std::uint32_t>(mu.sample_index(rng));
    std::vector<MoebiusMap> inv;
    inv.reserve(mu.atoms.size());
    for (const auto& [g, wgt] : mu.atoms) {
        (void)wgt;
        inv.push_back(moebius_inverse(g));
    }

    // Forward and backward orbits in log form, products kept scale-free.
    std::vector<LogPoint> fwd;
    fwd.reserve(static_cast<std::size_t>(H));
    {
        ScaledMoebius W = scaled_identity();
        std::size_t ci = 0;
        for (std::int64_t n = 1; n <= H; ++n) {
            W = scaled_right_mul(W, mu.atoms[idx[static_cast<std::size_t>(H + n)]].first);
            fwd.push_back(scaled_apply(W, LogPoint{0.0, 0.0}));
            if (ci < checkpoints.size() && n == checkpoints[ci]) {
                out.displacement.push_back(scaled_displacement(W));
                ++ci;
            }
        }
    }
    std::vector<LogPoint> bwd;
    bwd.reserve(static_cast<std::size_t>(H) + 1);
    {
        ScaledMoebius B = scaled_identity();
        for (std::int64_t j = 0; j <= H; ++j) {
            B = scaled_right_mul(B, inv[idx[static_cast<std::size_t>(H - j)]]);
            bwd.push_back(scaled_apply(B, LogPoint{0.0, 0.0}));
        }
    }

    const BoundaryPoint xi_hat = boundary_estimate_log(fwd);
    const BoundaryPoint eta_hat = boundary_estimate_log(bwd);
    if (xi_hat.kind == BoundaryPoint::Kind::Unstable ||
        eta_hat.kind == BoundaryPoint::Kind::Unstable) {
        out.verdict = "boundary-unstable";
        return out;
    }
    HGeodesic geo;
    try {
        geo = boundary_pencil(xi_hat, eta_hat);
    } catch (const std::invalid_argument&) {
        out.verdict = "boundary-collision";
        return out;
    }
    const HPoint p0 = geo.point_at(0.0);
    const LogPoint q0{p0.re, std::log(p0.im)};

    // Moving-frame pass: at each n pull everything back by w_n^-1, where the
    // basepoint orbit sits at i and all heights are representable.
    std::vector<double> dp(checkpoints.size(), kNaN), dm(checkpoints.size(), kNaN);
    std::vector<double> f_cp(checkpoints.size(), kNaN);
    out.density.assign(checkpoints.size(), kNaN);
    bool bad = false;
    {
        ScaledMoebius V = scaled_identity();
        std::int64_t hits = 0;
        std::size_t ci = 0;
        for (std::int64_t n = 1; n <= H; ++n) {
            V = scaled_left_mul(inv[idx[static_cast<std::size_t>(H + n)]], V);
            const BoundaryPoint xin = pull_boundary(V, xi_hat);
            const BoundaryPoint etan = pull_boundary(V, eta_hat);
            const double fn = pulled_basepoint_dist(xin, etan);
            if (!std::isfinite(fn)) bad = true;
            if (!bad && fn <= density_c) ++hits;
            if (ci < checkpoints.size() && n == checkpoints[ci]) {
                if (!bad) {
                    out.density[ci] = static_cast<double>(hits) / static_cast<double>(n);
                    f_cp[ci] = fn;
                    const LogPoint q = scaled_apply(V, q0);
                    const double tn = A * static_cast<double>(n);
                    dp[ci] = pulled_param_dist(xin, etan, q, tn);
                    dm[ci] = pulled_param_dist(xin, etan, q, -tn);
                }
                ++ci;
            }
        }
    }
    if (bad) out.verdict = "frame-underflow";
    if (std::isfinite(dp.back()) && std::isfinite(dm.back()))
        out.orientation = dp.back() <= dm.back() ? 1 : -1;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        CheckpointStat st;
        st.n = checkpoints[i];
        st.dist_to_param = out.orientation > 0 ? dp[i] : dm[i];
        st.e = st.dist_to_param / static_cast<double>(checkpoints[i]);
        st.nearest = f_cp[i];
        out.stats.push_back(st);
    }
    return out;
}

OrbitFunctionTrace hplane_ergodic_trial(const HPlaneSpace& S, const FiniteMeasure<HPlaneSpace>& mu,
                                        std::int64_t horizon, double xi, double eta,
                                        std::uint64_t master_seed, std::int64_t trial) {
    (void)S;
    if (horizon < 1) throw std::invalid_argument("hplane_ergodic_trial: horizon too short");
    if (!(std::abs(eta - xi) > 0.0))
        throw std::invalid_argument("hplane_ergodic_trial: pencil endpoints coincide");
    RngStream rng = derive_stream(master_seed, static_cast<std::uint64_t>(trial));

    std::vector<double> step;
    step.reserve(mu.atoms.size());
    const HPoint base{0.0, 1.0};
    for (const auto& [g, wgt] : mu.atoms) {
        (void)wgt;
        step.push_back(hyp_distance(base, moebius_apply(g, base)));
    }

    OrbitFunctionTrace tr;
    tr.f.reserve(static_cast<std::size_t>(horizon) + 1);
    tr.g.reserve(static_cast<std::size_t>(horizon));
    tr.step_bound.reserve(static_cast<std::size_t>(horizon));
    double prev = log_point_distance_to_arc(xi, eta, LogPoint{0.0, 0.0});
    tr.f.push_back(prev);
    ScaledMoebius W = scaled_identity();
    for (std::int64_t n = 1; n <= horizon; ++n) {
        const std::size_t a = mu.sample_index(rng);
        W = scaled_right_mul(W, mu.atoms[a].first);
        const double fn = log_point_distance_to_arc(xi, eta, scaled_apply(W, LogPoint{0.0, 0.0}));
        tr.f.push_back(fn);
        tr.g.push_back(fn - prev);
        tr.step_bound.push_back(step[a]);
        prev = fn;
    }
    return tr;
}

// ---- measures ---------------------------------------------------------------

FiniteMeasure<FreeGroup> tree_step_measure(const FreeGroup& G, const ExperimentConfig& cfg) {
    if (cfg.measure == "srw") return uniform_measure(G, G.generators());
    if (starts_with(cfg.measure, "file:"))
        return parse_measure(G, read_text_file("measure", trim(cfg.measure.substr(5))));
    throw ConfigError("measure: '" + cfg.measure + "' is not defined for the tree space");
}

FiniteMeasure<LampGroup> lamp_step_measure(const LampGroup& G, const ExperimentConfig& cfg) {
    if (cfg.measure == "srw") return uniform_measure(G, G.generators());
    if (cfg.measure == "switch-walk") {
        // Tree moves plus every nontrivial press at the walker's position.
        std::vector<LampState> support;
        for (const auto& g : G.tree.generators())
            support.push_back(LampState{g, LampConfig(G.modulus)});
        for (int c = 1; c < G.modulus; ++c) {
            LampState press{ReducedWord{}, LampConfig(G.modulus)};
            press.lamps.add_at(ReducedWord{}, c);
            support.push_back(std::move(press));
        }
        return uniform_measure(G, std::move(support));
    }
    if (starts_with(cfg.measure, "file:"))
        return parse_measure(G, read_text_file("measure", trim(cfg.measure.substr(5))));
    throw ConfigError("measure: '" + cfg.measure + "' is not defined for the lamplighter space");
}

std::vector<MoebiusMap> hplane_generators(const ExperimentConfig& cfg) {
    std::vector<MoebiusMap> out;
    if (cfg.matrices.empty()) {
        const MoebiusMap t = sanov_translation();
        const MoebiusMap p = sanov_parabolic();
        out = {t, moebius_inverse(t), p, moebius_inverse(p)};
        return out;
    }
    const HPlaneSpace S;
    for (const auto& lit : cfg.matrices) {
        const MoebiusMap g = S.parse_element(lit);
        out.push_back(g);
        out.push_back(moebius_inverse(g));
    }
    return out;
}

FiniteMeasure<HPlaneSpace> hplane_step_measure(const HPlaneSpace& S,
                                               const ExperimentConfig& cfg) {
    if (cfg.measure == "srw") return uniform_measure(S, hplane_generators(cfg));
    if (starts_with(cfg.measure, "file:"))
        return parse_measure(S, read_text_file("measure", trim(cfg.measure.substr(5))));
    throw ConfigError("measure: '" + cfg.measure +
                      "' is not defined for the half-plane space");
}

// ---- config parsing -----------------------------------------------------------

namespace {

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "f2-srw") {
        cfg.space = "tree";
        cfg.k = 2;
        cfg.measure = "srw";
    } else if (name == "ll-srw") {
        cfg.space = "lamplighter";
        cfg.k = 2;
        cfg.m = 2;
        cfg.measure = "srw";
    } else if (name == "hplane-srw") {
        cfg.space = "hplane";
        cfg.measure = "srw";
    } else {
        throw ConfigError("preset: unknown '" + name + "'");
    }
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "preset") return; // applied first, see parse_experiment_config
    if (key == "space")
        cfg.space = value;
    else if (key == "k")
        cfg.k = parse_int(key, value);
    else if (key == "m")
        cfg.m = parse_int(key, value);
    else if (key == "matrices")
        cfg.matrices = split_list(value, ';');
    else if (key == "scaling")
        cfg.scaling = value;
    else if (key == "measure")
        cfg.measure = value;
    else if (key == "n")
        cfg.n = parse_i64(key, value);
    else if (key == "trials")
        cfg.trials = parse_i64(key, value);
    else if (key == "seed")
        cfg.seed = parse_u64(key, value);
    else if (key == "checkpoints")
        cfg.checkpoints = parse_i64_list(key, value);
    else if (key == "density_c")
        cfg.density_c = parse_f64(key, value);
    else if (key == "drift_a")
        cfg.drift_a = parse_f64(key, value);
    else if (key == "out")
        cfg.out = value;
    else if (key == "jobs")
        cfg.jobs = parse_int(key, value);
    else if (key == "truncation_radius")
        cfg.truncation_radius = parse_i64(key, value);
    else if (key == "pairs")
        cfg.pairs = parse_i64(key, value);
    else if (key == "depths")
        cfg.depths = parse_i64_list(key, value);
    else if (key == "probe")
        cfg.probe = value;
    else if (key == "xi")
        cfg.xi = value;
    else if (key == "eta")
        cfg.eta = value;
    else if (key == "lamps_xi")
        cfg.lamps_xi = value;
    else if (key == "lamps_eta")
        cfg.lamps_eta = value;
    else if (key == "oracle_radius")
        cfg.oracle_radius = parse_i64(key, value);
    else
        throw ConfigError("config: unknown key '" + key + "'");
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> kvs;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line =
            eol == std::string::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (!line.empty()) {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: expected key=value, got '" + line + "'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("config: empty key in '" + line + "'");
            kvs.emplace_back(key, value);
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    ExperimentConfig cfg;
    for (const auto& [k, v] : kvs) {
        if (k == "preset") {
            cfg.preset = v;
            apply_preset(cfg, v);
        }
    }
    for (const auto& [k, v] : kvs) apply_key(cfg, k, v);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_text_file("config", path));
}

// ---- validation -----------------------------------------------------------------

namespace {

// Reduced word that stays reduced under repetition, for periodic ends.
bool seam_cancels(const ReducedWord& w) {
    return !w.letters.empty() && w.letters.front() == static_cast<Letter>(-w.letters.back());
}

ReducedWord periodic_truncate(const ReducedWord& w, std::int64_t depth) {
    ReducedWord out;
    out.letters.reserve(static_cast<std::size_t>(depth));
    for (std::int64_t i = 0; i < depth; ++i)
        out.letters.push_back(w.letters[static_cast<std::size_t>(i) % w.size()]);
    return out;
}

LampConfig parse_lamp_decoration(const LampGroup& G, const std::string& text) {
    return G.parse_element("pos=1; lamps=" + trim(text)).lamps;
}

void check_strictly_increasing(std::vector<std::string>& out, const char* key,
                               const std::vector<std::int64_t>& xs, std::int64_t lo,
                               std::int64_t hi) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < lo || xs[i] > hi) {
            out.push_back(std::string(key) + ": entry " + fmt_i64(xs[i]) + " outside [" +
                          fmt_i64(lo) + ", " + fmt_i64(hi) + "]");
            return;
        }
        if (i > 0 && xs[i] <= xs[i - 1]) {
            out.push_back(std::string(key) + ": entries must increase strictly");
            return;
        }
    }
}

} // namespace

std::vector<std::string> validate_config(const ExperimentConfig& cfg,
                                         const std::string& command) {
    std::vector<std::string> out;
    const bool is_drift = command == "drift";
    const bool is_track = command == "track";
    const bool is_floyd = command == "floyd";
    const bool is_oracle = command == "lamplighter-oracle";
    const bool is_visibility = command == "visibility";
    if (!is_drift && !is_track && !is_floyd && !is_oracle && !is_visibility) {
        out.push_back("command: unknown '" + command + "'");
        return out;
    }

    const bool tree_space = cfg.space == "tree";
    const bool lamp_space = cfg.space == "lamplighter";
    const bool hp_space = cfg.space == "hplane";
    if (!tree_space && !lamp_space && !hp_space)
        out.push_back("space: unknown '" + cfg.space + "' (tree | lamplighter | hplane)");
    if (cfg.k < 1 || cfg.k > MAX_RANK)
        out.push_back("k: rank must be in [1, " + fmt_i64(MAX_RANK) + "]");
    if (cfg.m < 2) out.push_back("m: lamp modulus must be >= 2");
    if (cfg.jobs < 0) out.push_back("jobs: must be >= 0 (0 means all hardware threads)");
    if (cfg.n < 1) out.push_back("n: must be >= 1");
    if (cfg.trials < 1) out.push_back("trials: must be >= 1");

    if (is_drift || is_track) {
        if (cfg.n < 100) out.push_back("n: drift and tracking runs need n >= 100");
        const bool file_measure = starts_with(cfg.measure, "file:");
        if (cfg.measure != "srw" && cfg.measure != "switch-walk" && !file_measure)
            out.push_back("measure: unknown '" + cfg.measure +
                          "' (srw | switch-walk | file:<path>)");
        if (cfg.measure == "switch-walk" && !lamp_space)
            out.push_back("measure: switch-walk is defined only for space=lamplighter");
        if (file_measure && trim(cfg.measure.substr(5)).empty())
            out.push_back("measure: empty file path");
        if (hp_space) {
            for (std::size_t i = 0; i < cfg.matrices.size(); ++i) {
                try {
                    (void)HPlaneSpace{}.parse_element(cfg.matrices[i]);
                } catch (const std::exception& ex) {
                    out.push_back("matrices: entry " + fmt_i64(static_cast<std::int64_t>(i)) +
                                  ": " + ex.what());
                }
            }
        }
    }
    if (is_track) {
        if (cfg.checkpoints.empty()) {
            if (decadic_checkpoints(cfg.n).empty())
                out.push_back("checkpoints: no decadic checkpoint at or below n");
        } else {
            check_strictly_increasing(out, "checkpoints", cfg.checkpoints, 1, cfg.n);
        }
        if (!(cfg.density_c > 0.0)) out.push_back("density_c: must be positive");
        if (std::isnan(cfg.drift_a)) out.push_back("drift_a: not a number");
    }
    if (is_floyd) {
        try {
            (void)ScalingFunction::parse(cfg.scaling);
        } catch (const std::exception& ex) {
            out.push_back(std::string("scaling: ") + ex.what());
        }
        if (cfg.truncation_radius < 3)
            out.push_back(
                "truncation_radius: must be >= 3 (pairs are sampled in the ball of radius "
                "truncation_radius - 2)");
        if (cfg.pairs < 1) out.push_back("pairs: must be >= 1");
    }
    if (is_oracle) {
        if (cfg.oracle_radius < 0) out.push_back("oracle_radius: must be >= 0");
    }
    if (is_visibility) {
        if (hp_space) out.push_back("space: the visibility probe supports tree and lamplighter");
        if (!cfg.depths.empty())
            check_strictly_increasing(out, "depths", cfg.depths, 1,
                                      std::numeric_limits<std::int64_t>::max());
        if (cfg.probe != "lambda" && cfg.probe != "marching")
            out.push_back("probe: unknown '" + cfg.probe + "' (lambda | marching)");
        if (cfg.probe == "marching" && !lamp_space)
            out.push_back("probe: the marching control needs space=lamplighter");
        ReducedWord xi_w, eta_w;
        bool xi_ok = false, eta_ok = false;
        try {
            xi_w = parse_word(cfg.xi, cfg.k);
            xi_ok = true;
        } catch (const std::exception& ex) {
            out.push_back(std::string("xi: ") + ex.what());
        }
        try {
            eta_w = parse_word(cfg.eta, cfg.k);
            eta_ok = true;
        } catch (const std::exception& ex) {
            out.push_back(std::string("eta: ") + ex.what());
        }
        if (xi_ok && xi_w.letters.empty()) {
            out.push_back("xi: must be a nonempty reduced word");
            xi_ok = false;
        }
        if (eta_ok && eta_w.letters.empty()) {
            out.push_back("eta: must be a nonempty reduced word");
            eta_ok = false;
        }
        if (xi_ok && seam_cancels(xi_w)) {
            out.push_back("xi: word cancels against itself when repeated");
            xi_ok = false;
        }
        if (eta_ok && seam_cancels(eta_w)) {
            out.push_back("eta: word cancels against itself when repeated");
            eta_ok = false;
        }
        if (cfg.probe == "lambda" && xi_ok && eta_ok) {
            const auto depth = static_cast<std::int64_t>(2 * xi_w.size() * eta_w.size());
            if (periodic_truncate(xi_w, depth) == periodic_truncate(eta_w, depth))
                out.push_back("eta: must define an end distinct from xi");
        }
        if (lamp_space && cfg.m >= 2) {
            const LampGroup G(cfg.m, std::min(std::max(cfg.k, 1), MAX_RANK));
            for (const auto& [key, text] :
                 {std::pair<const char*, const std::string*>{"lamps_xi", &cfg.lamps_xi},
                  std::pair<const char*, const std::string*>{"lamps_eta", &cfg.lamps_eta}}) {
                if (trim(*text).empty()) continue;
                try {
                    (void)parse_lamp_decoration(G, *text);
                } catch (const std::exception& ex) {
                    out.push_back(std::string(key) + ": " + ex.what());
                }
            }
        }
    }
    return out;
}

// ---- output writers -----------------------------------------------------------

std::string csv_text(const std::vector<ReportRow>& rows) {
    std::string out = "trial,seed,n,d_x_wn,e_n,nearest_dist,density_C,verdict\n";
    for (const auto& r : rows) {
        out += fmt_i64(r.trial);
        out += ',';
        out += fmt_u64(r.seed);
        out += ',';
        out += fmt_i64(r.n);
        out += ',';
        out += fmt_opt(r.d_x_wn);
        out += ',';
        out += fmt_opt(r.e_n);
        out += ',';
        out += fmt_opt(r.nearest_dist);
        out += ',';
        out += fmt_opt(r.density_c);
        out += ',';
        out += r.verdict;
        out += '\n';
    }
    return out;
}

std::string resolve_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    if (const char* env = std::getenv("GEOWALK_OUT"); env != nullptr && *env != '\0')
        return env;
    return ".";
}

namespace {

const char* plot_script() {
    return "# tracking error against walk length\n"
           "set datafile separator ','\n"
           "set datafile missing 'na'\n"
           "set logscale xy\n"
           "set xlabel 'n'\n"
           "set ylabel 'e_n'\n"
           "set key off\n"
           "plot 'report.csv' using 'n':'e_n' with points pt 7 ps 0.5\n";
}

} // namespace

void write_outputs(const ExperimentResult& res, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir), ec);
    if (ec)
        throw ConfigError("out: cannot create directory '" + out_dir + "': " + ec.message());
    const auto write_file = [&](const char* name, const std::string& body) {
        const fs::path p = fs::path(out_dir) / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ConfigError("out: cannot open '" + p.string() + "' for writing");
        f << body;
        f.flush();
        if (!f) throw ConfigError("out: failed while writing '" + p.string() + "'");
    };
    write_file("report.csv", csv_text(res.rows));
    std::string summary;
    for (const auto& line : res.summary) {
        summary += line;
        summary += '\n';
    }
    write_file("summary.txt", summary);
    write_file("plot.gp", plot_script());
}

// ---- commands ---------------------------------------------------------------

namespace {

void summary_header(ExperimentResult& res, const ExperimentConfig& cfg,
                    const std::string& command) {
    res.summary.push_back("command=" + command);
    res.summary.push_back("space=" + cfg.space);
    res.summary.push_back("seed=" + fmt_u64(cfg.seed));
}

template <class SpaceT>
ExperimentResult drift_with(const SpaceT& space, const FiniteMeasure<SpaceT>& mu,
                            const ExperimentConfig& cfg) {
    ExperimentResult res;
    auto slots = run_trials(resolved_jobs(cfg), cfg.trials, [&](std::int64_t t) {
        const double d = displacement_after(space, mu, cfg.n, cfg.seed, t);
        ReportRow row;
        row.trial = t;
        row.seed = derived_seed(cfg.seed, static_cast<std::uint64_t>(t));
        row.n = cfg.n;
        row.d_x_wn = d;
        row.verdict = "ok";
        return std::vector<ReportRow>{row};
    });
    flatten_rows(res, std::move(slots));
    DriftEstimate est;
    for (const auto& r : res.rows)
        est.per_trial.push_back(*r.d_x_wn / static_cast<double>(cfg.n));
    double sum = 0.0;
    for (double v : est.per_trial) sum += v;
    est.a_hat = sum / static_cast<double>(est.per_trial.size());
    if (est.per_trial.size() >= 2) {
        double ss = 0.0;
        for (double v : est.per_trial) ss += (v - est.a_hat) * (v - est.a_hat);
        est.spread = std::sqrt(ss / static_cast<double>(est.per_trial.size() - 1));
    }
    summary_header(res, cfg, "drift");
    res.summary.push_back("measure=" + cfg.measure);
    res.summary.push_back("n=" + fmt_i64(cfg.n));
    res.summary.push_back("trials=" + fmt_i64(cfg.trials));
    res.summary.push_back("a_hat=" + fmt_double(est.a_hat));
    res.summary.push_back("spread=" + fmt_double(est.spread));
    res.summary.push_back(std::string("zero_drift=") + (zero_drift(est) ? "yes" : "no"));
    return res;
}

ExperimentResult run_drift(const ExperimentConfig& cfg) {
    if (cfg.space == "tree") {
        const FreeGroup G(cfg.k);
        return drift_with(G, tree_step_measure(G, cfg), cfg);
    }
    if (cfg.space == "lamplighter") {
        const LampGroup G(cfg.m, cfg.k);
        return drift_with(G, lamp_step_measure(G, cfg), cfg);
    }
    const HPlaneSpace S;
    return drift_with(S, hplane_step_measure(S, cfg), cfg);
}

// Median of the finite entries of column `get` across rows with checkpoint n.
std::string median_at(const std::vector<ReportRow>& rows, std::int64_t n,
                      const std::optional<double> ReportRow::*col) {
    std::vector<double> xs;
    for (const auto& r : rows)
        if (r.n == n && (r.*col).has_value()) xs.push_back(*(r.*col));
    if (xs.empty()) return "na";
    return fmt_double(median(std::move(xs)));
}

void track_summary(ExperimentResult& res, const ExperimentConfig& cfg,
                   const std::vector<std::int64_t>& cps, double A,
                   const std::string& drift_source, const DriftEstimate& est,
                   std::int64_t horizon) {
    summary_header(res, cfg, "track");
    res.summary.push_back("measure=" + cfg.measure);
    res.summary.push_back("n=" + fmt_i64(cfg.n));
    res.summary.push_back("trials=" + fmt_i64(cfg.trials));
    res.summary.push_back("horizon=" + fmt_i64(horizon));
    res.summary.push_back("drift_source=" + drift_source);
    res.summary.push_back("drift_a=" + fmt_double(A));
    if (drift_source == "estimated")
        res.summary.push_back("drift_spread=" + fmt_double(est.spread));
    std::int64_t tracked = 0;
    std::int64_t total = 0;
    for (const auto& r : res.rows) {
        if (r.n != cps.back()) continue;
        ++total;
        if (r.e_n.has_value()) ++tracked;
    }
    for (std::int64_t n : cps)
        res.summary.push_back("checkpoint n=" + fmt_i64(n) +
                              " median_e=" + median_at(res.rows, n, &ReportRow::e_n) +
                              " median_nearest=" +
                              median_at(res.rows, n, &ReportRow::nearest_dist) +
                              " median_density=" +
                              median_at(res.rows, n, &ReportRow::density_c));
    res.summary.push_back("tracked_trials=" + fmt_i64(tracked) + "/" + fmt_i64(total));
    res.summary.push_back(std::string("verdict=") +
                          (tracked == total ? "tracked" : "partial"));
}

ExperimentResult zero_drift_result(const ExperimentConfig& cfg,
                                   const std::vector<std::int64_t>& cps,
                                   const DriftEstimate& est, std::int64_t horizon) {
    ExperimentResult res;
    for (std::int64_t t = 0; t < cfg.trials; ++t)
        for (std::int64_t n : cps) {
            ReportRow row;
            row.trial = t;
            row.seed = derived_seed(cfg.seed, static_cast<std::uint64_t>(t));
            row.n = n;
            row.verdict = "zero-drift";
            res.rows.push_back(row);
        }
    summary_header(res, cfg, "track");
    res.summary.push_back("measure=" + cfg.measure);
    res.summary.push_back("n=" + fmt_i64(cfg.n));
    res.summary.push_back("trials=" + fmt_i64(cfg.trials));
    res.summary.push_back("horizon=" + fmt_i64(horizon));
    res.summary.push_back("drift_source=estimated");
    res.summary.push_back("drift_a=" + fmt_double(est.a_hat));
    res.summary.push_back("drift_spread=" + fmt_double(est.spread));
    res.summary.push_back(
        "verdict=zero-drift (estimate not separated from zero, no ray to track)");
    return res;
}

ExperimentResult run_track(const ExperimentConfig& cfg) {
    const std::vector<std::int64_t> cps = resolved_checkpoints(cfg);
    // The pencil must certifiably reach gamma(A n) at the last checkpoint;
    // a 3x horizon leaves the stable prefix ample slack past it.
    const std::int64_t horizon = 3 * cps.back();
    const int jobs = resolved_jobs(cfg);
    ExperimentResult res;

    if (cfg.space == "tree") {
        const FreeGroup G(cfg.k);
        const auto mu = tree_step_measure(G, cfg);
        double A = cfg.drift_a;
        std::string source = "config";
        DriftEstimate est;
        if (A < 0.0) {
            est = estimate_drift_for(G, mu, cfg.n, kDriftTrials, cfg.seed ^ kDriftSalt);
            A = est.a_hat;
            source = "estimated";
            if (zero_drift(est)) return zero_drift_result(cfg, cps, est, horizon);
        }
        auto slots = run_trials(jobs, cfg.trials, [&](std::int64_t t) {
            const TreeTrackTrial trial =
                tree_track_trial(G, mu, horizon, cps, A, cfg.density_c, cfg.seed, t);
            std::vector<ReportRow> rows;
            for (std::size_t i = 0; i < cps.size(); ++i) {
                ReportRow row;
                row.trial = t;
                row.seed = trial.seed;
                row.n = cps[i];
                row.d_x_wn = static_cast<double>(trial.displacement[i]);
                if (trial.verdict == "tracked") {
                    row.e_n = opt_of(trial.stats[i].e);
                    row.nearest_dist = opt_of(trial.stats[i].nearest);
                    row.density_c = opt_of(trial.density[i]);
                }
                row.verdict = trial.verdict;
                rows.push_back(row);
            }
            return rows;
        });
        flatten_rows(res, std::move(slots));
        track_summary(res, cfg, cps, A, source, est, horizon);
        return res;
    }

    if (cfg.space == "lamplighter") {
        const LampGroup G(cfg.m, cfg.k);
        const auto mu = lamp_step_measure(G, cfg);
        double A = cfg.drift_a;
        std::string source = "config";
        DriftEstimate est;
        if (A < 0.0) {
            est = estimate_drift_for(G, mu, cfg.n, kDriftTrials, cfg.seed ^ kDriftSalt);
            A = est.a_hat;
            source = "estimated";
            if (zero_drift(est)) return zero_drift_result(cfg, cps, est, horizon);
        }
        auto slots = run_trials(jobs, cfg.trials, [&](std::int64_t t) {
            const LampTrackTrial trial =
                lamp_track_trial(G, mu, horizon, cps, A, true, cfg.seed, t);
            std::vector<ReportRow> rows;
            for (std::size_t i = 0; i < cps.size(); ++i) {
                ReportRow row;
                row.trial = t;
                row.seed = trial.seed;
                row.n = cps[i];
                if (i < trial.displacement.size())
                    row.d_x_wn = static_cast<double>(trial.displacement[i]);
                if (trial.verdict == "tracked") {
                    row.e_n = opt_of(trial.stats[i].e);
                    row.nearest_dist = opt_of(trial.stats[i].nearest);
                }
                row.verdict = trial.verdict;
                rows.push_back(row);
            }
            return rows;
        });
        flatten_rows(res, std::move(slots));
        track_summary(res, cfg, cps, A, source, est, horizon);
        return res;
    }

    const HPlaneSpace S;
    const auto mu = hplane_step_measure(S, cfg);
    double A = cfg.drift_a;
    std::string source = "config";
    DriftEstimate est;
    if (A < 0.0) {
        est = estimate_drift_for(S, mu, cfg.n, kDriftTrials, cfg.seed ^ kDriftSalt);
        A = est.a_hat;
        source = "estimated";
        if (zero_drift(est)) return zero_drift_result(cfg, cps, est, horizon);
    }
    auto slots = run_trials(jobs, cfg.trials, [&](std::int64_t t) {
        const HTrackTrial trial =
            hplane_track_trial(S, mu, horizon, cps, A, cfg.density_c, cfg.seed, t);
        std::vector<ReportRow> rows;
        for (std::size_t i = 0; i < cps.size(); ++i) {
            ReportRow row;
            row.trial = t;
            row.seed = trial.seed;
            row.n = cps[i];
            if (i < trial.displacement.size()) row.d_x_wn = opt_of(trial.displacement[i]);
            if (!trial.stats.empty()) {
                row.e_n = opt_of(trial.stats[i].e);
                row.nearest_dist = opt_of(trial.stats[i].nearest);
                row.density_c = opt_of(trial.density[i]);
            }
            row.verdict = trial.verdict;
            rows.push_back(row);
        }
        return rows;
    });
    flatten_rows(res, std::move(slots));
    track_summary(res, cfg, cps, A, source, est, horizon);
    return res;
}

// Uniformly random reduced word: length uniform on [0, max_len], letters
// uniform among the non-cancelling continuations.
ReducedWord random_reduced_word(RngStream& rng, int rank, std::int64_t max_len) {
    const auto letter_of_rank = [](int r) {
        return static_cast<Letter>(r % 2 == 0 ? r / 2 + 1 : -(r / 2 + 1));
    };
    const auto len = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(max_len + 1)));
    ReducedWord w;
    w.letters.reserve(static_cast<std::size_t>(len));
    for (std::int64_t i = 0; i < len; ++i) {
        if (w.letters.empty()) {
            w.letters.push_back(
                letter_of_rank(static_cast<int>(rng.next_below(2 * rank))));
        } else {
            const int forbidden = letter_rank(static_cast<Letter>(-w.letters.back()));
            int r = static_cast<int>(rng.next_below(2 * rank - 1));
            if (r >= forbidden) ++r;
            w.letters.push_back(letter_of_rank(r));
        }
    }
    return w;
}

ExperimentResult run_floyd(const ExperimentConfig& cfg) {
    const FreeGroup G(cfg.k);
    const ScalingFunction F = ScalingFunction::parse(cfg.scaling);
    const std::int64_t R = cfg.truncation_radius;
    const std::int64_t sample_radius = R - 2;
    ExperimentResult res;
    std::int64_t certified = 0, ok = 0, violated = 0;
    double max_excess = -std::numeric_limits<double>::infinity();
    std::int64_t max_r = 0;
    for (std::int64_t p = 0; p < cfg.pairs; ++p) {
        RngStream rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(p));
        const ReducedWord u = random_reduced_word(rng, cfg.k, sample_radius);
        const ReducedWord v = random_reduced_word(rng, cfg.k, sample_radius);
        const FloydDistance fd = floyd_distance(u, v, F, R);
        const double bound = karlsson_bound(u, v, F);
        const std::int64_t r = gromov_product(ReducedWord{}, u, v);
        max_r = std::max(max_r, r);
        ReportRow row;
        row.trial = p;
        row.seed = derived_seed(cfg.seed, static_cast<std::uint64_t>(p));
        row.n = r;
        row.d_x_wn = fd.value;
        if (!fd.certified) {
            row.verdict = "uncertified";
        } else {
            ++certified;
            max_excess = std::max(max_excess, fd.value - bound);
            if (fd.value <= bound + 1e-12) {
                ++ok;
                row.verdict = "bound-ok";
            } else {
                ++violated;
                row.verdict = "bound-violated";
            }
        }
        res.rows.push_back(row);
    }
    summary_header(res, cfg, "floyd");
    res.summary.push_back("scaling=" + F.to_string());
    res.summary.push_back("truncation_radius=" + fmt_i64(R));
    res.summary.push_back("pairs=" + fmt_i64(cfg.pairs));
    res.summary.push_back("certified=" + fmt_i64(certified));
    res.summary.push_back("bound_ok=" + fmt_i64(ok));
    res.summary.push_back("bound_violated=" + fmt_i64(violated));
    res.summary.push_back("max_gromov_product=" + fmt_i64(max_r));
    res.summary.push_back("max_value_minus_bound=" +
                          (certified > 0 ? fmt_double(max_excess) : std::string("na")));
    res.summary.push_back(std::string("verdict=") +
                          (violated == 0 && certified == cfg.pairs ? "bound-ok"
                                                                   : "bound-violated"));
    return res;
}

ExperimentResult run_oracle(const ExperimentConfig& cfg) {
    const LampGroup G(cfg.m, cfg.k);
    const LampBallTable table = lamp_ball_table(G, cfg.oracle_radius);
    std::vector<std::int64_t> shell_states(static_cast<std::size_t>(cfg.oracle_radius) + 1, 0);
    std::vector<std::int64_t> shell_bad(static_cast<std::size_t>(cfg.oracle_radius) + 1, 0);
    for (const auto& [lit, d] : table.dist) {
        const LampState g = G.parse_element(lit);
        ++shell_states[static_cast<std::size_t>(d)];
        if (G.word_length(g) != d) ++shell_bad[static_cast<std::size_t>(d)];
    }
    ExperimentResult res;
    std::int64_t total = 0, bad = 0;
    for (std::int64_t d = 0; d <= cfg.oracle_radius; ++d) {
        total += shell_states[static_cast<std::size_t>(d)];
        bad += shell_bad[static_cast<std::size_t>(d)];
        ReportRow row;
        row.trial = d;
        row.seed = cfg.seed;
        row.n = d;
        row.d_x_wn = static_cast<double>(d);
        row.verdict = shell_bad[static_cast<std::size_t>(d)] == 0
                          ? "exact"
                          : "mismatch:" + fmt_i64(shell_bad[static_cast<std::size_t>(d)]);
        res.rows.push_back(row);
    }
    summary_header(res, cfg, "lamplighter-oracle");
    res.summary.push_back("m=" + fmt_i64(cfg.m));
    res.summary.push_back("k=" + fmt_i64(cfg.k));
    res.summary.push_back("oracle_radius=" + fmt_i64(cfg.oracle_radius));
    res.summary.push_back("states=" + fmt_i64(total));
    for (std::int64_t d = 0; d <= cfg.oracle_radius; ++d)
        res.summary.push_back("shell r=" + fmt_i64(d) +
                              " states=" + fmt_i64(shell_states[static_cast<std::size_t>(d)]) +
                              " mismatches=" + fmt_i64(shell_bad[static_cast<std::size_t>(d)]));
    res.summary.push_back("mismatches=" + fmt_i64(bad));
    res.summary.push_back(std::string("verdict=") + (bad == 0 ? "exact" : "mismatch"));
    return res;
}

ExperimentResult run_visibility(const ExperimentConfig& cfg) {
    const std::vector<std::int64_t> depths = resolved_depths(cfg);
    VisibilityReport report;
    if (cfg.space == "tree") {
        const ReducedWord xi = parse_word(cfg.xi, cfg.k);
        const ReducedWord eta = parse_word(cfg.eta, cfg.k);
        report = visibility_probe(
            depths,
            [&](std::int64_t d) {
                return std::pair{periodic_truncate(xi, d), periodic_truncate(eta, d)};
            },
            [&](const ReducedWord& u, const ReducedWord& v) {
                return static_cast<double>(
                    distance_to_segment(ReducedWord{}, tree_geodesic(u, v)));
            });
    } else {
        const LampGroup G(cfg.m, cfg.k);
        const ReducedWord xi = parse_word(cfg.xi, cfg.k);
        const auto segment_dist = [&](const LampState& u, const LampState& v) {
            const std::vector<RouteOp> ops = lamp_route(G, u, v);
            RouteCursor cur(G, u, ops);
            std::int64_t best = G.word_length(u);
            for (std::size_t t = 1; t <= ops.size(); ++t)
                best = std::min(best, G.word_length(cur.at(t)));
            return static_cast<double>(best);
        };
        if (cfg.probe == "lambda") {
            const ReducedWord eta = parse_word(cfg.eta, cfg.k);
            const LampConfig lx = trim(cfg.lamps_xi).empty()
                                      ? LampConfig(cfg.m)
                                      : parse_lamp_decoration(G, cfg.lamps_xi);
            const LampConfig le = trim(cfg.lamps_eta).empty()
                                      ? LampConfig(cfg.m)
                                      : parse_lamp_decoration(G, cfg.lamps_eta);
            report = visibility_probe(
                depths,
                [&](std::int64_t d) {
                    return std::pair{LampState{periodic_truncate(xi, d), lx},
                                     LampState{periodic_truncate(eta, d), le}};
                },
                segment_dist);
        } else {
            // Same end twice, one side carrying a lamp that marches with the
            // walker: the connecting segments must drift away from the root.
            report = visibility_probe(
                depths,
                [&](std::int64_t d) {
                    const ReducedWord pos = periodic_truncate(xi, d);
                    LampState lit{pos, LampConfig(cfg.m)};
                    lit.lamps.add_at(pos, 1);
                    return std::pair{lit, LampState{pos, LampConfig(cfg.m)}};
                },
                segment_dist);
        }
    }
    ExperimentResult res;
    for (std::size_t i = 0; i < report.depths.size(); ++i) {
        ReportRow row;
        row.trial = static_cast<std::int64_t>(i);
        row.seed = cfg.seed;
        row.n = report.depths[i];
        row.d_x_wn = report.radii[i];
        row.nearest_dist = report.running_max[i];
        row.verdict = "ok";
        res.rows.push_back(row);
    }
    summary_header(res, cfg, "visibility");
    res.summary.push_back("probe=" + cfg.probe);
    res.summary.push_back("xi=" + cfg.xi);
    if (cfg.probe == "lambda") res.summary.push_back("eta=" + cfg.eta);
    res.summary.push_back("depths=" + fmt_i64(depths.front()) + ".." + fmt_i64(depths.back()));
    res.summary.push_back("final_radius=" + fmt_double(report.radii.back()));
    res.summary.push_back("running_max=" + fmt_double(report.running_max.back()));
    res.summary.push_back(std::string("stabilized=") + (report.stabilized ? "yes" : "no"));
    res.summary.push_back(std::string("verdict=") +
                          (report.stabilized ? "stably-visible" : "not-stably-visible"));
    return res;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& command) {
    const std::vector<std::string> problems = validate_config(cfg, command);
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) {
            msg += "\n  ";
            msg += p;
        }
        throw ConfigError(msg);
    }
    if (command == "drift") return run_drift(cfg);
    if (command == "track") return run_track(cfg);
    if (command == "floyd") return run_floyd(cfg);
    if (command == "lamplighter-oracle") return run_oracle(cfg);
    return run_visibility(cfg);
}

} // namespace geowalk
