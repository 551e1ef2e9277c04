#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geowalk/hplane.hpp"
#include "geowalk/lamplighter.hpp"
#include "geowalk/measure.hpp"
#include "geowalk/tracking.hpp"
#include "geowalk/words.hpp"

namespace geowalk {

// Flat key=value run description shared by every CLI subcommand.  Defaults
// describe the simple-random-walk tracking run on the rank-2 tree.
struct ExperimentConfig {
    std::string preset;                // f2-srw expands to the defaults below
    std::string space = "tree";        // tree | lamplighter | hplane
    int k = 2;                         // free-group rank
    int m = 2;                         // lamp modulus
    std::vector<std::string> matrices; // hplane generators, "a b c d" each
    std::string scaling = "geom:0.5";  // floyd conformal factor
    std::string measure = "srw";       // srw | switch-walk | file:<path>
    std::int64_t n = 10000;            // walk length of interest
    std::int64_t trials = 10;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> checkpoints; // empty: decadic grid up to n
    double density_c = 10.0;           // level for the occupation density
    double drift_a = -1.0;             // negative: estimate before tracking
    std::string out;                   // output directory
    int jobs = 0;                      // 0: all hardware threads
    std::int64_t truncation_radius = 12; // floyd ball radius
    std::int64_t pairs = 1000;         // floyd sample count
    std::vector<std::int64_t> depths;  // visibility schedule; empty: 1..20
    std::string probe = "lambda";      // visibility: lambda | marching
    std::string xi = "a";              // visibility end (periodic word)
    std::string eta = "b";
    std::string lamps_xi;              // lamp decorations, "<word>:<value>,..."
    std::string lamps_eta;
    std::int64_t oracle_radius = 6;    // lamplighter-oracle ball radius
};

// "key = value" lines, '#' comments, unknown keys rejected.  A preset key is
// applied first so explicit keys override it regardless of file order.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Every violated run invariant for the given subcommand, one line per
// problem, each starting with the offending key.  Empty means runnable.
std::vector<std::string> validate_config(const ExperimentConfig& cfg,
                                         const std::string& command);

// One report.csv record.  Absent values print as "na".
struct ReportRow {
    std::int64_t trial = 0;
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    std::optional<double> d_x_wn;
    std::optional<double> e_n;
    std::optional<double> nearest_dist;
    std::optional<double> density_c;
    std::string verdict = "ok";
};

struct ExperimentResult {
    std::vector<ReportRow> rows;
    std::vector<std::string> summary; // lines of summary.txt
};

// Runs a subcommand (drift | track | floyd | lamplighter-oracle |
// visibility).  Deterministic in (config, seed): the row stream is
// byte-identical for every worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& command);

// report.csv body, shortest-round-trip number formatting.
std::string csv_text(const std::vector<ReportRow>& rows);

// out key if set, else $GEOWALK_OUT, else ".".
std::string resolve_out_dir(const ExperimentConfig& cfg);

// Writes report.csv, summary.txt, and plot.gp under out_dir, creating the
// directory if needed.
void write_outputs(const ExperimentResult& res, const std::string& out_dir);

// ---- per-trial building blocks (shared with the acceptance suite) --------

// Tracking statistics of one two-sided tree walk: the pencil through the
// forward and backward end estimates at the horizon, evaluated at the
// checkpoints.  Memory stays linear in the horizon.
struct TreeTrackTrial {
    std::uint64_t seed = 0;
    std::string verdict = "tracked"; // pencil-unavailable when ends collide
    int orientation = 1;
    std::vector<CheckpointStat> stats;       // one per checkpoint
    std::vector<double> density;             // running density of {f <= C}
    std::vector<std::int64_t> displacement;  // |w_n| per checkpoint
};

TreeTrackTrial tree_track_trial(const FreeGroup& G, const FiniteMeasure<FreeGroup>& mu,
                                std::int64_t horizon,
                                const std::vector<std::int64_t>& checkpoints, double A,
                                double density_c, std::uint64_t master_seed,
                                std::int64_t trial);

// Full distance-to-pencil trace of the same walk, for the telescoping and
// increment diagnostics.
struct TreeErgodicTrial {
    std::uint64_t seed = 0;
    std::string verdict = "tracked";
    OrbitFunctionTrace trace;
};

TreeErgodicTrial tree_ergodic_trial(const FreeGroup& G, const FiniteMeasure<FreeGroup>& mu,
                                    std::int64_t horizon, std::uint64_t master_seed,
                                    std::int64_t trial);

// Lamplighter tracking against the canonical geodesic segment between the
// backward and forward images at the horizon, parameterised from the route
// point nearest the identity.  nearest is NaN unless requested; the scan is
// exact but costs a route replay per checkpoint.
struct LampTrackTrial {
    std::uint64_t seed = 0;
    std::string verdict = "tracked"; // segment-degenerate when the images meet
    int orientation = 1;
    std::vector<CheckpointStat> stats;
    std::vector<std::int64_t> displacement;
};

LampTrackTrial lamp_track_trial(const LampGroup& G, const FiniteMeasure<LampGroup>& mu,
                                std::int64_t horizon,
                                const std::vector<std::int64_t>& checkpoints, double A,
                                bool with_nearest, std::uint64_t master_seed,
                                std::int64_t trial);

// Half-plane tracking in the moving frame: every quantity at time n is
// computed after pulling back by w_n^-1, so the products stay scale-free at
// any horizon.
struct HTrackTrial {
    std::uint64_t seed = 0;
    std::string verdict = "tracked"; // boundary-unstable | boundary-collision | frame-underflow
    int orientation = 1;
    std::vector<CheckpointStat> stats;
    std::vector<double> density;
    std::vector<double> displacement; // d(i, w_n i) per checkpoint
};

HTrackTrial hplane_track_trial(const HPlaneSpace& S, const FiniteMeasure<HPlaneSpace>& mu,
                               std::int64_t horizon,
                               const std::vector<std::int64_t>& checkpoints, double A,
                               double density_c, std::uint64_t master_seed,
                               std::int64_t trial);

// Trace of f_n = d(w_n i, arc(xi, eta)) against a fixed given geodesic, for
// the telescoping and increment diagnostics.  Distances come out of the log
// coordinates, so they stay sharp after the orbit heights leave the double
// range, which happens a few dozen steps in.
OrbitFunctionTrace hplane_ergodic_trial(const HPlaneSpace& S, const FiniteMeasure<HPlaneSpace>& mu,
                                        std::int64_t horizon, double xi, double eta,
                                        std::uint64_t master_seed, std::int64_t trial);

// ---- measure construction -------------------------------------------------

FiniteMeasure<FreeGroup> tree_step_measure(const FreeGroup& G, const ExperimentConfig& cfg);
FiniteMeasure<LampGroup> lamp_step_measure(const LampGroup& G, const ExperimentConfig& cfg);
FiniteMeasure<HPlaneSpace> hplane_step_measure(const HPlaneSpace& S,
                                               const ExperimentConfig& cfg);

// Generators named by the matrices key, or the standard free pair when the
// key is empty.  Inverses are appended.
std::vector<MoebiusMap> hplane_generators(const ExperimentConfig& cfg);

} // namespace geowalk
