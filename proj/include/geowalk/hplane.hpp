#pragma once

#include <string>
#include <vector>

#include "geowalk/common.hpp"

namespace geowalk {

// Upper half-plane model.  Points keep im > 0; isometries are real Moebius
// maps with determinant one (up to the 1e-12 the floating point composition
// maintains).

struct HPoint {
    double re = 0.0;
    double im = 1.0;
};

struct MoebiusMap {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    double det() const { return a * d - b * c; }
};

// Validates ad - bc = 1 within 1e-12; used for every externally supplied map.
MoebiusMap make_moebius(double a, double b, double c, double d);

MoebiusMap moebius_identity();
MoebiusMap moebius_compose(const MoebiusMap& f, const MoebiusMap& g);
MoebiusMap moebius_inverse(const MoebiusMap& f);
HPoint moebius_apply(const MoebiusMap& f, const HPoint& z);
double moebius_apply_boundary(const MoebiusMap& f, double x); // may return inf

// arccosh(1 + |z-w|^2 / (2 im z im w)), evaluated in the half-angle form
// that stays accurate for nearby points.
double hyp_distance(const HPoint& z, const HPoint& w);

// Complete geodesic: a vertical line re = x0 or a semicircle centred on the
// real axis, carrying a unit-speed parametrization.  `anchor` stores the
// curve coordinate at parameter 0 (log-height on a line, log tan(theta/2)
// on an arc) and `dir` the orientation.
struct HGeodesic {
    bool vertical = false;
    double x0 = 0.0;
    double center = 0.0;
    double radius = 1.0;
    double anchor = 0.0;
    int dir = +1;

    HPoint point_at(double t) const;
    double nearest_distance(const HPoint& z) const;
    double param_distance(const HPoint& z, double t) const;
    // Curve coordinate (log-height / log tan(theta/2)) of a point assumed to
    // lie on the curve.
    double coordinate_of(const HPoint& z) const;
};

// Unique geodesic through two distinct points, anchored so that
// point_at(0) = z and parameters increase toward w.
HGeodesic geodesic_through(const HPoint& z, const HPoint& w);

// Point at curve-parameter d(x, y)/2 on geodesic_through(x, y).
HPoint hyp_midpoint(const HPoint& x, const HPoint& y);

// Finite boundary value, the point at infinity, or an explicit refusal.
struct BoundaryPoint {
    enum class Kind { Finite, Infinity, Unstable };
    Kind kind = Kind::Unstable;
    double value = 0.0;

    static BoundaryPoint finite(double v) { return {Kind::Finite, v}; }
    static BoundaryPoint infinity() { return {Kind::Infinity, 0.0}; }
    static BoundaryPoint unstable() { return {Kind::Unstable, 0.0}; }
};

// Heuristic boundary limit from an orbit tail: finite when the heights of
// the final quarter decrease monotonically, the point at infinity when the
// moduli grow with heights bounded below, otherwise unstable.
BoundaryPoint boundary_estimate(const std::vector<HPoint>& images);

// Geodesic joining two distinct boundary points, parameter 0 at the apex
// (height-1 point on a vertical line), positive direction toward xi.
HGeodesic boundary_pencil(const BoundaryPoint& xi, const BoundaryPoint& eta);

// Sanov generators: z -> z + 2 and z -> z / (2z + 1) generate a rank-2 free
// group of isometries.
MoebiusMap sanov_translation();
MoebiusMap sanov_parabolic();

// Group-action adapter over (MoebiusMap, HPoint) with basepoint i.
struct HPlaneSpace {
    using Element = MoebiusMap;
    using Point = HPoint;

    Element identity() const { return moebius_identity(); }
    Element compose(const Element& f, const Element& g) const;
    Element inverse(const Element& f) const { return moebius_inverse(f); }
    Point act(const Element& f, const Point& z) const { return moebius_apply(f, z); }
    double distance(const Point& z, const Point& w) const { return hyp_distance(z, w); }
    Point basepoint() const { return HPoint{0.0, 1.0}; }

    std::vector<Element> generators() const;
    std::string element_literal(const Element& f) const;
    Element parse_element(const std::string& text) const;
};

// ---- scale-free bookkeeping for long products --------------------------
//
// Entries of an n-fold product grow like exp(n), so long walks carry a
// row-normalised matrix plus the log of its determinant.  The Moebius
// action only needs the matrix up to scale; distances need log_det.

struct ScaledMoebius {
    MoebiusMap m;        // entries O(1)
    double log_det = 0.0; // log det(m); the true map has determinant 1
};

ScaledMoebius scaled_identity();

// M * g, renormalised; builds forward products W_n = W_{n-1} g_n.
ScaledMoebius scaled_right_mul(const ScaledMoebius& M, const MoebiusMap& g);
// Left-multiplication by a determinant-one map, with renormalisation.
ScaledMoebius scaled_left_mul(const MoebiusMap& g, const ScaledMoebius& M);
// d(i, M i) for the determinant-one map M represents, safe for any scale.
double scaled_displacement(const ScaledMoebius& M);
double scaled_apply_boundary(const ScaledMoebius& M, double x);

// Point with log-encoded height, for orbits that sink toward the boundary.
struct LogPoint {
    double x = 0.0;
    double log_y = 0.0;
};

LogPoint scaled_apply(const ScaledMoebius& M, const LogPoint& p);

// Stable curve coordinate of a near-boundary point on the arc over
// [center - radius, center + radius].
double arc_coordinate(double center, double radius, double x, double log_y);
HPoint arc_point(double center, double radius, double u);

// Distance from z = (x, e^log_y) to the geodesic with the given real
// endpoints, in the product form that tolerates tiny heights.
double log_point_distance_to_arc(double xi, double eta, const LogPoint& p);

// Distance between two points with log-encoded heights; safe when either
// height has left the range of a plain double.
double log_point_distance(const LogPoint& p, const LogPoint& q);

// boundary_estimate for log-encoded orbits whose heights underflow a plain
// double; same final-quarter heuristics.
BoundaryPoint boundary_estimate_log(const std::vector<LogPoint>& images);

} // namespace geowalk
