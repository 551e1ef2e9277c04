#include "geowalk/hplane.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace geowalk {

namespace {

constexpr double DET_TOL = 1e-12;

void check_finite(const MoebiusMap& f) {
    if (!std::isfinite(f.a) || !std::isfinite(f.b) || !std::isfinite(f.c) ||
        !std::isfinite(f.d))
        throw ResourceError("moebius entries overflowed; use the scaled product form");
}

} // namespace

MoebiusMap make_moebius(double a, double b, double c, double d) {
    MoebiusMap f{a, b, c, d};
    check_finite(f);
    if (std::abs(f.det() - 1.0) > DET_TOL)
        throw ConfigError("moebius map must have determinant 1 within 1e-12, got det = " +
                          std::to_string(f.det()));
    return f;
}

MoebiusMap moebius_identity() { return MoebiusMap{1.0, 0.0, 0.0, 1.0}; }

MoebiusMap moebius_compose(const MoebiusMap& f, const MoebiusMap& g) {
    MoebiusMap h{f.a * g.a + f.b * g.c, f.a * g.b + f.b * g.d, f.c * g.a + f.d * g.c,
                 f.c * g.b + f.d * g.d};
    check_finite(h);
    // Rescale away the multiplicative drift of repeated products.
    const double det = h.det();
    if (!(det > 0.0))
        throw ResourceError("moebius composition lost positivity of the determinant");
    const double s = std::sqrt(det);
    h.a /= s;
    h.b /= s;
    h.c /= s;
    h.d /= s;
    return h;
}

MoebiusMap moebius_inverse(const MoebiusMap& f) { return MoebiusMap{f.d, -f.b, -f.c, f.a}; }

HPoint moebius_apply(const MoebiusMap& f, const HPoint& z) {
    const double u = f.a * z.re + f.b;
    const double v = f.c * z.re + f.d;
    const double den = v * v + f.c * f.c * z.im * z.im;
    if (!(den > 0.0)) throw std::invalid_argument("moebius_apply: degenerate denominator");
    HPoint w;
    w.re = (u * v + f.a * f.c * z.im * z.im) / den;
    w.im = z.im * f.det() / den; // det > 0 keeps the half-plane invariant
    return w;
}

double moebius_apply_boundary(const MoebiusMap& f, double x) {
    if (std::isinf(x)) return f.c != 0.0 ? f.a / f.c : std::numeric_limits<double>::infinity();
    const double den = f.c * x + f.d;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return (f.a * x + f.b) / den;
}

double hyp_distance(const HPoint& z, const HPoint& w) {
    const double dx = z.re - w.re;
    const double dy = z.im - w.im;
    const double chord = std::sqrt(dx * dx + dy * dy);
    // sinh(d/2) = |z-w| / (2 sqrt(im z im w)); accurate for nearby points.
    return 2.0 * std::asinh(chord / (2.0 * std::sqrt(z.im * w.im)));
}

HPoint HGeodesic::point_at(double t) const {
    const double u = anchor + dir * t;
    if (vertical) return HPoint{x0, std::exp(u)};
    // With u = log tan(theta/2): cos theta = -tanh u, sin theta = sech u.
    return HPoint{center - radius * std::tanh(u), radius / std::cosh(u)};
}

double HGeodesic::nearest_distance(const HPoint& z) const {
    if (vertical) return std::asinh(std::abs(z.re - x0) / z.im);
    const double dx = z.re - center;
    const double q = dx * dx + z.im * z.im - radius * radius;
    return std::asinh(std::abs(q) / (2.0 * radius * z.im));
}

double HGeodesic::param_distance(const HPoint& z, double t) const {
    return hyp_distance(z, point_at(t));
}

double HGeodesic::coordinate_of(const HPoint& z) const {
    if (vertical) return std::log(z.im);
    const double dx = z.re - center;
    // Two algebraically equal half-angle forms; pick the one without
    // cancellation on this side of the apex.
    if (dx >= 0.0) return std::log(z.im / (radius + dx));
    return std::log((radius - dx) / z.im);
}

HGeodesic geodesic_through(const HPoint& z, const HPoint& w) {
    const double scale = 1.0 + std::abs(z.re) + std::abs(w.re);
    HGeodesic geo;
    if (std::abs(z.re - w.re) <= 1e-14 * scale) {
        if (std::abs(std::log(w.im / z.im)) == 0.0)
            throw std::invalid_argument("geodesic_through: points coincide");
        geo.vertical = true;
        geo.x0 = z.re;
        geo.anchor = std::log(z.im);
        geo.dir = (w.im > z.im) ? +1 : -1;
        return geo;
    }
    const double zz = z.re * z.re + z.im * z.im;
    const double ww = w.re * w.re + w.im * w.im;
    geo.vertical = false;
    geo.center = (zz - ww) / (2.0 * (z.re - w.re));
    geo.radius = std::hypot(z.re - geo.center, z.im);
    geo.anchor = geo.coordinate_of(z);
    geo.dir = (geo.coordinate_of(w) > geo.anchor) ? +1 : -1;
    return geo;
}

HPoint hyp_midpoint(const HPoint& x, const HPoint& y) {
    const HGeodesic geo = geodesic_through(x, y);
    return geo.point_at(0.5 * hyp_distance(x, y));
}

namespace {

// Orbit tail classifier shared by both image formats.  Individual steps move
// a bounded hyperbolic distance, so Euclidean heights jitter sample to
// sample even along a convergent orbit; the final-quarter monotonicity is
// therefore judged on block envelopes (up to 8 consecutive blocks) instead
// of consecutive samples.  Heights sink blockwise toward a finite endpoint;
// moduli rise blockwise with height bounded below when escaping to infinity.
BoundaryPoint classify_orbit_tail(const std::vector<double>& log_y,
                                  const std::vector<double>& log_mod, double last_x) {
    const std::size_t n = log_y.size();
    const std::size_t window = (n + 3) / 4;
    const std::size_t start = n - window;
    const std::size_t blocks = std::min<std::size_t>(8, window);
    if (blocks < 2) return BoundaryPoint::unstable();
    constexpr double kLog2 = 0.6931471805599453;
    std::vector<double> y_max(blocks, -std::numeric_limits<double>::infinity());
    std::vector<double> mod_min(blocks, std::numeric_limits<double>::infinity());
    double min_log_y = std::numeric_limits<double>::infinity();
    for (std::size_t i = start; i < n; ++i) {
        const std::size_t b = ((i - start) * blocks) / window;
        y_max[b] = std::max(y_max[b], log_y[i]);
        mod_min[b] = std::min(mod_min[b], log_mod[i]);
        min_log_y = std::min(min_log_y, log_y[i]);
    }
    bool sinking = true, rising = true;
    for (std::size_t b = 1; b < blocks; ++b) {
        if (!(y_max[b] < y_max[b - 1])) sinking = false;
        if (!(mod_min[b] > mod_min[b - 1])) rising = false;
    }
    if (sinking) return BoundaryPoint::finite(last_x);
    if (rising && min_log_y >= log_y[start] - kLog2) return BoundaryPoint::infinity();
    return BoundaryPoint::unstable();
}

} // namespace

BoundaryPoint boundary_estimate(const std::vector<HPoint>& images) {
    if (images.empty()) throw std::invalid_argument("boundary_estimate: empty image list");
    std::vector<double> log_y, log_mod;
    log_y.reserve(images.size());
    log_mod.reserve(images.size());
    for (const HPoint& p : images) {
        log_y.push_back(std::log(p.im));
        log_mod.push_back(std::log(std::hypot(p.re, p.im)));
    }
    return classify_orbit_tail(log_y, log_mod, images.back().re);
}

HGeodesic boundary_pencil(const BoundaryPoint& xi, const BoundaryPoint& eta) {
    if (xi.kind == BoundaryPoint::Kind::Unstable || eta.kind == BoundaryPoint::Kind::Unstable)
        throw std::invalid_argument("boundary_pencil: unstable boundary estimate");
    HGeodesic geo;
    if (xi.kind == BoundaryPoint::Kind::Infinity || eta.kind == BoundaryPoint::Kind::Infinity) {
        if (xi.kind == eta.kind)
            throw std::invalid_argument("boundary_pencil: coincident boundary points");
        geo.vertical = true;
        geo.x0 = (xi.kind == BoundaryPoint::Kind::Finite) ? xi.value : eta.value;
        geo.anchor = 0.0; // height-1 point
        geo.dir = (xi.kind == BoundaryPoint::Kind::Infinity) ? +1 : -1;
        return geo;
    }
    const double scale = 1.0 + std::abs(xi.value) + std::abs(eta.value);
    if (std::abs(xi.value - eta.value) <= 1e-12 * scale)
        throw std::invalid_argument("boundary_pencil: coincident boundary points");
    geo.vertical = false;
    geo.center = 0.5 * (xi.value + eta.value);
    geo.radius = 0.5 * std::abs(xi.value - eta.value);
    geo.anchor = 0.0; // apex
    geo.dir = (xi.value < eta.value) ? +1 : -1;
    return geo;
}

MoebiusMap sanov_translation() { return make_moebius(1.0, 2.0, 0.0, 1.0); }
MoebiusMap sanov_parabolic() { return make_moebius(1.0, 0.0, 2.0, 1.0); }

HPlaneSpace::Element HPlaneSpace::compose(const Element& f, const Element& g) const {
    return moebius_compose(f, g);
}

std::vector<HPlaneSpace::Element> HPlaneSpace::generators() const {
    const MoebiusMap t = sanov_translation();
    const MoebiusMap p = sanov_parabolic();
    return {t, moebius_inverse(t), p, moebius_inverse(p)};
}

std::string HPlaneSpace::element_literal(const Element& f) const {
    // +-M act identically; fix the sign by the first sizeable entry.
    double sign = 1.0;
    for (double v : {f.a, f.b, f.c, f.d}) {
        if (std::abs(v) > 1e-13) {
            sign = v < 0.0 ? -1.0 : 1.0;
            break;
        }
    }
    std::ostringstream out;
    out.precision(17);
    out << sign * f.a << " " << sign * f.b << " " << sign * f.c << " " << sign * f.d;
    return out.str();
}

HPlaneSpace::Element HPlaneSpace::parse_element(const std::string& text) const {
    std::istringstream in(text);
    double a, b, c, d;
    if (!(in >> a >> b >> c >> d))
        throw ConfigError("bad moebius literal '" + text + "': expected four real entries");
    std::string rest;
    if (in >> rest)
        throw ConfigError("bad moebius literal '" + text + "': trailing token '" + rest + "'");
    return make_moebius(a, b, c, d);
}

// ---- scale-free product form --------------------------------------------

ScaledMoebius scaled_identity() { return ScaledMoebius{moebius_identity(), 0.0}; }

namespace {

ScaledMoebius renormalized(MoebiusMap h, double log_det_in) {
    const double lam = std::max(std::max(std::abs(h.a), std::abs(h.b)),
                                std::max(std::abs(h.c), std::abs(h.d)));
    if (!(lam > 0.0) || !std::isfinite(lam))
        throw ResourceError("scaled moebius product degenerated");
    h.a /= lam;
    h.b /= lam;
    h.c /= lam;
    h.d /= lam;
    // det is tracked analytically: entry cancellation makes ad - bc useless
    // once the scale is large.
    return ScaledMoebius{h, log_det_in - 2.0 * std::log(lam)};
}

} // namespace

ScaledMoebius scaled_left_mul(const MoebiusMap& g, const ScaledMoebius& M) {
    const MoebiusMap h{g.a * M.m.a + g.b * M.m.c, g.a * M.m.b + g.b * M.m.d,
                       g.c * M.m.a + g.d * M.m.c, g.c * M.m.b + g.d * M.m.d};
    return renormalized(h, M.log_det + std::log(g.det()));
}

ScaledMoebius scaled_right_mul(const ScaledMoebius& M, const MoebiusMap& g) {
    const MoebiusMap h{M.m.a * g.a + M.m.b * g.c, M.m.a * g.b + M.m.b * g.d,
                       M.m.c * g.a + M.m.d * g.c, M.m.c * g.b + M.m.d * g.d};
    return renormalized(h, M.log_det + std::log(g.det()));
}

double scaled_displacement(const ScaledMoebius& M) {
    const double sumsq =
        M.m.a * M.m.a + M.m.b * M.m.b + M.m.c * M.m.c + M.m.d * M.m.d;
    // cosh d(i, Mi) = ||M||_F^2 / (2 det M).
    const double log_cosh = std::log(0.5 * sumsq) - M.log_det;
    if (log_cosh > 35.0) return log_cosh + std::log(2.0);
    const double x = std::exp(log_cosh);
    return std::acosh(std::max(1.0, x));
}

double scaled_apply_boundary(const ScaledMoebius& M, double x) {
    return moebius_apply_boundary(M.m, x);
}

LogPoint scaled_apply(const ScaledMoebius& M, const LogPoint& p) {
    const MoebiusMap& f = M.m;
    LogPoint out;
    if (p.log_y > -300.0) {
        const double y = std::exp(p.log_y);
        const double u = f.a * p.x + f.b;
        const double v = f.c * p.x + f.d;
        const double den = v * v + f.c * f.c * y * y;
        out.x = (u * v + f.a * f.c * y * y) / den;
        out.log_y = p.log_y + M.log_det - std::log(den);
        return out;
    }
    // Height numerically zero: act on the boundary, push the height in logs.
    const double v = f.c * p.x + f.d;
    out.x = (f.a * p.x + f.b) / v;
    out.log_y = p.log_y + M.log_det - 2.0 * std::log(std::abs(v));
    return out;
}

double arc_coordinate(double center, double radius, double x, double log_y) {
    const double dx = x - center;
    if (dx >= 0.0) return log_y - std::log(radius + dx);
    return std::log(radius - dx) - log_y;
}

HPoint arc_point(double center, double radius, double u) {
    return HPoint{center - radius * std::tanh(u), radius / std::cosh(u)};
}

double log_point_distance_to_arc(double xi, double eta, const LogPoint& p) {
    const double width = std::abs(eta - xi);
    const double prod = (p.x - xi) * (p.x - eta);
    if (p.log_y > -150.0) {
        const double y = std::exp(p.log_y);
        return std::asinh(std::abs(prod + y * y) / (y * width));
    }
    if (prod == 0.0) return 0.0; // boundary endpoint of the arc itself
    const double log_sinh = std::log(std::abs(prod)) - p.log_y - std::log(width);
    if (log_sinh > 35.0) return log_sinh + std::log(2.0);
    return std::asinh(std::exp(log_sinh));
}

double log_point_distance(const LogPoint& p, const LogPoint& q) {
    // d = 2 asinh(|z - w| / (2 sqrt(y_p y_q))); carry |z - w| in log form so
    // a height below the double range only shifts log_s, never produces inf.
    const double dx = q.x - p.x;
    const double hi = std::max(p.log_y, q.log_y), lo = std::min(p.log_y, q.log_y);
    const double gap = 1.0 - std::exp(lo - hi); // |y_p - y_q| / y_hi
    double log_dist;
    if (dx == 0.0) {
        if (gap == 0.0) return 0.0;
        log_dist = hi + std::log(gap);
    } else if (hi > -300.0) {
        log_dist = std::log(std::hypot(dx, std::exp(hi) * gap));
    } else {
        // heights negligible against the horizontal separation
        log_dist = std::log(std::abs(dx));
    }
    const double log_s = log_dist - std::log(2.0) - 0.5 * (p.log_y + q.log_y);
    if (log_s > 35.0) return 2.0 * (log_s + std::log(2.0));
    return 2.0 * std::asinh(std::exp(log_s));
}

BoundaryPoint boundary_estimate_log(const std::vector<LogPoint>& images) {
    if (images.empty()) throw std::invalid_argument("boundary_estimate_log: empty image list");
    const auto log_mod = [](const LogPoint& p) {
        // log hypot(x, y) evaluated in logs so neither part can overflow.
        if (p.x == 0.0) return p.log_y;
        const double lx = std::log(std::abs(p.x));
        const double hi = std::max(lx, p.log_y), lo = std::min(lx, p.log_y);
        return hi + 0.5 * std::log1p(std::exp(2.0 * (lo - hi)));
    };
    std::vector<double> log_ys, log_mods;
    log_ys.reserve(images.size());
    log_mods.reserve(images.size());
    for (const LogPoint& p : images) {
        log_ys.push_back(p.log_y);
        log_mods.push_back(log_mod(p));
    }
    return classify_orbit_tail(log_ys, log_mods, images.back().x);
}

} // namespace geowalk
