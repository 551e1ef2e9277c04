#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "geowalk/floyd.hpp"
#include "geowalk/rng.hpp"
#include "geowalk/tree.hpp"
#include "geowalk/words.hpp"

using namespace geowalk;

namespace {

ReducedWord w(const char* text) { return parse_word(text, 2); }

ReducedWord random_vertex(RngStream& rng, std::uint64_t max_len) {
    ReducedWord out;
    const std::uint64_t len = rng.next_below(max_len + 1);
    for (std::uint64_t i = 0; i < len; ++i) {
        Letter l;
        do {
            const std::uint64_t r = rng.next_below(4);
            l = static_cast<Letter>(r < 2 ? static_cast<int>(r) + 1
                                          : -(static_cast<int>(r) - 1));
        } while (!out.empty() && out.letters.back() == static_cast<Letter>(-l));
        out.letters.push_back(l);
    }
    return out;
}

} // namespace

TEST_CASE("scaling function values and parsing") {
    const auto geom = ScalingFunction::geometric(0.5);
    CHECK(geom.value(0) == 1.0);
    CHECK(geom.value(3) == doctest::Approx(0.125));
    const auto poly = ScalingFunction::polynomial(2.0);
    CHECK(poly.value(0) == 1.0);
    CHECK(poly.value(3) == doctest::Approx(1.0 / 16.0));

    CHECK(ScalingFunction::parse("geom:0.5").value(2) == doctest::Approx(0.25));
    CHECK(ScalingFunction::parse("poly:2").value(1) == doctest::Approx(0.25));
    CHECK(ScalingFunction::parse(geom.to_string()).value(5) == doctest::Approx(geom.value(5)));
    CHECK(ScalingFunction::parse(poly.to_string()).value(5) == doctest::Approx(poly.value(5)));

    CHECK_THROWS_AS(ScalingFunction::parse("geom:1.5"), ConfigError);
    CHECK_THROWS_AS(ScalingFunction::parse("geom:0"), ConfigError);
    CHECK_THROWS_AS(ScalingFunction::parse("poly:1"), ConfigError);
    CHECK_THROWS_AS(ScalingFunction::parse("linear:2"), ConfigError);
    CHECK_THROWS_AS(ScalingFunction::parse("geom"), ConfigError);

    for (int r = 0; r < 20; ++r) {
        CHECK(geom.value(r + 1) < geom.value(r));
        CHECK(poly.value(r + 1) < poly.value(r));
    }
}

TEST_CASE("tails match closed sums of the underlying series") {
    const auto geom = ScalingFunction::geometric(0.5);
    CHECK(geom.tail(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(geom.tail(4) == doctest::Approx(0.125).epsilon(1e-14));

    // sum_{m >= 1} m^-2 = pi^2 / 6 and sum_{m >= 1} m^-3 = 1.202056903159594...
    const auto poly2 = ScalingFunction::polynomial(2.0);
    const double basel = std::acos(-1.0) * std::acos(-1.0) / 6.0;
    CHECK(poly2.tail(0) == doctest::Approx(basel).epsilon(1e-13));
    const auto poly3 = ScalingFunction::polynomial(3.0);
    CHECK(poly3.tail(0) == doctest::Approx(1.2020569031595943).epsilon(1e-13));

    // Peeling one term off the tail must give back the value.
    for (const auto& F : {geom, poly2, poly3, ScalingFunction::polynomial(1.25)}) {
        for (std::int64_t r : {0, 1, 2, 5, 17, 60}) {
            CHECK(F.tail(r) - F.tail(r + 1) == doctest::Approx(F.value(r)).epsilon(1e-11));
            CHECK(F.tail(r) > F.value(r)); // strictly more terms remain
        }
    }
}

TEST_CASE("edge weights take the lighter endpoint") {
    const auto F = ScalingFunction::geometric(0.5);
    CHECK(edge_weight(ReducedWord{}, w("a"), F) == doctest::Approx(0.5));
    CHECK(edge_weight(w("ab"), w("a"), F) == doctest::Approx(0.25));
    CHECK_THROWS_AS(edge_weight(w("a"), w("b"), F), std::invalid_argument);
    CHECK_THROWS_AS(edge_weight(w("a"), w("a"), F), std::invalid_argument);
}

TEST_CASE("tree-path cost agrees with dijkstra over the weighted ball") {
    const FreeGroup G(2);
    for (const auto& F :
         {ScalingFunction::geometric(0.5), ScalingFunction::polynomial(2.0)}) {
        const auto ball = FloydBall::build(G, 7, F);
        RngStream rng(31);
        for (int i = 0; i < 150; ++i) {
            const auto u = random_vertex(rng, 5);
            const auto v = random_vertex(rng, 5);
            const auto fd = floyd_distance(u, v, F, 7);
            CHECK(fd.certified);
            CHECK(fd.value == doctest::Approx(ball.dijkstra(u, v)).epsilon(1e-12));
        }
    }
}

TEST_CASE("distance bound from the escape radius") {
    const auto geom = ScalingFunction::geometric(0.5);
    // Opposite generators pass through the identity: r = 0.
    CHECK(karlsson_bound(w("a"), w("a'"), geom) == doctest::Approx(4.0));
    // Segment [aab, aab'] stays at distance 2 from the identity.
    CHECK(karlsson_bound(w("aab"), w("aab'"), geom) == doctest::Approx(3.0));
    CHECK(karlsson_bound_at(0, geom) == doctest::Approx(4.0));

    RngStream rng(32);
    for (const auto& F :
         {ScalingFunction::geometric(0.5), ScalingFunction::polynomial(2.0)}) {
        for (int i = 0; i < 200; ++i) {
            const auto u = random_vertex(rng, 8);
            const auto v = random_vertex(rng, 8);
            const auto fd = floyd_distance(u, v, F, 10);
            CHECK(fd.value <= karlsson_bound(u, v, F) + 1e-12);
        }
    }
}

TEST_CASE("truncation budget violations are resource errors") {
    const auto F = ScalingFunction::geometric(0.5);
    ReducedWord deep;
    for (int i = 0; i < 9; ++i) deep.letters.push_back(1);
    CHECK_THROWS_AS(floyd_distance(deep, ReducedWord{}, F, 10), ResourceError);
    CHECK_NOTHROW(floyd_distance(deep, ReducedWord{}, F, 11));

    const FreeGroup G(2);
    CHECK_THROWS_AS(FloydBall::build(G, 12, F, 1000), ResourceError);
}
