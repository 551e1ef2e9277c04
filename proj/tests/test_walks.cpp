#include "doctest.h"

#include <cstdint>
#include <string>
#include <vector>

#include "geowalk/lamplighter.hpp"
#include "geowalk/measure.hpp"
#include "geowalk/rng.hpp"
#include "geowalk/walks.hpp"
#include "geowalk/words.hpp"

using namespace geowalk;

TEST_CASE("walks store aligned steps, prefixes, and images") {
    const FreeGroup G(2);
    const auto mu = uniform_measure(G, G.generators());
    RngStream rng = derive_stream(7, 0);
    const auto path = walk(G, mu, 200, G.basepoint(), rng, derived_seed(7, 0));
    REQUIRE(path.length() == 200);
    CHECK(path.seed == derived_seed(7, 0));

    auto acc = G.identity();
    for (std::size_t i = 0; i < path.length(); ++i) {
        acc = G.compose(acc, path.steps[i]);
        CHECK(path.prefixes[i] == acc);
        CHECK(path.images[i] == G.act(acc, G.basepoint()));
    }

    RngStream replay = derive_stream(7, 0);
    const auto again = walk(G, mu, 200, G.basepoint(), replay);
    for (std::size_t i = 0; i < path.length(); ++i)
        CHECK(again.prefixes[i] == path.prefixes[i]);
}

TEST_CASE("bilateral paths draw increments in a single pass from -N to N") {
    const FreeGroup G(2);
    const auto mu = uniform_measure(G, G.generators());
    const std::int64_t N = 25;

    RngStream draws = derive_stream(9, 3);
    std::vector<std::size_t> idx;
    for (std::int64_t i = 0; i < 2 * N + 1; ++i) idx.push_back(mu.sample_index(draws));

    RngStream rng = derive_stream(9, 3);
    const auto path = bilateral_walk(G, mu, N, G.basepoint(), rng);
    for (std::int64_t k = -N; k <= N; ++k)
        CHECK(path.step_at(k) == mu.atoms[idx[static_cast<std::size_t>(N + k)]].first);

    auto w = G.identity();
    for (std::int64_t n = 1; n <= N; ++n) {
        w = G.compose(w, path.step_at(n));
        CHECK(path.fwd_prefixes[static_cast<std::size_t>(n - 1)] == w);
    }
    auto b = G.identity();
    for (std::int64_t j = 0; j <= N; ++j) {
        b = G.compose(b, G.inverse(path.step_at(-j)));
        CHECK(path.bwd_prefixes[static_cast<std::size_t>(j)] == b);
    }
}

TEST_CASE("dirac increments make both sides powers of one element") {
    const FreeGroup G(2);
    const auto g = G.parse_element("ab");
    const auto mu = dirac_measure(G, g);
    RngStream rng(3);
    const auto path = bilateral_walk(G, mu, 6, G.basepoint(), rng);
    auto fwd = G.identity();
    auto bwd = G.identity();
    const auto ginv = G.inverse(g);
    for (std::int64_t n = 1; n <= 6; ++n) {
        fwd = G.compose(fwd, g);
        CHECK(path.fwd_prefixes[static_cast<std::size_t>(n - 1)] == fwd);
    }
    for (std::int64_t j = 0; j <= 6; ++j) {
        bwd = G.compose(bwd, ginv);
        CHECK(path.bwd_prefixes[static_cast<std::size_t>(j)] == bwd);
    }
}

TEST_CASE("shifting re-bases forward prefixes by left division") {
    const FreeGroup G(2);
    const auto mu = uniform_measure(G, G.generators());
    RngStream rng = derive_stream(11, 1);
    const auto path = bilateral_walk(G, mu, 20, G.basepoint(), rng);

    for (std::int64_t k : {-7, -1, 0, 3, 12}) {
        const auto shifted = shift_path(G, path, k);
        CHECK(shifted.horizon == 20 - std::abs(k));
        for (std::int64_t j = -shifted.horizon; j <= shifted.horizon; ++j)
            CHECK(shifted.step_at(j) == path.step_at(j + k));
        // w'_n = g_{k+1} ... g_{k+n}, the left division of prefixes at k.
        for (std::int64_t n = 1; n <= shifted.horizon; ++n) {
            auto expect = G.identity();
            for (std::int64_t i = k + 1; i <= k + n; ++i)
                expect = G.compose(expect, path.step_at(i));
            CHECK(shifted.fwd_prefixes[static_cast<std::size_t>(n - 1)] == expect);
        }
    }
    CHECK_THROWS_AS(shift_path(G, path, 20), std::invalid_argument);
}

TEST_CASE("reflected walks invert each increment") {
    const FreeGroup G(2);
    const auto mu = make_measure(
        G, {{G.parse_element("ab"), 0.5}, {G.parse_element("b"), 0.5}});
    const auto mu_rev = reflect(G, mu);

    RngStream fwd = derive_stream(4, 0);
    RngStream rev = derive_stream(4, 0);
    const auto p = walk(G, mu, 50, G.basepoint(), fwd);
    const auto q = walk(G, mu_rev, 50, G.basepoint(), rev);
    // Same draw sequence, inverted atoms: the reflected prefix is the inverse
    // of the original increments multiplied in reverse order.
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(q.steps[i] == G.inverse(p.steps[i]));
        auto reversed = G.identity();
        for (std::size_t j = 0; j <= i; ++j)
            reversed = G.compose(p.steps[j], reversed);
        CHECK(q.prefixes[i] == G.inverse(reversed));
    }
}

TEST_CASE("ball growth counts free group balls exactly") {
    const FreeGroup G(2);
    CHECK(ball_growth(G, G.generators(), 0.0) == 1);
    CHECK(ball_growth(G, G.generators(), 1.0) == 5);
    CHECK(ball_growth(G, G.generators(), 2.0) == 17);
    CHECK(ball_growth(G, G.generators(), 3.0) == 53);

    const FreeGroup line(1);
    CHECK(ball_growth(line, line.generators(), 4.0) == 9);

    CHECK_THROWS_AS(ball_growth(G, G.generators(), 6.0, 100), ResourceError);
}

TEST_CASE("element budget aborts runaway walks naming the step") {
    const FreeGroup G(2);
    const auto mu = dirac_measure(G, G.parse_element("a"));
    RngStream rng(1);
    CHECK_THROWS_AS(walk(G, mu, 10, G.basepoint(), rng, 0, 3), ResourceError);
    try {
        RngStream fresh(1);
        walk(G, mu, 10, G.basepoint(), fresh, 0, 3);
        FAIL("budget breach not reported");
    } catch (const ResourceError& e) {
        CHECK(std::string(e.what()).find("step 4") != std::string::npos);
    }

    const LampGroup L(2, 2);
    const auto nu = uniform_measure(L, L.generators());
    RngStream lr(2);
    CHECK_THROWS_AS(walk(L, nu, 4000, L.basepoint(), lr, 0, 4), ResourceError);
}
