#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "bud/math.hpp"
#include "bud/rng.hpp"

using namespace bud;

TEST_CASE("streams are deterministic") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams and seeds decorrelate") {
    RngStream a(42, 0), b(42, 1), c(43, 0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 200; ++i) {
        seen.insert(a.next_u64());
        seen.insert(b.next_u64());
        seen.insert(c.next_u64());
    }
    CHECK(seen.size() == 600);  // collisions are ~2^-50 events
}

TEST_CASE("uniforms stay strictly inside (0,1) with the right first moments") {
    RngStream r(123, 5);
    const int n = 200000;
    KahanSum s, s2;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        in_range = in_range && u > 0.0 && u < 1.0;
        s.add(u);
        s2.add(u * u);
    }
    CHECK(in_range);
    const double mean = s.value() / n;
    const double var = s2.value() / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(var - 1.0 / 12.0) < 4.0 * 0.0745 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("lagged pairs show no gross serial correlation") {
    RngStream r(9, 1);
    const int n = 100000;
    double prev = r.uniform();
    KahanSum cross;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        cross.add((u - 0.5) * (prev - 0.5));
        prev = u;
    }
    CHECK(std::abs(12.0 * cross.value() / n) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("copies reproduce the remaining sequence") {
    RngStream a(1001, 3);
    a.uniform();
    RngStream copy = a;
    std::vector<double> x, y;
    for (int i = 0; i < 32; ++i) x.push_back(a.uniform());
    for (int i = 0; i < 32; ++i) y.push_back(copy.uniform());
    CHECK(x == y);
}
