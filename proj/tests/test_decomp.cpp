#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "mpimux/decomp.hpp"

using namespace mpimux;
using namespace mpimux::decomp;

namespace {

const WeightVector kConcentricWeights{{1, 1, 1, 1, 1, 1, 1, 1, 5, 5, 5, 5, 15, 15, 15, 15}};

double dist(const Point& p, const Point& c) { return std::hypot(p.x - c.x, p.y - c.y); }

} // namespace

TEST_CASE("generate_cloud is deterministic and shaped as an annulus") {
    auto a = generate_cloud(1000, 7);
    auto b = generate_cloud(1000, 7);
    REQUIRE(a.points.size() == 1000);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.points[i].y == b.points[i].y);
    }

    auto small = generate_cloud(88, 1);
    CHECK(small.points.size() == 88);
    for (const auto& p : small.points) {
        CHECK(std::isfinite(p.x));
        CHECK(std::isfinite(p.y));
    }

    CHECK_THROWS_AS(generate_cloud(15, 1), InputError);
}

TEST_CASE("radial density concentrates points near the wall") {
    // At least half of the points inside the midpoint radius, by the r ~ u^2 law.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto cloud = generate_cloud(2000, seed);
        double r_max = 0.0, r_min = 1e9;
        for (const auto& p : cloud.points) {
            const double r = dist(p, cloud.center);
            r_max = std::max(r_max, r);
            r_min = std::min(r_min, r);
        }
        const double half = r_min + 0.5 * (r_max - r_min);
        const auto inner = std::count_if(cloud.points.begin(), cloud.points.end(),
                                         [&](const Point& p) { return dist(p, cloud.center) <= half; });
        CHECK(static_cast<double>(inner) >= 0.5 * static_cast<double>(cloud.points.size()));
    }
}

TEST_CASE("concentric assignment reproduces the exact 88-cell split") {
    auto cloud = generate_cloud(88, 3);
    auto assignment = concentric_assign(cloud, kConcentricWeights);
    auto counts = rank_cell_counts(assignment);
    REQUIRE(counts.size() == 16);
    for (int r = 0; r < 8; ++r) CHECK(counts[r] == 1);
    for (int r = 8; r < 12; ++r) CHECK(counts[r] == 5);
    for (int r = 12; r < 16; ++r) CHECK(counts[r] == 15);

    // zone shares: dense 60/88, medium 20/88, sparse 8/88
    CHECK(std::llround(100.0 * 60.0 / 88.0) == 68);
    CHECK(std::llround(100.0 * 20.0 / 88.0) == 23);
    CHECK(std::llround(100.0 * 8.0 / 88.0) == 9);

    auto fractions = counts_to_weights(assignment);
    for (int r = 0; r < 8; ++r) CHECK(fractions[r] == doctest::Approx(1.0 / 88.0));
    for (int r = 8; r < 12; ++r) CHECK(fractions[r] == doctest::Approx(5.0 / 88.0));
    for (int r = 12; r < 16; ++r) CHECK(fractions[r] == doctest::Approx(15.0 / 88.0));
}

TEST_CASE("uniform weights spread cells within one cell of n/ranks") {
    WeightVector uniform{std::vector<int>(16, 1)};
    auto cloud = generate_cloud(1000, 5);
    auto counts = rank_cell_counts(concentric_assign(cloud, uniform));
    for (int c : counts) CHECK(std::abs(c - 1000 / 16) <= 1);
}

TEST_CASE("partition and concentric monotonicity invariants hold across seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto cloud = generate_cloud(500 + static_cast<int>(seed) * 37, seed);
        auto assignment = concentric_assign(cloud, kConcentricWeights);

        // partition: every cell owned exactly once (owner image covers all cells)
        REQUIRE(assignment.owner.size() == cloud.points.size());
        for (int owner : assignment.owner) {
            CHECK(owner >= 0);
            CHECK(owner < 16);
        }

        // all zones nested: max dense radius <= min medium radius <= ... up to ties
        double dense_max = 0.0, medium_min = 1e18, medium_max = 0.0, sparse_min = 1e18;
        for (std::size_t c = 0; c < cloud.points.size(); ++c) {
            const double r = dist(cloud.points[c], cloud.center);
            const int owner = assignment.owner[c];
            if (owner >= 12)
                dense_max = std::max(dense_max, r);
            else if (owner >= 8) {
                medium_min = std::min(medium_min, r);
                medium_max = std::max(medium_max, r);
            } else
                sparse_min = std::min(sparse_min, r);
        }
        CHECK(dense_max <= medium_min + 1e-12);
        CHECK(medium_max <= sparse_min + 1e-12);
    }
}

TEST_CASE("weight proportionality within rounding slack") {
    for (std::uint64_t seed = 2; seed <= 6; ++seed) {
        const int n = 777;
        auto cloud = generate_cloud(n, seed);
        auto counts = rank_cell_counts(concentric_assign(cloud, kConcentricWeights));
        const double total_w = 88.0;
        for (std::size_t r = 0; r < counts.size(); ++r) {
            const double ideal = n * kConcentricWeights.weights[r] / total_w;
            CHECK(std::abs(counts[r] - ideal) <= 3.0); // one per zone boundary
        }
    }
}

TEST_CASE("equal assignment splits angle-sorted cells evenly") {
    auto cloud = generate_cloud(1600, 9);
    auto counts = rank_cell_counts(equal_assign(cloud, 16));
    for (int c : counts) CHECK(c == 100);

    auto small = generate_cloud(88, 9);
    auto small_counts = rank_cell_counts(equal_assign(small, 16));
    const auto [lo, hi] = std::minmax_element(small_counts.begin(), small_counts.end());
    CHECK(*hi - *lo <= 1);

    // partition property
    auto assignment = equal_assign(cloud, 7);
    std::set<int> owners(assignment.owner.begin(), assignment.owner.end());
    CHECK(owners.size() == 7);
    CHECK(assignment.owner.size() == cloud.points.size());
}

TEST_CASE("counts_to_weights handles the degenerate single-rank case") {
    auto cloud = generate_cloud(88, 4);
    auto fractions = counts_to_weights(equal_assign(cloud, 1));
    REQUIRE(fractions.size() == 1);
    CHECK(fractions[0] == doctest::Approx(1.0));
}

TEST_CASE("too-small clouds and bad weights are rejected") {
    auto cloud = generate_cloud(16, 2);
    CHECK_THROWS_AS(concentric_assign(cloud, kConcentricWeights), ConstraintError);
    CHECK_THROWS_AS(equal_assign(cloud, 17), ConstraintError);
    WeightVector bad{{1, 0, 2}};
    CHECK_THROWS_AS(concentric_assign(cloud, bad), InputError);
}
