// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "vecplan/errors.hpp"
#include "vecplan/geometry.hpp"
#include "vecplan/random.hpp"
#include "vecplan/synthetic.hpp"

using namespace vecplan;
using vecplan::testing::rectangle;
using vecplan::testing::unit_square;

namespace {

bool on_outline(const Point& p, const std::vector<Point>& ring) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % ring.size()];
        const bool on_h = a.y == b.y && p.y == a.y && p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x);
        const bool on_v = a.x == b.x && p.x == a.x && p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
        if (on_h || on_v) return true;
    }
    return false;
}

// Area of {inside} within the unit square by sampling cell centres.
double raster_area(int n, const std::function<bool(double, double)>& inside) {
    int hits = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (inside((i + 0.5) / n, (j + 0.5) / n)) ++hits;
        }
    }
    return static_cast<double>(hits) / (static_cast<double>(n) * n);
}

bool contains(const Region& r, double x, double y) {
    for (const auto& q : r) {
        if (x >= q.x1 && x < q.x2 && y >= q.y1 && y < q.y2) return true;
    }
    return false;
}

Region random_region(Rng& rng) {
    Region r;
    const int k = static_cast<int>(rng.uniform_int(1, 4));
    for (int i = 0; i < k; ++i) {
        double x1 = rng.uniform(), x2 = rng.uniform(), y1 = rng.uniform(), y2 = rng.uniform();
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        r = region_union(r, Region{{x1, y1, x2, y2}});
    }
    return r;
}

// Straightforward re-statement of the insertion rule, one point at a time.
std::vector<Point> augment_oracle(std::vector<Point> pts, std::size_t target, std::vector<Point>* inserted) {
    while (pts.size() < target) {
        std::size_t best = 0;
        double best_len = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Point& a = pts[i];
            const Point& b = pts[(i + 1) % pts.size()];
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            if (len > best_len) {
                best_len = len;
                best = i;
            }
        }
        const Point& a = pts[best];
        const Point& b = pts[(best + 1) % pts.size()];
        const Point mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
        if (inserted) inserted->push_back(mid);
        pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(best) + 1, mid);
    }
    return pts;
}

} // namespace

TEST_CASE("augment_corners on the unit square keeps the outline") {
    const auto pts = augment_corners(unit_square());
    CHECK(pts.size() == 40);
    for (const auto& p : pts) CHECK(on_outline(p, unit_square().corners));
    CHECK(polygon_area(pts) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(polygon_perimeter(pts) == doctest::Approx(4.0).epsilon(1e-12));
}


TEST_CASE("augment_corners splits the earliest longest edge first") {
    const Boundary b = rectangle(1.0, 0.5);
    std::vector<Point> inserted;
    const auto expected = augment_oracle(b.corners, 40, &inserted);
    // Hand trace: top edge, then bottom edge, then the first half of the top edge.
    REQUIRE(inserted.size() >= 3);
    CHECK(inserted[0] == Point{0.5, 0});
    CHECK(inserted[1] == Point{0.5, 0.5});
    CHECK(inserted[2] == Point{0.25, 0});
    CHECK(augment_corners(b) == expected);
}

TEST_CASE("augment_corners matches the insertion oracle on generated outlines") {
    GeneratorParams gp;
    gp.seed = 21;
    for (const auto& plan : generate_dataset(gp, 30)) {
        CHECK(augment_corners(plan.boundary) == augment_oracle(plan.boundary.corners, 40, nullptr));
    }
}

TEST_CASE("augment_corners returns a 40-corner outline unchanged") {
    // Staircase with 40 corners.
    std::vector<Point> ring;
    const int steps = 19;
    const double s = 1.0 / 32;
    ring.push_back({0, 0});
    for (int i = 0; i < steps; ++i) {
        ring.push_back({(i + 1) * s, i * s});
        ring.push_back({(i + 1) * s, (i + 1) * s});
    }
    ring.push_back({0, steps * s});
    REQUIRE(ring.size() == 40);
    const Boundary b = Boundary::make(ring, {{{0, 0.25}, {0, 0.375}, {0.0625, 0.375}, {0.0625, 0.25}}});
    CHECK(augment_corners(b) == b.corners);
}

TEST_CASE("boundary validation rejects malformed outlines") {
    const std::array<Point, 4> e{{{0.25, 0}, {0.375, 0}, {0.375, 0.0625}, {0.25, 0.0625}}};
    CHECK_THROWS_AS(Boundary::make({{0, 0}, {1, 0}, {1, 1}}, e), Error);
    // Diagonal edge.
    CHECK_THROWS_AS(Boundary::make({{0, 0}, {1, 0}, {0.5, 1}, {0, 1}}, e), Error);
    // Self-intersecting bow tie made of axis-aligned edges.
    CHECK_THROWS_AS(Boundary::make({{0, 0}, {0.5, 0}, {0.5, 1}, {1, 1}, {1, 0.5}, {0, 0.5}}, e), Error);
    // Entrance off every edge.
    CHECK_THROWS_AS(Boundary::make({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0.4, 0.4}, {0.5, 0.4}, {0.5, 0.45}, {0.4, 0.45}}}),
                    Error);
}

TEST_CASE("rectilinear_iou examples") {
    const Region a{{0, 0, 1, 1}};
    const Region b{{0.5, 0, 1.5, 1}};
    CHECK(rectilinear_iou(a, a) == 1.0);
    CHECK(rectilinear_iou(a, Region{{2, 2, 3, 3}}) == 0.0);
    CHECK(rectilinear_iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(rectilinear_iou(Region{}, Region{}) == 1.0);
    CHECK(rectilinear_iou(a, Region{}) == 0.0);
}

TEST_CASE("rectilinear_iou is symmetric and agrees with a raster oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const Region a = random_region(rng);
        const Region b = random_region(rng);
        const double iou = rectilinear_iou(a, b);
        CHECK(iou == doctest::Approx(rectilinear_iou(b, a)).epsilon(1e-12));
        CHECK(iou >= 0.0);
        CHECK(iou <= 1.0);
        const int n = 512;
        const double inter = raster_area(n, [&](double x, double y) { return contains(a, x, y) && contains(b, x, y); });
        const double uni = raster_area(n, [&](double x, double y) { return contains(a, x, y) || contains(b, x, y); });
        if (uni > 0.01) CHECK(std::abs(inter / uni - iou) < 1e-2);
    }
}

TEST_CASE("region boolean operations preserve area") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Region a = random_region(rng);
        const Region b = random_region(rng);
        const double ia = region_area(region_intersection(a, b));
        const double ua = region_area(region_union(a, b));
        CHECK(ua + ia == doctest::Approx(region_area(a) + region_area(b)).epsilon(1e-9));
        CHECK(region_area(region_difference(a, b)) == doctest::Approx(region_area(a) - ia).epsilon(1e-9));
    }
}

TEST_CASE("shared edge length of abutting rectangles") {
    CHECK(shared_edge_length(Region{{0, 0, 0.5, 1}}, Region{{0.5, 0.25, 1, 0.75}}) == doctest::Approx(0.5));
    CHECK(shared_edge_length(Region{{0, 0, 0.5, 1}}, Region{{0.6, 0, 1, 1}}) == 0.0);
}

TEST_CASE("adjacency matrix invariants") {
    AdjacencyMatrix a;
    a.room_count = 3;
    a.connect(0, 2);
    CHECK(a.connected(2, 0));
    CHECK(a.valid());
    CHECK(a.pairs() == std::vector<std::pair<int, int>>{{0, 2}});
    CHECK_THROWS_AS(a.connect(1, 1), Error);
    CHECK_THROWS_AS(a.connect(0, 5), Error);
}

TEST_CASE("canonical order sorts by category then location") {
    VectorFloorPlan p;
    p.boundary = unit_square();
    p.rooms = {{RoomCategory::Bedroom, {{0.5, 0.5, 1, 1}}},
               {RoomCategory::Bedroom, {{0.5, 0, 1, 0.5}}},
               {RoomCategory::Living, {{0, 0, 0.5, 1}}}};
    p.adjacency.room_count = 3;
    p.adjacency.connect(0, 2);
    canonicalize_plan(p);
    CHECK(p.rooms[0].category == RoomCategory::Living);
    CHECK(p.rooms[1].region.front().y1 == 0.0);
    // The adjacency follows its room: old 0 (lower bedroom) is now index 2.
    CHECK(p.adjacency.connected(0, 2));
    CHECK(!p.adjacency.connected(0, 1));
}

TEST_CASE("partition check flags gaps and overlaps") {
    auto p = vecplan::testing::two_room_plan();
    CHECK(check_partition(p).valid());
    p.rooms[1].region = {{0.6, 0, 1, 1}};
    CHECK(!check_partition(p).valid());
    p.rooms[1].region = {{0.4, 0, 1, 1}};
    CHECK(check_partition(p).overlap_area > 0.0);
}

TEST_CASE("quantized node values are exact under the signed map") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = quantize_node_value(rng.uniform());
        CHECK(((2.0 * v - 1.0) + 1.0) * 0.5 == v);
    }
}
