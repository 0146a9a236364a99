// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vecplan {

// Canonical plan space is [0,1]^2 with y pointing down (image convention).

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct Rect {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const noexcept { return x2 - x1; }
    double height() const noexcept { return y2 - y1; }
    double area() const noexcept { return empty() ? 0.0 : width() * height(); }
    bool empty() const noexcept { return !(x1 < x2 && y1 < y2); }

    friend bool operator==(const Rect&, const Rect&) = default;
};

std::optional<Rect> intersect(const Rect& a, const Rect& b) noexcept;

// A rectilinear region: union of pairwise interior-disjoint axis-aligned rectangles.
using Region = std::vector<Rect>;
// Closed ring of corners; the closing edge from back() to front() is implicit.
using Ring = std::vector<Point>;

double region_area(const Region& region) noexcept;
Point region_centroid(const Region& region) noexcept;
std::optional<Rect> region_bounds(const Region& region) noexcept;

// Coordinate-grid decomposition: the sorted unique x and y coordinates of a
// set of rectangles partition the plane into cells that are either fully
// inside or fully outside every input rectangle.
class CoordinateGrid {
public:
    CoordinateGrid(std::vector<double> xs, std::vector<double> ys);
    static CoordinateGrid from_regions(std::initializer_list<const Region*> regions);
    static CoordinateGrid from_rings(std::span<const Ring> rings);

    std::size_t nx() const noexcept { return xs_.size() < 2 ? 0 : xs_.size() - 1; }
    std::size_t ny() const noexcept { return ys_.size() < 2 ? 0 : ys_.size() - 1; }
    const std::vector<double>& xs() const noexcept { return xs_; }
    const std::vector<double>& ys() const noexcept { return ys_; }

    Rect cell(std::size_t i, std::size_t j) const noexcept { return {xs_[i], ys_[j], xs_[i + 1], ys_[j + 1]}; }

    // Row-major occupancy mask (index j * nx + i) of cells covered by a region.
    std::vector<std::uint8_t> rasterize(const Region& region) const;
    std::vector<std::uint8_t> rasterize_rings(std::span<const Ring> rings) const;

    // Merges occupied cells into rectangles: horizontal runs first, then
    // vertically stacked runs with identical extent.
    Region to_region(std::span<const std::uint8_t> mask) const;

    // Outline of the occupied cells as closed rings. Outer rings are
    // clockwise on screen (positive shoelace area with y down), holes are
    // counter-clockwise.
    std::vector<Ring> trace(std::span<const std::uint8_t> mask) const;

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

Region region_intersection(const Region& a, const Region& b);
Region region_difference(const Region& a, const Region& b);
Region region_union(const Region& a, const Region& b);
Region normalize_region(const Region& region);

std::vector<Ring> region_outline(const Region& region);
// Even-odd fill of a set of rings.
Region region_from_rings(std::span<const Ring> rings);

// Intersection over union with exact areas; two empty regions give 1.
double rectilinear_iou(const Region& a, const Region& b);

// Total length of edge segments shared by the two regions' outlines where
// one region lies on each side.
double shared_edge_length(const Region& a, const Region& b);

double polygon_signed_area(std::span<const Point> ring) noexcept;
double polygon_area(std::span<const Point> ring) noexcept;
double polygon_perimeter(std::span<const Point> ring) noexcept;
bool point_in_polygon(const Point& p, std::span<const Point> ring) noexcept;

enum class RoomCategory : int {
    Living = 1,
    Bedroom = 2,
    Kitchen = 3,
    Bathroom = 4,
    Balcony = 5,
    Storage = 6,
};

inline constexpr int kCategoryCount = 6;
inline constexpr int kMaxRooms = 8;
inline constexpr int kBoundaryCorners = 40;

std::string_view category_name(RoomCategory c) noexcept;
RoomCategory category_from_int(int value);
RoomCategory category_from_name(std::string_view name);

struct Boundary {
    // Canonical: no collinear or duplicate corners, starts at the topmost
    // then leftmost corner, clockwise on screen.
    std::vector<Point> corners;
    // Top-left, top-right, bottom-right, bottom-left.
    std::array<Point, 4> entrance{};

    // Canonicalizes and validates; throws MalformedBoundary.
    static Boundary make(std::vector<Point> corners, std::array<Point, 4> entrance);

    double area() const noexcept { return polygon_area(corners); }
    Region interior() const;

    friend bool operator==(const Boundary&, const Boundary&) = default;
};

// Removes duplicate and collinear corners, reorients clockwise and rotates so
// the topmost-leftmost corner comes first. Does not validate.
std::vector<Point> canonicalize_ring(std::vector<Point> corners);
// Throws MalformedBoundary when the ring is not a simple rectilinear polygon
// with 4..40 corners.
void validate_boundary_ring(std::span<const Point> corners);
std::array<Point, 4> canonicalize_entrance(std::array<Point, 4> entrance);

// Inserts midpoints on the current longest edge (earliest edge on ties)
// until the outline has exactly 40 points.
std::vector<Point> augment_corners(const Boundary& boundary);

struct RoomNode {
    bool is_room = false;
    RoomCategory category = RoomCategory::Living;
    double size = 0.0;
    Point location{};

    friend bool operator==(const RoomNode&, const RoomNode&) = default;
};

struct AdjacencyMatrix {
    std::array<std::array<std::uint8_t, kMaxRooms>, kMaxRooms> entries{};
    int room_count = 0;

    bool connected(int i, int j) const noexcept { return entries[i][j] != 0; }
    void connect(int i, int j);
    int edge_count() const noexcept;
    std::vector<std::pair<int, int>> pairs() const;
    bool valid() const noexcept;

    friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;
};

struct RoomBox {
    Point top_left{};
    Point bottom_right{};
    RoomCategory category = RoomCategory::Living;

    Rect rect() const noexcept { return {top_left.x, top_left.y, bottom_right.x, bottom_right.y}; }

    friend bool operator==(const RoomBox&, const RoomBox&) = default;
};

struct Room {
    RoomCategory category = RoomCategory::Living;
    Region region;

    friend bool operator==(const Room&, const Room&) = default;
};

// Area fractions and centroids are snapped to this dyadic step so that the
// tensor codecs round-trip exactly.
inline constexpr double kNodeQuantum = 1.0 / (1 << 20);
double quantize_node_value(double v) noexcept;

struct VectorFloorPlan {
    Boundary boundary;
    // Canonical room order: ascending category (living first), ties by (y, x)
    // of the room location.
    std::vector<Room> rooms;
    AdjacencyMatrix adjacency;

    std::vector<RoomNode> nodes() const;
    std::vector<RoomBox> boxes() const;

    friend bool operator==(const VectorFloorPlan&, const VectorFloorPlan&) = default;
};

RoomNode node_of(const Room& room, double boundary_area);
bool canonical_less(const RoomNode& a, const RoomNode& b) noexcept;
// Permutation that sorts nodes into canonical order (stable).
std::vector<int> canonical_permutation(std::span<const RoomNode> nodes);
// Sorts rooms into canonical order and permutes the adjacency accordingly.
void canonicalize_plan(VectorFloorPlan& plan);

struct PartitionReport {
    double area_error = 0.0;  // |sum(room areas) - boundary area| / boundary area
    double overlap_area = 0.0;
    double outside_area = 0.0;
    bool valid(double tolerance = 0.01) const noexcept;
};

PartitionReport check_partition(const VectorFloorPlan& plan);

} // namespace vecplan
