// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "vecplan/errors.hpp"

namespace vecplan {

namespace {

void sort_unique(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::size_t index_of(const std::vector<double>& coords, double v) {
    return static_cast<std::size_t>(std::lower_bound(coords.begin(), coords.end(), v) - coords.begin());
}

bool collinear(const Point& a, const Point& b, const Point& c) noexcept {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) == 0.0;
}

std::vector<Point> drop_redundant(std::vector<Point> pts) {
    bool changed = true;
    while (changed && pts.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < pts.size() && pts.size() >= 3; ++i) {
            const Point& prev = pts[(i + pts.size() - 1) % pts.size()];
            const Point& next = pts[(i + 1) % pts.size()];
            if (pts[i] == next || collinear(prev, pts[i], next)) {
                pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return pts;
}

void rotate_to_top_left(std::vector<Point>& pts) {
    if (pts.empty()) {
        return;
    }
    auto first = std::min_element(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.y < b.y || (a.y == b.y && a.x < b.x);
    });
    std::rotate(pts.begin(), first, pts.end());
}

// Closed-interval overlap of two axis-aligned segments.
bool segments_touch(const Point& a0, const Point& a1, const Point& b0, const Point& b1) noexcept {
    const double ax0 = std::min(a0.x, a1.x), ax1 = std::max(a0.x, a1.x);
    const double ay0 = std::min(a0.y, a1.y), ay1 = std::max(a0.y, a1.y);
    const double bx0 = std::min(b0.x, b1.x), bx1 = std::max(b0.x, b1.x);
    const double by0 = std::min(b0.y, b1.y), by1 = std::max(b0.y, b1.y);
    return ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1;
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorCode::MalformedBoundary, what);
}

} // namespace

std::optional<Rect> intersect(const Rect& a, const Rect& b) noexcept {
    Rect r{std::max(a.x1, b.x1), std::max(a.y1, b.y1), std::min(a.x2, b.x2), std::min(a.y2, b.y2)};
    if (r.empty()) {
        return std::nullopt;
    }
    return r;
}

double region_area(const Region& region) noexcept {
    double total = 0.0;
    for (const auto& r : region) {
        total += r.area();
    }
    return total;
}

Point region_centroid(const Region& region) noexcept {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (const auto& r : region) {
        const double ra = r.area();
        a += ra;
        cx += ra * 0.5 * (r.x1 + r.x2);
        cy += ra * 0.5 * (r.y1 + r.y2);
    }
    if (a <= 0.0) {
        return {};
    }
    return {cx / a, cy / a};
}

std::optional<Rect> region_bounds(const Region& region) noexcept {
    std::optional<Rect> out;
    for (const auto& r : region) {
        if (r.empty()) {
            continue;
        }
        if (!out) {
            out = r;
        } else {
            out->x1 = std::min(out->x1, r.x1);
            out->y1 = std::min(out->y1, r.y1);
            out->x2 = std::max(out->x2, r.x2);
            out->y2 = std::max(out->y2, r.y2);
        }
    }
    return out;
}

CoordinateGrid::CoordinateGrid(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
    sort_unique(xs_);
    sort_unique(ys_);
}

CoordinateGrid CoordinateGrid::from_regions(std::initializer_list<const Region*> regions) {
    std::vector<double> xs, ys;
    for (const Region* region : regions) {
        for (const auto& r : *region) {
            if (r.empty()) {
                continue;
            }
            xs.insert(xs.end(), {r.x1, r.x2});
            ys.insert(ys.end(), {r.y1, r.y2});
        }
    }
    return CoordinateGrid(std::move(xs), std::move(ys));
}

CoordinateGrid CoordinateGrid::from_rings(std::span<const Ring> rings) {
    std::vector<double> xs, ys;
    for (const auto& ring : rings) {
        for (const auto& p : ring) {
            xs.push_back(p.x);
            ys.push_back(p.y);
        }
    }
    return CoordinateGrid(std::move(xs), std::move(ys));
}

std::vector<std::uint8_t> CoordinateGrid::rasterize(const Region& region) const {
    std::vector<std::uint8_t> mask(nx() * ny(), 0);
    for (const auto& r : region) {
        if (r.empty()) {
            continue;
        }
        const std::size_t i0 = index_of(xs_, r.x1), i1 = index_of(xs_, r.x2);
        const std::size_t j0 = index_of(ys_, r.y1), j1 = index_of(ys_, r.y2);
        for (std::size_t j = j0; j < j1 && j < ny(); ++j) {
            for (std::size_t i = i0; i < i1 && i < nx(); ++i) {
                mask[j * nx() + i] = 1;
            }
        }
    }
    return mask;
}

std::vector<std::uint8_t> CoordinateGrid::rasterize_rings(std::span<const Ring> rings) const {
    std::vector<std::uint8_t> mask(nx() * ny(), 0);
    for (std::size_t j = 0; j < ny(); ++j) {
        const double cy = 0.5 * (ys_[j] + ys_[j + 1]);
        for (std::size_t i = 0; i < nx(); ++i) {
            const Point c{0.5 * (xs_[i] + xs_[i + 1]), cy};
            bool inside = false;
            for (const auto& ring : rings) {
                inside ^= point_in_polygon(c, ring);
            }
            mask[j * nx() + i] = inside ? 1 : 0;
        }
    }
    return mask;
}

Region CoordinateGrid::to_region(std::span<const std::uint8_t> mask) const {
    struct Run {
        std::size_t i0, i1;
        Rect rect;
    };
    Region out;
    std::vector<Run> open;
    for (std::size_t j = 0; j < ny(); ++j) {
        std::vector<std::pair<std::size_t, std::size_t>> runs;
        for (std::size_t i = 0; i < nx();) {
            if (!mask[j * nx() + i]) {
                ++i;
                continue;
            }
            std::size_t k = i;
            while (k < nx() && mask[j * nx() + k]) {
                ++k;
            }
            runs.emplace_back(i, k);
            i = k;
        }
        std::vector<Run> next;
        for (const auto& [i0, i1] : runs) {
            auto it = std::find_if(open.begin(), open.end(), [&](const Run& r) { return r.i0 == i0 && r.i1 == i1; });
            if (it != open.end()) {
                Run run = *it;
                run.rect.y2 = ys_[j + 1];
                open.erase(it);
                next.push_back(run);
            } else {
                next.push_back({i0, i1, Rect{xs_[i0], ys_[j], xs_[i1], ys_[j + 1]}});
            }
        }
        for (const auto& run : open) {
            out.push_back(run.rect);
        }
        open = std::move(next);
    }
    for (const auto& run : open) {
        out.push_back(run.rect);
    }
    std::sort(out.begin(), out.end(), [](const Rect& a, const Rect& b) {
        return a.y1 < b.y1 || (a.y1 == b.y1 && a.x1 < b.x1);
    });
    return out;
}

std::vector<Ring> CoordinateGrid::trace(std::span<const std::uint8_t> mask) const {
    const std::size_t w = nx(), h = ny();
    auto in = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> bool {
        if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(w) || j >= static_cast<std::ptrdiff_t>(h)) {
            return false;
        }
        return mask[static_cast<std::size_t>(j) * w + static_cast<std::size_t>(i)] != 0;
    };
    struct Edge {
        std::size_t from, to;
        int dx, dy;
        bool used = false;
    };
    const std::size_t stride = w + 1;
    auto vid = [&](std::size_t i, std::size_t j) { return j * stride + i; };
    std::vector<Edge> edges;
    // Interior stays on the right-hand side of travel (y down).
    for (std::size_t j = 0; j <= h; ++j) {
        for (std::size_t i = 0; i < w; ++i) {
            const bool above = in(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j) - 1);
            const bool below = in(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
            if (below && !above) {
                edges.push_back({vid(i, j), vid(i + 1, j), 1, 0});
            } else if (above && !below) {
                edges.push_back({vid(i + 1, j), vid(i, j), -1, 0});
            }
        }
    }
    for (std::size_t i = 0; i <= w; ++i) {
        for (std::size_t j = 0; j < h; ++j) {
            const bool left = in(static_cast<std::ptrdiff_t>(i) - 1, static_cast<std::ptrdiff_t>(j));
            const bool right = in(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
            if (right && !left) {
                edges.push_back({vid(i, j + 1), vid(i, j), 0, -1});
            } else if (left && !right) {
                edges.push_back({vid(i, j), vid(i, j + 1), 0, 1});
            }
        }
    }
    std::unordered_map<std::size_t, std::vector<std::size_t>> outgoing;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        outgoing[edges[e].from].push_back(e);
    }
    auto point_of = [&](std::size_t v) { return Point{xs_[v % stride], ys_[v / stride]}; };

    std::vector<Ring> rings;
    for (std::size_t start = 0; start < edges.size(); ++start) {
        if (edges[start].used) {
            continue;
        }
        Ring ring;
        std::size_t e = start;
        while (!edges[e].used) {
            edges[e].used = true;
            ring.push_back(point_of(edges[e].from));
            const auto& candidates = outgoing[edges[e].to];
            // Prefer right turn, then straight, then left.
            const int rx = -edges[e].dy, ry = edges[e].dx;
            std::size_t best = edges.size();
            int best_rank = 4;
            for (std::size_t c : candidates) {
                if (edges[c].used && c != start) {
                    continue;
                }
                int rank = 3;
                if (edges[c].dx == rx && edges[c].dy == ry) {
                    rank = 0;
                } else if (edges[c].dx == edges[e].dx && edges[c].dy == edges[e].dy) {
                    rank = 1;
                } else if (edges[c].dx == -rx && edges[c].dy == -ry) {
                    rank = 2;
                }
                if (rank < best_rank) {
                    best_rank = rank;
                    best = c;
                }
            }
            if (best == edges.size()) {
                break;
            }
            e = best;
        }
        ring = drop_redundant(std::move(ring));
        if (ring.size() >= 4) {
            rotate_to_top_left(ring);
            rings.push_back(std::move(ring));
        }
    }
    return rings;
}

Region region_intersection(const Region& a, const Region& b) {
    const auto grid = CoordinateGrid::from_regions({&a, &b});
    auto ma = grid.rasterize(a);
    const auto mb = grid.rasterize(b);
    for (std::size_t k = 0; k < ma.size(); ++k) {
        ma[k] = ma[k] && mb[k];
    }
    return grid.to_region(ma);
}

Region region_difference(const Region& a, const Region& b) {
    const auto grid = CoordinateGrid::from_regions({&a, &b});
    auto ma = grid.rasterize(a);
    const auto mb = grid.rasterize(b);
    for (std::size_t k = 0; k < ma.size(); ++k) {
        ma[k] = ma[k] && !mb[k];
    }
    return grid.to_region(ma);
}

Region region_union(const Region& a, const Region& b) {
    const auto grid = CoordinateGrid::from_regions({&a, &b});
    auto ma = grid.rasterize(a);
    const auto mb = grid.rasterize(b);
    for (std::size_t k = 0; k < ma.size(); ++k) {
        ma[k] = ma[k] || mb[k];
    }
    return grid.to_region(ma);
}

Region normalize_region(const Region& region) {
    const auto grid = CoordinateGrid::from_regions({&region});
    return grid.to_region(grid.rasterize(region));
}

std::vector<Ring> region_outline(const Region& region) {
    const auto grid = CoordinateGrid::from_regions({&region});
    return grid.trace(grid.rasterize(region));
}

Region region_from_rings(std::span<const Ring> rings) {
    const auto grid = CoordinateGrid::from_rings(rings);
    return grid.to_region(grid.rasterize_rings(rings));
}

double rectilinear_iou(const Region& a, const Region& b) {
    const auto grid = CoordinateGrid::from_regions({&a, &b});
    const auto ma = grid.rasterize(a);
    const auto mb = grid.rasterize(b);
    double inter = 0.0, uni = 0.0;
    for (std::size_t j = 0; j < grid.ny(); ++j) {
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            const std::size_t k = j * grid.nx() + i;
            if (!ma[k] && !mb[k]) {
                continue;
            }
            const double area = grid.cell(i, j).area();
            uni += area;
            if (ma[k] && mb[k]) {
                inter += area;
            }
        }
    }
    if (uni <= 0.0) {
        return 1.0;
    }
    return inter / uni;
}

double shared_edge_length(const Region& a, const Region& b) {
    const auto grid = CoordinateGrid::from_regions({&a, &b});
    const auto ma = grid.rasterize(a);
    const auto mb = grid.rasterize(b);
    const std::size_t w = grid.nx(), h = grid.ny();
    auto only_a = [&](std::size_t k) { return ma[k] && !mb[k]; };
    auto only_b = [&](std::size_t k) { return mb[k] && !ma[k]; };
    double total = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t i = 0; i < w; ++i) {
            const std::size_t k = j * w + i;
            const Rect c = grid.cell(i, j);
            if (i + 1 < w) {
                const std::size_t r = k + 1;
                if ((only_a(k) && only_b(r)) || (only_b(k) && only_a(r))) {
                    total += c.height();
                }
            }
            if (j + 1 < h) {
                const std::size_t d = k + w;
                if ((only_a(k) && only_b(d)) || (only_b(k) && only_a(d))) {
                    total += c.width();
                }
            }
        }
    }
    return total;
}

double polygon_signed_area(std::span<const Point> ring) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % ring.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

double polygon_area(std::span<const Point> ring) noexcept {
    return std::abs(polygon_signed_area(ring));
}

double polygon_perimeter(std::span<const Point> ring) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % ring.size()];
        s += std::hypot(b.x - a.x, b.y - a.y);
    }
    return s;
}

bool point_in_polygon(const Point& p, std::span<const Point> ring) noexcept {
    bool inside = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const Point& a = ring[i];
        const Point& b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) {
                inside = !inside;
            }
        }
    }
    return inside;
}

std::string_view category_name(RoomCategory c) noexcept {
    switch (c) {
    case RoomCategory::Living: return "living";
    case RoomCategory::Bedroom: return "bedroom";
    case RoomCategory::Kitchen: return "kitchen";
    case RoomCategory::Bathroom: return "bathroom";
    case RoomCategory::Balcony: return "balcony";
    case RoomCategory::Storage: return "storage";
    }
    return "unknown";
}

RoomCategory category_from_int(int value) {
    if (value < 1 || value > kCategoryCount) {
        throw Error(ErrorCode::InvalidCategory, "category " + std::to_string(value) + " outside 1..6");
    }
    return static_cast<RoomCategory>(value);
}

RoomCategory category_from_name(std::string_view name) {
    for (int c = 1; c <= kCategoryCount; ++c) {
        if (category_name(static_cast<RoomCategory>(c)) == name) {
            return static_cast<RoomCategory>(c);
        }
    }
    throw Error(ErrorCode::InvalidCategory, "unknown category '" + std::string(name) + "'");
}

std::vector<Point> canonicalize_ring(std::vector<Point> corners) {
    corners = drop_redundant(std::move(corners));
    if (polygon_signed_area(corners) < 0.0) {
        std::reverse(corners.begin(), corners.end());
    }
    rotate_to_top_left(corners);
    return corners;
}

void validate_boundary_ring(std::span<const Point> corners) {
    const std::size_t n = corners.size();
    if (n < 4) {
        malformed("boundary needs at least 4 corners, got " + std::to_string(n));
    }
    if (n > static_cast<std::size_t>(kBoundaryCorners)) {
        malformed("boundary has " + std::to_string(n) + " corners, limit is 40");
    }
    for (const auto& p : corners) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
            malformed("corner outside the unit square");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = corners[i];
        const Point& b = corners[(i + 1) % n];
        const bool horizontal = a.y == b.y && a.x != b.x;
        const bool vertical = a.x == b.x && a.y != b.y;
        if (!horizontal && !vertical) {
            malformed("edge " + std::to_string(i) + " is not axis-aligned");
        }
        const Point& c = corners[(i + 2) % n];
        const bool next_horizontal = b.y == c.y;
        if (horizontal == next_horizontal) {
            malformed("edges " + std::to_string(i) + " and " + std::to_string((i + 1) % n) + " are not perpendicular");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) {
                continue;
            }
            if (segments_touch(corners[i], corners[(i + 1) % n], corners[j], corners[(j + 1) % n])) {
                malformed("boundary self-intersects at edges " + std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
    if (polygon_area(corners) <= 0.0) {
        malformed("boundary has zero area");
    }
}

std::array<Point, 4> canonicalize_entrance(std::array<Point, 4> entrance) {
    double x1 = entrance[0].x, x2 = x1, y1 = entrance[0].y, y2 = y1;
    for (const auto& p : entrance) {
        x1 = std::min(x1, p.x);
        x2 = std::max(x2, p.x);
        y1 = std::min(y1, p.y);
        y2 = std::max(y2, p.y);
    }
    std::array<Point, 4> out{Point{x1, y1}, Point{x2, y1}, Point{x2, y2}, Point{x1, y2}};
    for (const auto& q : out) {
        if (std::find(entrance.begin(), entrance.end(), q) == entrance.end()) {
            malformed("entrance corners do not form an axis-aligned rectangle");
        }
    }
    if (!(x1 < x2 && y1 < y2)) {
        malformed("entrance rectangle is degenerate");
    }
    return out;
}

Boundary Boundary::make(std::vector<Point> corners, std::array<Point, 4> entrance) {
    Boundary b;
    b.corners = canonicalize_ring(std::move(corners));
    validate_boundary_ring(b.corners);
    b.entrance = canonicalize_entrance(entrance);

    const auto& e = b.entrance;
    const bool wide = (e[1].x - e[0].x) >= (e[3].y - e[0].y);
    // Long edges of the entrance rectangle.
    const std::array<std::pair<Point, Point>, 2> long_edges =
        wide ? std::array<std::pair<Point, Point>, 2>{std::pair{e[0], e[1]}, std::pair{e[3], e[2]}}
             : std::array<std::pair<Point, Point>, 2>{std::pair{e[0], e[3]}, std::pair{e[1], e[2]}};
    int matches = 0;
    const std::size_t n = b.corners.size();
    for (const auto& [p, q] : long_edges) {
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = b.corners[i];
            const Point& c = b.corners[(i + 1) % n];
            if (wide && a.y == c.y && a.y == p.y && std::min(a.x, c.x) <= p.x && q.x <= std::max(a.x, c.x)) {
                ++matches;
            } else if (!wide && a.x == c.x && a.x == p.x && std::min(a.y, c.y) <= p.y && q.y <= std::max(a.y, c.y)) {
                ++matches;
            }
        }
    }
    if (matches != 1) {
        malformed("entrance long edge must lie on exactly one boundary edge (found " + std::to_string(matches) + ")");
    }
    return b;
}

Region Boundary::interior() const {
    const std::array<Ring, 1> rings{corners};
    return region_from_rings(rings);
}

std::vector<Point> augment_corners(const Boundary& boundary) {
    validate_boundary_ring(boundary.corners);
    std::vector<Point> pts = boundary.corners;
    pts.reserve(kBoundaryCorners);
    while (pts.size() < static_cast<std::size_t>(kBoundaryCorners)) {
        std::size_t longest = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Point& a = pts[i];
            const Point& b = pts[(i + 1) % pts.size()];
            const double len = std::abs(b.x - a.x) + std::abs(b.y - a.y);
            if (len > best) {
                best = len;
                longest = i;
            }
        }
        const Point& a = pts[longest];
        const Point& b = pts[(longest + 1) % pts.size()];
        const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(longest + 1), mid);
    }
    return pts;
}

void AdjacencyMatrix::connect(int i, int j) {
    if (i < 0 || j < 0 || i >= room_count || j >= room_count || i == j) {
        throw Error(ErrorCode::InvalidArgument, "adjacency pair out of range");
    }
    entries[i][j] = 1;
    entries[j][i] = 1;
}

int AdjacencyMatrix::edge_count() const noexcept {
    int n = 0;
    for (int i = 0; i < kMaxRooms; ++i) {
        for (int j = i + 1; j < kMaxRooms; ++j) {
            n += entries[i][j] ? 1 : 0;
        }
    }
    return n;
}

std::vector<std::pair<int, int>> AdjacencyMatrix::pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < kMaxRooms; ++i) {
        for (int j = i + 1; j < kMaxRooms; ++j) {
            if (entries[i][j]) {
                out.emplace_back(i, j);
            }
        }
    }
    return out;
}

bool AdjacencyMatrix::valid() const noexcept {
    if (room_count < 0 || room_count > kMaxRooms) {
        return false;
    }
    for (int i = 0; i < kMaxRooms; ++i) {
        if (entries[i][i]) {
            return false;
        }
        for (int j = 0; j < kMaxRooms; ++j) {
            if (entries[i][j] != entries[j][i] || entries[i][j] > 1) {
                return false;
            }
            if (entries[i][j] && (i >= room_count || j >= room_count)) {
                return false;
            }
        }
    }
    return true;
}

double quantize_node_value(double v) noexcept {
    return std::round(v / kNodeQuantum) * kNodeQuantum;
}

RoomNode node_of(const Room& room, double boundary_area) {
    RoomNode n;
    n.is_room = true;
    n.category = room.category;
    const double frac = boundary_area > 0.0 ? region_area(room.region) / boundary_area : 0.0;
    n.size = quantize_node_value(std::clamp(frac, 0.0, 1.0));
    const Point c = region_centroid(room.region);
    n.location = {quantize_node_value(c.x), quantize_node_value(c.y)};
    return n;
}

std::vector<RoomNode> VectorFloorPlan::nodes() const {
    const double a = boundary.area();
    std::vector<RoomNode> out;
    out.reserve(rooms.size());
    for (const auto& r : rooms) {
        out.push_back(node_of(r, a));
    }
    return out;
}

std::vector<RoomBox> VectorFloorPlan::boxes() const {
    std::vector<RoomBox> out;
    out.reserve(rooms.size());
    for (const auto& r : rooms) {
        const auto b = region_bounds(r.region).value_or(Rect{});
        out.push_back({{b.x1, b.y1}, {b.x2, b.y2}, r.category});
    }
    return out;
}

bool canonical_less(const RoomNode& a, const RoomNode& b) noexcept {
    if (a.category != b.category) {
        return static_cast<int>(a.category) < static_cast<int>(b.category);
    }
    if (a.location.y != b.location.y) {
        return a.location.y < b.location.y;
    }
    return a.location.x < b.location.x;
}

std::vector<int> canonical_permutation(std::span<const RoomNode> nodes) {
    std::vector<int> perm(nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return canonical_less(nodes[a], nodes[b]); });
    return perm;
}

void canonicalize_plan(VectorFloorPlan& plan) {
    const auto nodes = plan.nodes();
    const auto perm = canonical_permutation(nodes);
    std::vector<Room> rooms;
    rooms.reserve(plan.rooms.size());
    for (int p : perm) {
        rooms.push_back(std::move(plan.rooms[p]));
    }
    AdjacencyMatrix adj;
    adj.room_count = plan.adjacency.room_count;
    for (std::size_t a = 0; a < perm.size(); ++a) {
        for (std::size_t b = 0; b < perm.size(); ++b) {
            adj.entries[a][b] = plan.adjacency.entries[perm[a]][perm[b]];
        }
    }
    plan.rooms = std::move(rooms);
    plan.adjacency = adj;
}

bool PartitionReport::valid(double tolerance) const noexcept {
    return area_error <= tolerance && overlap_area <= 1e-9;
}

PartitionReport check_partition(const VectorFloorPlan& plan) {
    const Region interior = plan.boundary.interior();
    std::vector<double> xs, ys;
    auto add = [&](const Region& r) {
        for (const auto& rect : r) {
            xs.insert(xs.end(), {rect.x1, rect.x2});
            ys.insert(ys.end(), {rect.y1, rect.y2});
        }
    };
    add(interior);
    for (const auto& room : plan.rooms) {
        add(room.region);
    }
    const CoordinateGrid grid(std::move(xs), std::move(ys));
    const auto inside = grid.rasterize(interior);
    std::vector<int> count(inside.size(), 0);
    for (const auto& room : plan.rooms) {
        const auto m = grid.rasterize(room.region);
        for (std::size_t k = 0; k < m.size(); ++k) {
            count[k] += m[k];
        }
    }
    PartitionReport rep;
    double mismatch = 0.0;
    for (std::size_t j = 0; j < grid.ny(); ++j) {
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            const std::size_t k = j * grid.nx() + i;
            const double a = grid.cell(i, j).area();
            if (count[k] > 1) {
                rep.overlap_area += a * (count[k] - 1);
            }
            if (count[k] > 0 && !inside[k]) {
                rep.outside_area += a;
                mismatch += a;
            }
            if (count[k] == 0 && inside[k]) {
                mismatch += a;
            }
        }
    }
    const double total = plan.boundary.area();
    double sum = 0.0;
    for (const auto& room : plan.rooms) {
        sum += region_area(room.region);
    }
    rep.area_error = total > 0.0 ? std::max(std::abs(sum - total), mismatch) / total : 1.0;
    return rep;
}

} // namespace vecplan
