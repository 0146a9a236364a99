// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vecplan/errors.hpp"

namespace vecplan {

std::string_view stage_kind_name(StageKind kind) noexcept {
    switch (kind) {
    case StageKind::Boundary: return "boundary";
    case StageKind::Entrance: return "entrance";
    case StageKind::Nodes: return "nodes";
    case StageKind::Adjacency: return "adjacency";
    case StageKind::Boxes: return "partition";
    }
    return "unknown";
}

StageKind stage_kind_from_name(std::string_view name) {
    if (name == "nodes") return StageKind::Nodes;
    if (name == "adjacency") return StageKind::Adjacency;
    if (name == "partition" || name == "boxes") return StageKind::Boxes;
    if (name == "boundary") return StageKind::Boundary;
    if (name == "entrance") return StageKind::Entrance;
    throw Error(ErrorCode::InvalidArgument, "unknown stage kind '" + std::string(name) + "'");
}

int stage_cols(StageKind kind) noexcept {
    switch (kind) {
    case StageKind::Boundary: return 2 * kBoundaryCorners;
    case StageKind::Entrance: return 8;
    case StageKind::Nodes: return 5;
    case StageKind::Adjacency: return kMaxRooms;
    case StageKind::Boxes: return 4;
    }
    return 0;
}

StageTensor::StageTensor(StageKind k, Matrix v) : kind(k), values(std::move(v)) { }

StageTensor StageTensor::filled(StageKind k, double value) {
    return StageTensor(k, Matrix::Constant(stage_rows(k), stage_cols(k), value));
}

void StageTensor::check_shape() const {
    if (values.rows() != stage_rows(kind) || values.cols() != stage_cols(kind)) {
        throw Error(ErrorCode::ShapeMismatch, std::string(stage_kind_name(kind)) + " tensor must be 8x" +
                                                  std::to_string(stage_cols(kind)) + ", got " +
                                                  std::to_string(values.rows()) + "x" + std::to_string(values.cols()));
    }
}

RoomCategory decode_category(double v) noexcept {
    int best = 1;
    double best_d = std::abs(v - encode_category(RoomCategory::Living));
    for (int c = 2; c <= kCategoryCount; ++c) {
        const double d = std::abs(v - encode_category(static_cast<RoomCategory>(c)));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return static_cast<RoomCategory>(best);
}

std::pair<StageTensor, StageTensor> encode_boundary(const Boundary& boundary) {
    const auto pts = augment_corners(boundary);
    Matrix b(kMaxRooms, 2 * kBoundaryCorners);
    Matrix e(kMaxRooms, 8);
    for (int r = 0; r < kMaxRooms; ++r) {
        for (int k = 0; k < kBoundaryCorners; ++k) {
            b(r, 2 * k) = to_signed(pts[k].x);
            b(r, 2 * k + 1) = to_signed(pts[k].y);
        }
        for (int k = 0; k < 4; ++k) {
            e(r, 2 * k) = to_signed(boundary.entrance[k].x);
            e(r, 2 * k + 1) = to_signed(boundary.entrance[k].y);
        }
    }
    return {StageTensor(StageKind::Boundary, std::move(b)), StageTensor(StageKind::Entrance, std::move(e))};
}

Boundary decode_boundary(const StageTensor& boundary, const StageTensor& entrance) {
    if (boundary.kind != StageKind::Boundary || entrance.kind != StageKind::Entrance) {
        throw Error(ErrorCode::ShapeMismatch, "decode_boundary expects boundary and entrance tensors");
    }
    boundary.check_shape();
    entrance.check_shape();
    std::vector<Point> pts;
    pts.reserve(kBoundaryCorners);
    for (int k = 0; k < kBoundaryCorners; ++k) {
        pts.push_back({to_unit(boundary.values(0, 2 * k)), to_unit(boundary.values(0, 2 * k + 1))});
    }
    std::array<Point, 4> ent{};
    for (int k = 0; k < 4; ++k) {
        ent[k] = {to_unit(entrance.values(0, 2 * k)), to_unit(entrance.values(0, 2 * k + 1))};
    }
    return Boundary::make(std::move(pts), ent);
}

StageTensor encode_nodes(std::span<const RoomNode> nodes) {
    std::vector<RoomNode> rooms;
    for (const auto& n : nodes) {
        if (n.is_room) {
            rooms.push_back(n);
        }
    }
    if (rooms.size() > static_cast<std::size_t>(kMaxRooms)) {
        throw Error(ErrorCode::TooManyRooms, std::to_string(rooms.size()) + " rooms exceed the limit of 8");
    }
    for (const auto& n : rooms) {
        const int c = static_cast<int>(n.category);
        if (c < 1 || c > kCategoryCount) {
            throw Error(ErrorCode::InvalidCategory, "category " + std::to_string(c) + " outside 1..6");
        }
    }
    std::stable_sort(rooms.begin(), rooms.end(), canonical_less);
    StageTensor t = StageTensor::filled(StageKind::Nodes, -1.0);
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        const auto& n = rooms[i];
        const auto r = static_cast<Eigen::Index>(i);
        t.values(r, 0) = 1.0;
        t.values(r, 1) = encode_category(n.category);
        t.values(r, 2) = to_signed(n.size);
        t.values(r, 3) = to_signed(n.location.x);
        t.values(r, 4) = to_signed(n.location.y);
    }
    return t;
}

std::vector<int> decoded_node_rows(const StageTensor& t) {
    t.check_shape();
    std::vector<int> rows;
    for (int r = 0; r < t.rows(); ++r) {
        if (t.values(r, 0) > 0.0) {
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<RoomNode> decode_nodes(const StageTensor& t) {
    if (t.kind != StageKind::Nodes) {
        throw Error(ErrorCode::ShapeMismatch, "decode_nodes expects a nodes tensor");
    }
    std::vector<RoomNode> out;
    for (int r : decoded_node_rows(t)) {
        RoomNode n;
        n.is_room = true;
        n.category = decode_category(t.values(r, 1));
        n.size = std::clamp(to_unit(t.values(r, 2)), 0.0, 1.0);
        n.location = {std::clamp(to_unit(t.values(r, 3)), 0.0, 1.0), std::clamp(to_unit(t.values(r, 4)), 0.0, 1.0)};
        out.push_back(n);
    }
    return out;
}

StageTensor encode_adjacency(const AdjacencyMatrix& adjacency) {
    if (adjacency.room_count > kMaxRooms) {
        throw Error(ErrorCode::TooManyRooms, "adjacency room_count exceeds 8");
    }
    StageTensor t = StageTensor::filled(StageKind::Adjacency, -1.0);
    for (int i = 0; i < kMaxRooms; ++i) {
        for (int j = 0; j < kMaxRooms; ++j) {
            if (adjacency.entries[i][j]) {
                t.values(i, j) = 1.0;
            }
        }
    }
    return t;
}

AdjacencyMatrix decode_adjacency(const StageTensor& t, int room_count) {
    if (t.kind != StageKind::Adjacency) {
        throw Error(ErrorCode::ShapeMismatch, "decode_adjacency expects an adjacency tensor");
    }
    t.check_shape();
    AdjacencyMatrix adj;
    adj.room_count = std::clamp(room_count, 0, kMaxRooms);
    for (int i = 0; i < adj.room_count; ++i) {
        for (int j = 0; j < adj.room_count; ++j) {
            if (i != j && (t.values(i, j) > 0.0 || t.values(j, i) > 0.0)) {
                adj.entries[i][j] = 1;
            }
        }
    }
    return adj;
}

StageTensor encode_boxes(std::span<const RoomBox> boxes) {
    if (boxes.size() > static_cast<std::size_t>(kMaxRooms)) {
        throw Error(ErrorCode::TooManyRooms, std::to_string(boxes.size()) + " boxes exceed the limit of 8");
    }
    StageTensor t = StageTensor::filled(StageKind::Boxes, -1.0);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        t.values(r, 0) = to_signed(boxes[i].top_left.x);
        t.values(r, 1) = to_signed(boxes[i].top_left.y);
        t.values(r, 2) = to_signed(boxes[i].bottom_right.x);
        t.values(r, 3) = to_signed(boxes[i].bottom_right.y);
    }
    return t;
}

std::vector<RoomBox> decode_boxes(const StageTensor& t, std::span<const RoomNode> nodes) {
    if (t.kind != StageKind::Boxes) {
        throw Error(ErrorCode::ShapeMismatch, "decode_boxes expects a boxes tensor");
    }
    t.check_shape();
    std::vector<RoomBox> out;
    const std::size_t n = std::min<std::size_t>(nodes.size(), kMaxRooms);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double x1 = std::clamp(to_unit(t.values(r, 0)), 0.0, 1.0);
        double y1 = std::clamp(to_unit(t.values(r, 1)), 0.0, 1.0);
        double x2 = std::clamp(to_unit(t.values(r, 2)), 0.0, 1.0);
        double y2 = std::clamp(to_unit(t.values(r, 3)), 0.0, 1.0);
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        out.push_back({{x1, y1}, {x2, y2}, nodes[i].category});
    }
    return out;
}

} // namespace vecplan
