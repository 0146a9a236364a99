// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vecplan/geometry.hpp"

namespace vecplan {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class StageKind {
    Boundary,
    Entrance,
    Nodes,
    Adjacency,
    Boxes,
};

std::string_view stage_kind_name(StageKind kind) noexcept;
StageKind stage_kind_from_name(std::string_view name);

inline constexpr int stage_rows(StageKind) noexcept { return kMaxRooms; }
int stage_cols(StageKind kind) noexcept;

struct StageTensor {
    StageKind kind = StageKind::Nodes;
    Matrix values;

    StageTensor() = default;
    StageTensor(StageKind k, Matrix v);
    static StageTensor filled(StageKind k, double value);

    int rows() const noexcept { return static_cast<int>(values.rows()); }
    int cols() const noexcept { return static_cast<int>(values.cols()); }
    // Throws ShapeMismatch unless the shape matches the kind.
    void check_shape() const;

    friend bool operator==(const StageTensor& a, const StageTensor& b) {
        return a.kind == b.kind && a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
               a.values == b.values;
    }
};

// [0,1] <-> [-1,1]
inline double to_signed(double v) noexcept { return 2.0 * v - 1.0; }
inline double to_unit(double v) noexcept { return (v + 1.0) * 0.5; }
inline double encode_category(RoomCategory c) noexcept {
    return (static_cast<int>(c) - 1) / 5.0 * 2.0 - 1.0;
}
// Nearest of the six category grid values.
RoomCategory decode_category(double v) noexcept;

std::pair<StageTensor, StageTensor> encode_boundary(const Boundary& boundary);
Boundary decode_boundary(const StageTensor& boundary, const StageTensor& entrance);

// Nodes are written in canonical order; columns [is_room, category, size, x, y].
StageTensor encode_nodes(std::span<const RoomNode> nodes);
// Rooms of rows whose is_room flag is positive, in row order.
std::vector<RoomNode> decode_nodes(const StageTensor& t);
// Row of each decoded room in decode_nodes order.
std::vector<int> decoded_node_rows(const StageTensor& t);

StageTensor encode_adjacency(const AdjacencyMatrix& adjacency);
// OR-symmetrized, zero diagonal, rows/columns at or beyond room_count cleared.
AdjacencyMatrix decode_adjacency(const StageTensor& t, int room_count);

// Box rows follow the node rows they belong to.
StageTensor encode_boxes(std::span<const RoomBox> boxes);
// Row i pairs with nodes[i]; rows past nodes.size() are dropped. Coordinates
// are clamped to [0,1] and swapped when inverted.
std::vector<RoomBox> decode_boxes(const StageTensor& t, std::span<const RoomNode> nodes);

} // namespace vecplan
