// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vecplan/codec.hpp"
#include "vecplan/geometry.hpp"

namespace vecplan {

// Which condition blocks a network was trained with. Written as a '+'-joined
// list of B, Rn, Rc, Rsl, Ra, P; "nodes" expands to Rn+Rc+Rsl and "adj" to Ra.
struct ConditionSet {
    bool boundary = false;
    bool room_count = false;
    bool categories = false;
    bool sizes_locations = false;
    bool adjacency = false;
    bool partial = false;

    static ConditionSet parse(std::string_view text);
    std::string to_string() const;

    bool empty() const noexcept {
        return !boundary && !room_count && !categories && !sizes_locations && !adjacency && !partial;
    }
    bool has_row_blocks() const noexcept { return categories || sizes_locations || adjacency || partial; }
    // True when every block set in other is also set here.
    bool contains(const ConditionSet& other) const noexcept;

    friend bool operator==(const ConditionSet&, const ConditionSet&) = default;
};

struct SizeLocation {
    double size = 0.0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const SizeLocation&, const SizeLocation&) = default;
};

struct PartialInput {
    StageTensor values;
    // One flag per slot of slot_map(values.kind).
    std::vector<std::uint8_t> known;
};

struct Conditioning {
    std::optional<Boundary> boundary;
    std::optional<int> room_count;
    // Canonical room order.
    std::optional<std::vector<RoomCategory>> categories;
    std::optional<std::vector<SizeLocation>> sizes_locations;
    std::optional<AdjacencyMatrix> adjacency;
    std::optional<PartialInput> partial;

    ConditionSet blocks() const noexcept;

    // Blocks of a ground-truth plan, as used for teacher forcing. The partial
    // block is never filled here.
    static Conditioning from_plan(const VectorFloorPlan& plan, const ConditionSet& blocks);
};

// Throws ConditioningMismatch when c carries a block outside config, when
// block sizes disagree with each other, or when the partial block does not
// target stage.
void check_conditioning(const Conditioning& c, const ConditionSet& config, StageKind stage);

// Fixed-size numeric view of a Conditioning, computed once per request.
struct ConditionFeatures {
    static constexpr int kBoundaryTokens = 4;
    static constexpr int kBoundaryWidth = 2 * kBoundaryCorners / kBoundaryTokens;
    static constexpr int kCategoryWidth = kCategoryCount + 1;
    static constexpr int kSizeLocationWidth = 4;

    bool has_boundary = false;
    bool has_room_count = false;
    bool has_categories = false;
    bool has_sizes_locations = false;
    bool has_adjacency = false;
    bool has_partial = false;

    Matrix boundary;         // 4 x 20 corner coordinates
    Matrix entrance;         // 1 x 8
    Matrix room_count;       // 1 x 8 one-hot
    Matrix categories;       // 8 x 7 one-hot, last column marks an empty row
    Matrix sizes_locations;  // 8 x 4 (size, x, y, present)
    Matrix adjacency;        // 8 x 8 in {-1, 1}
    Matrix partial;          // 8 x 2w (known values, known flags)
};

ConditionFeatures featurize(const Conditioning& c, const ConditionSet& config, StageKind stage);

} // namespace vecplan
