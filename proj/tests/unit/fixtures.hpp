// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "vecplan/errors.hpp"
#include "vecplan/geometry.hpp"

namespace vecplan::testing {

// Code of the vecplan::Error thrown by fn, or nullopt when nothing is thrown.
template <typename F>
std::optional<ErrorCode> error_code_of(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

// Unit square with an entrance on the top edge.
inline Boundary unit_square() {
    return Boundary::make({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0.25, 0}, {0.375, 0}, {0.375, 0.0625}, {0.25, 0.0625}}});
}

inline Boundary rectangle(double w, double h) {
    return Boundary::make({{0, 0}, {w, 0}, {w, h}, {0, h}}, {{{0.125, 0}, {0.25, 0}, {0.25, 0.0625}, {0.125, 0.0625}}});
}

// Square split into a left and a right room.
inline VectorFloorPlan two_room_plan() {
    VectorFloorPlan p;
    p.boundary = unit_square();
    p.rooms = {{RoomCategory::Living, {{0, 0, 0.5, 1}}}, {RoomCategory::Bedroom, {{0.5, 0, 1, 1}}}};
    p.adjacency.room_count = 2;
    p.adjacency.connect(0, 1);
    return p;
}

} // namespace vecplan::testing
