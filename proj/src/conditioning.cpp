// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/conditioning.hpp"

#include <string>

#include "vecplan/diffusion.hpp"
#include "vecplan/errors.hpp"

namespace vecplan {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void mismatch(const std::string& what) {
    throw Error(ErrorCode::ConditioningMismatch, what);
}

} // namespace

ConditionSet ConditionSet::parse(std::string_view text) {
    ConditionSet s;
    text = trim(text);
    if (text.empty() || text == "none") {
        return s;
    }
    while (!text.empty()) {
        const auto plus = text.find('+');
        const std::string_view tok = trim(text.substr(0, plus));
        text = plus == std::string_view::npos ? std::string_view{} : text.substr(plus + 1);
        if (tok == "B") {
            s.boundary = true;
        } else if (tok == "Rn") {
            s.room_count = true;
        } else if (tok == "Rc") {
            s.categories = true;
        } else if (tok == "Rsl") {
            s.sizes_locations = true;
        } else if (tok == "Ra" || tok == "adj") {
            s.adjacency = true;
        } else if (tok == "P") {
            s.partial = true;
        } else if (tok == "nodes") {
            s.room_count = s.categories = s.sizes_locations = true;
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown condition block '" + std::string(tok) + "'");
        }
    }
    return s;
}

std::string ConditionSet::to_string() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += '+';
        out += name;
    };
    add(boundary, "B");
    add(room_count, "Rn");
    add(categories, "Rc");
    add(sizes_locations, "Rsl");
    add(adjacency, "Ra");
    add(partial, "P");
    return out.empty() ? "none" : out;
}

bool ConditionSet::contains(const ConditionSet& o) const noexcept {
    return (boundary || !o.boundary) && (room_count || !o.room_count) && (categories || !o.categories) &&
           (sizes_locations || !o.sizes_locations) && (adjacency || !o.adjacency) && (partial || !o.partial);
}

ConditionSet Conditioning::blocks() const noexcept {
    ConditionSet s;
    s.boundary = boundary.has_value();
    s.room_count = room_count.has_value();
    s.categories = categories.has_value();
    s.sizes_locations = sizes_locations.has_value();
    s.adjacency = adjacency.has_value();
    s.partial = partial.has_value();
    return s;
}

Conditioning Conditioning::from_plan(const VectorFloorPlan& plan, const ConditionSet& blocks) {
    Conditioning c;
    const auto nodes = plan.nodes();
    if (blocks.boundary) {
        c.boundary = plan.boundary;
    }
    if (blocks.room_count) {
        c.room_count = static_cast<int>(nodes.size());
    }
    if (blocks.categories) {
        std::vector<RoomCategory> cats;
        for (const auto& n : nodes) cats.push_back(n.category);
        c.categories = std::move(cats);
    }
    if (blocks.sizes_locations) {
        std::vector<SizeLocation> sl;
        for (const auto& n : nodes) sl.push_back({n.size, n.location.x, n.location.y});
        c.sizes_locations = std::move(sl);
    }
    if (blocks.adjacency) {
        c.adjacency = plan.adjacency;
    }
    return c;
}

void check_conditioning(const Conditioning& c, const ConditionSet& config, StageKind stage) {
    const ConditionSet present = c.blocks();
    if (!config.contains(present)) {
        mismatch("conditioning " + present.to_string() + " is not accepted by a " + config.to_string() + " network");
    }
    std::optional<int> n;
    auto agree = [&](int count, const char* what) {
        if (n && *n != count) {
            mismatch(std::string(what) + " implies " + std::to_string(count) + " rooms, other blocks imply " +
                     std::to_string(*n));
        }
        n = count;
    };
    if (c.room_count) {
        if (*c.room_count < 1 || *c.room_count > kMaxRooms) {
            throw Error(ErrorCode::InvalidArgument, "room count must be in 1..8");
        }
        agree(*c.room_count, "room count");
    }
    if (c.categories) {
        if (c.categories->size() > static_cast<std::size_t>(kMaxRooms)) {
            throw Error(ErrorCode::TooManyRooms, "more than 8 categories");
        }
        agree(static_cast<int>(c.categories->size()), "category list");
    }
    if (c.sizes_locations) {
        if (c.sizes_locations->size() > static_cast<std::size_t>(kMaxRooms)) {
            throw Error(ErrorCode::TooManyRooms, "more than 8 size/location rows");
        }
        for (const auto& sl : *c.sizes_locations) {
            if (!(sl.size >= 0.0 && sl.size <= 1.0 && sl.x >= 0.0 && sl.x <= 1.0 && sl.y >= 0.0 && sl.y <= 1.0)) {
                throw Error(ErrorCode::InvalidArgument, "size/location values must lie in [0, 1]");
            }
        }
        agree(static_cast<int>(c.sizes_locations->size()), "size/location list");
    }
    if (c.adjacency) {
        if (!c.adjacency->valid()) {
            throw Error(ErrorCode::InvalidArgument, "adjacency must be symmetric with an empty diagonal");
        }
        agree(c.adjacency->room_count, "adjacency");
    }
    if (c.partial) {
        if (c.partial->values.kind != stage) {
            mismatch("partial input targets " + std::string(stage_kind_name(c.partial->values.kind)) + ", network is " +
                     std::string(stage_kind_name(stage)));
        }
        c.partial->values.check_shape();
        if (c.partial->known.size() != slot_map(stage).size()) {
            throw Error(ErrorCode::ShapeMismatch, "partial known-mask has the wrong number of slots");
        }
    }
}

ConditionFeatures featurize(const Conditioning& c, const ConditionSet& config, StageKind stage) {
    check_conditioning(c, config, stage);
    ConditionFeatures f;
    if (c.boundary) {
        f.has_boundary = true;
        const auto [b, e] = encode_boundary(*c.boundary);
        f.boundary.resize(ConditionFeatures::kBoundaryTokens, ConditionFeatures::kBoundaryWidth);
        for (int i = 0; i < ConditionFeatures::kBoundaryTokens; ++i) {
            for (int j = 0; j < ConditionFeatures::kBoundaryWidth; ++j) {
                f.boundary(i, j) = b.values(0, i * ConditionFeatures::kBoundaryWidth + j);
            }
        }
        f.entrance = e.values.topRows(1);
    }
    if (c.room_count) {
        f.has_room_count = true;
        f.room_count = Matrix::Zero(1, kMaxRooms);
        f.room_count(0, *c.room_count - 1) = 1.0;
    }
    if (c.categories) {
        f.has_categories = true;
        f.categories = Matrix::Zero(kMaxRooms, ConditionFeatures::kCategoryWidth);
        for (int i = 0; i < kMaxRooms; ++i) {
            const auto col = i < static_cast<int>(c.categories->size())
                                 ? static_cast<int>((*c.categories)[static_cast<std::size_t>(i)]) - 1
                                 : kCategoryCount;
            f.categories(i, col) = 1.0;
        }
    }
    if (c.sizes_locations) {
        f.has_sizes_locations = true;
        f.sizes_locations = Matrix::Zero(kMaxRooms, ConditionFeatures::kSizeLocationWidth);
        for (std::size_t i = 0; i < c.sizes_locations->size(); ++i) {
            const auto& sl = (*c.sizes_locations)[i];
            const auto r = static_cast<Eigen::Index>(i);
            f.sizes_locations(r, 0) = to_signed(sl.size);
            f.sizes_locations(r, 1) = to_signed(sl.x);
            f.sizes_locations(r, 2) = to_signed(sl.y);
            f.sizes_locations(r, 3) = 1.0;
        }
    }
    if (c.adjacency) {
        f.has_adjacency = true;
        f.adjacency = encode_adjacency(*c.adjacency).values;
    }
    if (c.partial) {
        f.has_partial = true;
        const Matrix mask = expand_slot_mask(stage, c.partial->known);
        const auto w = mask.cols();
        f.partial.resize(kMaxRooms, 2 * w);
        f.partial.leftCols(w) = c.partial->values.values.cwiseProduct(mask);
        f.partial.rightCols(w) = mask;
    }
    return f;
}

} // namespace vecplan
