// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecplan/geometry.hpp"

namespace vecplan {

using Json = nlohmann::json;

// Plan records are one JSON object per line:
//   {"schema": "vecplan.plan/1",
//    "boundary": [[x, y], ...],              canonical corners
//    "entrance": [[x, y] x 4],               TL, TR, BR, BL
//    "rooms": [{"category": "living",
//               "box": [x1, y1, x2, y2]      single-rectangle rooms, or
//               "polygon": [[[x, y], ...]]   rings, even-odd fill
//               "size": s, "location": [x, y]}, ...],
//    "adjacency": [[i, j], ...]}             pairs with i < j, canonical room indices
// size and location are derived values, written for consumers and ignored on read.
inline constexpr const char* kPlanSchema = "vecplan.plan/1";
inline constexpr const char* kManifestSchema = "vecplan.manifest/1";
inline constexpr int kFormatVersion = 1;

Json point_to_json(const Point& p);
Point point_from_json(const Json& j);
Json ring_to_json(const Ring& ring);
Ring ring_from_json(const Json& j);
Json region_to_json_fields(const Region& region);  // {"box": ...} or {"polygon": ...}
Region region_from_json_fields(const Json& room);

Json boundary_to_json(const Boundary& b);  // {"boundary": ..., "entrance": ...}
Boundary boundary_from_json(const Json& j);

Json plan_to_json(const VectorFloorPlan& plan);
VectorFloorPlan plan_from_json(const Json& j);

void write_plans(const std::filesystem::path& path, const std::vector<VectorFloorPlan>& plans);
// Throws CorruptRecord naming the 1-based line number.
std::vector<VectorFloorPlan> read_plans(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

} // namespace vecplan
