// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/interchange.hpp"

#include <fstream>
#include <sstream>

#include "vecplan/errors.hpp"

namespace vecplan {

Json point_to_json(const Point& p) {
    return Json::array({p.x, p.y});
}

Point point_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw Error(ErrorCode::CorruptRecord, "point must be [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Json ring_to_json(const Ring& ring) {
    Json out = Json::array();
    for (const auto& p : ring) {
        out.push_back(point_to_json(p));
    }
    return out;
}

Ring ring_from_json(const Json& j) {
    if (!j.is_array()) {
        throw Error(ErrorCode::CorruptRecord, "ring must be an array of points");
    }
    Ring ring;
    for (const auto& p : j) {
        ring.push_back(point_from_json(p));
    }
    return ring;
}

Json region_to_json_fields(const Region& region) {
    Json out = Json::object();
    if (region.size() == 1) {
        const Rect& r = region.front();
        out["box"] = Json::array({r.x1, r.y1, r.x2, r.y2});
        return out;
    }
    Json rings = Json::array();
    for (const auto& ring : region_outline(region)) {
        rings.push_back(ring_to_json(ring));
    }
    out["polygon"] = std::move(rings);
    return out;
}

Region region_from_json_fields(const Json& room) {
    if (room.contains("box")) {
        const auto& b = room.at("box");
        if (!b.is_array() || b.size() != 4) {
            throw Error(ErrorCode::CorruptRecord, "box must be [x1, y1, x2, y2]");
        }
        Rect r{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        if (r.empty()) {
            throw Error(ErrorCode::CorruptRecord, "box is empty or inverted");
        }
        return {r};
    }
    if (room.contains("polygon")) {
        std::vector<Ring> rings;
        for (const auto& ring : room.at("polygon")) {
            rings.push_back(ring_from_json(ring));
        }
        return region_from_rings(rings);
    }
    throw Error(ErrorCode::CorruptRecord, "room needs a box or polygon");
}

Json boundary_to_json(const Boundary& b) {
    Json entrance = Json::array();
    for (const auto& p : b.entrance) {
        entrance.push_back(point_to_json(p));
    }
    return Json{{"boundary", ring_to_json(b.corners)}, {"entrance", std::move(entrance)}};
}

Boundary boundary_from_json(const Json& j) {
    const Ring corners = ring_from_json(j.at("boundary"));
    const auto& e = j.at("entrance");
    if (!e.is_array() || e.size() != 4) {
        throw Error(ErrorCode::CorruptRecord, "entrance must have 4 points");
    }
    std::array<Point, 4> entrance{};
    for (std::size_t k = 0; k < 4; ++k) {
        entrance[k] = point_from_json(e[k]);
    }
    return Boundary::make(corners, entrance);
}

Json plan_to_json(const VectorFloorPlan& plan) {
    Json j = boundary_to_json(plan.boundary);
    j["schema"] = kPlanSchema;
    Json rooms = Json::array();
    const auto nodes = plan.nodes();
    for (std::size_t i = 0; i < plan.rooms.size(); ++i) {
        Json room = region_to_json_fields(plan.rooms[i].region);
        room["category"] = std::string(category_name(plan.rooms[i].category));
        room["size"] = nodes[i].size;
        room["location"] = point_to_json(nodes[i].location);
        rooms.push_back(std::move(room));
    }
    j["rooms"] = std::move(rooms);
    Json adj = Json::array();
    for (const auto& [a, b] : plan.adjacency.pairs()) {
        adj.push_back(Json::array({a, b}));
    }
    j["adjacency"] = std::move(adj);
    return j;
}

VectorFloorPlan plan_from_json(const Json& j) {
    try {
        if (j.value("schema", std::string()) != kPlanSchema) {
            throw Error(ErrorCode::CorruptRecord, "unsupported plan schema");
        }
        VectorFloorPlan plan;
        plan.boundary = boundary_from_json(j);
        for (const auto& room : j.at("rooms")) {
            const auto& cat = room.at("category");
            const RoomCategory c =
                cat.is_string() ? category_from_name(cat.get<std::string>()) : category_from_int(cat.get<int>());
            plan.rooms.push_back({c, region_from_json_fields(room)});
        }
        if (plan.rooms.size() > static_cast<std::size_t>(kMaxRooms)) {
            throw Error(ErrorCode::TooManyRooms, "plan has more than 8 rooms");
        }
        plan.adjacency.room_count = static_cast<int>(plan.rooms.size());
        for (const auto& pair : j.at("adjacency")) {
            plan.adjacency.connect(pair.at(0).get<int>(), pair.at(1).get<int>());
        }
        return plan;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, e.what());
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
        }
        out << contents;
        if (!out) {
            throw Error(ErrorCode::Io, "write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_plans(const std::filesystem::path& path, const std::vector<VectorFloorPlan>& plans) {
    std::string out;
    for (const auto& p : plans) {
        out += plan_to_json(p).dump();
        out += '\n';
    }
    write_text_atomic(path, out);
}

std::vector<VectorFloorPlan> read_plans(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::vector<VectorFloorPlan> plans;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            plans.push_back(plan_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::CorruptRecord, "line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptRecord, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return plans;
}

} // namespace vecplan
