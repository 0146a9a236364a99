// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "vecplan/errors.hpp"
#include "vecplan/random.hpp"

namespace vecplan {

namespace {

constexpr double kMinSide = 16 * kGridStep;  // 0.0625
constexpr double kEntranceWidth = 16 * kGridStep;
constexpr double kEntranceDepth = 4 * kGridStep;

double snap(double v) {
    return std::round(v / kGridStep) * kGridStep;
}

// Splits the cell along its longer side at a snapped fraction in [0.3, 0.7].
std::optional<std::pair<Rect, Rect>> split_cell(const Rect& cell, Rng& rng) {
    const bool vertical_cut = cell.width() > cell.height() ||
                              (cell.width() == cell.height() && rng.bernoulli(0.5));
    const double lo = vertical_cut ? cell.x1 : cell.y1;
    const double hi = vertical_cut ? cell.x2 : cell.y2;
    const double len = hi - lo;
    if (len < 2 * kMinSide) {
        return std::nullopt;
    }
    const double min_cut = std::max(lo + kMinSide, snap(lo + 0.3 * len));
    const double max_cut = std::min(hi - kMinSide, snap(lo + 0.7 * len));
    if (min_cut > max_cut) {
        return std::nullopt;
    }
    const auto steps = static_cast<std::int64_t>(std::floor((max_cut - min_cut) / kGridStep + 1e-9));
    const double cut = min_cut + kGridStep * static_cast<double>(rng.uniform_int(0, steps));
    if (vertical_cut) {
        return std::pair{Rect{cell.x1, cell.y1, cut, cell.y2}, Rect{cut, cell.y1, cell.x2, cell.y2}};
    }
    return std::pair{Rect{cell.x1, cell.y1, cell.x2, cut}, Rect{cell.x1, cut, cell.x2, cell.y2}};
}

std::optional<std::vector<Rect>> guillotine(const Rect& outer, int cells, Rng& rng) {
    std::vector<Rect> out{outer};
    while (static_cast<int>(out.size()) < cells) {
        // Area-weighted choice of the cell to split; fall back to any splittable cell.
        std::vector<std::size_t> order(out.size());
        std::iota(order.begin(), order.end(), 0);
        double total = 0.0;
        for (const auto& c : out) {
            total += c.area();
        }
        double pick = rng.uniform() * total;
        std::size_t first = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            pick -= out[i].area();
            if (pick <= 0.0) {
                first = i;
                break;
            }
        }
        std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
        bool split = false;
        for (std::size_t idx : order) {
            if (auto parts = split_cell(out[idx], rng)) {
                out[idx] = parts->first;
                out.push_back(parts->second);
                split = true;
                break;
            }
        }
        if (!split) {
            return std::nullopt;
        }
    }
    return out;
}

int corners_touched(const Rect& cell, const Rect& outer) {
    const bool left = cell.x1 == outer.x1, right = cell.x2 == outer.x2;
    const bool top = cell.y1 == outer.y1, bottom = cell.y2 == outer.y2;
    return (left && top) + (right && top) + (right && bottom) + (left && bottom);
}

bool touches_outline(const Rect& cell, const Rect& outer, const std::vector<Rect>& notches) {
    if (cell.x1 == outer.x1 || cell.x2 == outer.x2 || cell.y1 == outer.y1 || cell.y2 == outer.y2) {
        return true;
    }
    const Region c{cell};
    for (const auto& n : notches) {
        if (shared_edge_length(c, Region{n}) > 0.0) {
            return true;
        }
    }
    return false;
}

std::optional<std::array<Point, 4>> place_entrance(const std::vector<Point>& corners, Rng& rng) {
    std::vector<std::size_t> candidates;
    const std::size_t n = corners.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = corners[i];
        const Point& b = corners[(i + 1) % n];
        if (std::abs(b.x - a.x) + std::abs(b.y - a.y) >= kEntranceWidth + 2 * kMinSide) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    const std::size_t i = candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
    const Point& a = corners[i];
    const Point& b = corners[(i + 1) % n];
    const double len = std::abs(b.x - a.x) + std::abs(b.y - a.y);
    const double dx = (b.x - a.x) / len, dy = (b.y - a.y) / len;
    const auto slots = static_cast<std::int64_t>(std::floor((len - kEntranceWidth - 2 * kMinSide) / kGridStep + 1e-9));
    const double offset = kMinSide + kGridStep * static_cast<double>(rng.uniform_int(0, slots));
    const Point p{a.x + dx * offset, a.y + dy * offset};
    const Point q{p.x + dx * kEntranceWidth, p.y + dy * kEntranceWidth};
    // Interior lies to the right of travel for a clockwise (y-down) ring.
    const double nx = -dy * kEntranceDepth, ny = dx * kEntranceDepth;
    return std::array<Point, 4>{p, q, Point{q.x + nx, q.y + ny}, Point{p.x + nx, p.y + ny}};
}

struct Quota {
    int bedrooms = 0;
    int kitchen = 0;
    int bathroom = 0;
    int balcony = 0;
    int storage = 0;
};

Quota draw_quota(int others, double storage_probability, Rng& rng) {
    int storage = rng.bernoulli(storage_probability) ? 1 : 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<Quota> options;
        const int rest = others - storage;
        for (int b = 1; b <= 3; ++b) {
            for (int k = 0; k <= 1; ++k) {
                for (int ba = 0; ba <= 1; ++ba) {
                    for (int bal = 0; bal <= 1; ++bal) {
                        if (b + k + ba + bal == rest) {
                            options.push_back({b, k, ba, bal, storage});
                        }
                    }
                }
            }
        }
        if (!options.empty()) {
            return options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
        }
        storage = 1 - storage;
    }
    throw Error(ErrorCode::GenerationExhausted, "no category quota fits " + std::to_string(others + 1) + " rooms");
}

std::optional<VectorFloorPlan> attempt(const GeneratorParams& params, int rooms, int notch_count, Rng& rng) {
    const double w = snap(rng.uniform(0.55, 0.95));
    const double h = snap(rng.uniform(0.55, 0.95));
    const double x0 = snap(rng.uniform(0.025, 1.0 - 0.025 - w));
    const double y0 = snap(rng.uniform(0.025, 1.0 - 0.025 - h));
    const Rect outer{x0, y0, x0 + w, y0 + h};

    auto cells = guillotine(outer, rooms + notch_count, rng);
    if (!cells) {
        return std::nullopt;
    }

    std::vector<Rect> notches;
    if (notch_count > 0) {
        std::vector<std::size_t> corner_cells;
        for (std::size_t i = 0; i < cells->size(); ++i) {
            const Rect& c = (*cells)[i];
            if (corners_touched(c, outer) == 1 && c.area() <= 0.2 * outer.area()) {
                corner_cells.push_back(i);
            }
        }
        if (static_cast<int>(corner_cells.size()) < notch_count) {
            return std::nullopt;
        }
        rng.shuffle(corner_cells.begin(), corner_cells.end());
        corner_cells.resize(static_cast<std::size_t>(notch_count));
        std::sort(corner_cells.rbegin(), corner_cells.rend());
        for (std::size_t i : corner_cells) {
            notches.push_back((*cells)[i]);
            cells->erase(cells->begin() + static_cast<std::ptrdiff_t>(i));
        }
    }

    Region footprint{outer};
    for (const auto& n : notches) {
        footprint = region_difference(footprint, Region{n});
    }
    const auto outline = region_outline(footprint);
    if (outline.size() != 1) {
        return std::nullopt;
    }
    auto entrance = place_entrance(canonicalize_ring(outline.front()), rng);
    if (!entrance) {
        return std::nullopt;
    }
    Boundary boundary;
    try {
        boundary = Boundary::make(outline.front(), *entrance);
    } catch (const Error&) {
        return std::nullopt;
    }

    // Living room is the largest cell.
    std::vector<std::size_t> order(cells->size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (*cells)[a].area() > (*cells)[b].area();
    });
    const Quota quota = draw_quota(rooms - 1, params.storage_probability, rng);

    std::vector<RoomCategory> category(cells->size(), RoomCategory::Bedroom);
    std::vector<bool> assigned(cells->size(), false);
    category[order[0]] = RoomCategory::Living;
    assigned[order[0]] = true;

    if (quota.balcony) {
        std::vector<std::size_t> edge_cells;
        for (std::size_t i : order) {
            if (!assigned[i] && touches_outline((*cells)[i], outer, notches)) {
                edge_cells.push_back(i);
            }
        }
        if (edge_cells.empty()) {
            return std::nullopt;
        }
        const std::size_t pick =
            edge_cells[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(edge_cells.size()) - 1))];
        category[pick] = RoomCategory::Balcony;
        assigned[pick] = true;
    }
    int bedrooms = quota.bedrooms;
    for (std::size_t i : order) {
        if (bedrooms == 0) {
            break;
        }
        if (!assigned[i]) {
            category[i] = RoomCategory::Bedroom;
            assigned[i] = true;
            --bedrooms;
        }
    }
    std::vector<RoomCategory> rest;
    for (int k = 0; k < quota.kitchen; ++k) rest.push_back(RoomCategory::Kitchen);
    for (int k = 0; k < quota.bathroom; ++k) rest.push_back(RoomCategory::Bathroom);
    for (int k = 0; k < quota.storage; ++k) rest.push_back(RoomCategory::Storage);
    rng.shuffle(rest.begin(), rest.end());
    std::size_t next = 0;
    for (std::size_t i : order) {
        if (!assigned[i]) {
            category[i] = rest.at(next++);
            assigned[i] = true;
        }
    }

    VectorFloorPlan plan;
    plan.boundary = std::move(boundary);
    for (std::size_t i = 0; i < cells->size(); ++i) {
        plan.rooms.push_back({category[i], Region{(*cells)[i]}});
    }
    plan.adjacency.room_count = static_cast<int>(plan.rooms.size());
    canonicalize_plan(plan);
    plan.adjacency = adjacency_from_geometry(plan.rooms, params.adjacency_threshold);

    // Canonical order puts the living room first.
    int living_links = 0;
    for (int j = 1; j < plan.adjacency.room_count; ++j) {
        living_links += plan.adjacency.connected(0, j) ? 1 : 0;
        bool any = false;
        for (int k = 0; k < plan.adjacency.room_count; ++k) {
            any = any || plan.adjacency.connected(j, k);
        }
        if (!any) {
            return std::nullopt;
        }
    }
    if (2 * living_links < plan.adjacency.room_count - 1) {
        return std::nullopt;
    }
    return plan;
}

} // namespace

void GeneratorParams::validate() const {
    if (min_rooms < 3 || max_rooms > kMaxRooms || min_rooms > max_rooms) {
        throw Error(ErrorCode::InvalidArgument, "room count range must lie within [3, 8]");
    }
    if (min_notches < 0 || max_notches > 3 || min_notches > max_notches) {
        throw Error(ErrorCode::InvalidArgument, "notch count range must lie within [0, 3]");
    }
    if (!(adjacency_threshold > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "adjacency threshold must be positive");
    }
    if (!(storage_probability >= 0.0 && storage_probability <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "storage probability must lie in [0, 1]");
    }
    if (max_attempts < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_attempts must be positive");
    }
}

Json params_to_json(const GeneratorParams& p) {
    return Json{{"seed", p.seed},
                {"room_count_range", {p.min_rooms, p.max_rooms}},
                {"notch_count_range", {p.min_notches, p.max_notches}},
                {"adjacency_threshold", p.adjacency_threshold},
                {"storage_probability", p.storage_probability},
                {"max_attempts", p.max_attempts}};
}

GeneratorParams params_from_json(const Json& j) {
    GeneratorParams p;
    p.seed = j.value("seed", p.seed);
    if (j.contains("room_count_range")) {
        p.min_rooms = j["room_count_range"].at(0).get<int>();
        p.max_rooms = j["room_count_range"].at(1).get<int>();
    }
    if (j.contains("notch_count_range")) {
        p.min_notches = j["notch_count_range"].at(0).get<int>();
        p.max_notches = j["notch_count_range"].at(1).get<int>();
    }
    p.adjacency_threshold = j.value("adjacency_threshold", p.adjacency_threshold);
    p.storage_probability = j.value("storage_probability", p.storage_probability);
    p.max_attempts = j.value("max_attempts", p.max_attempts);
    p.validate();
    return p;
}

AdjacencyMatrix adjacency_from_geometry(const std::vector<Room>& rooms, double threshold) {
    AdjacencyMatrix adj;
    adj.room_count = static_cast<int>(rooms.size());
    for (int i = 0; i < adj.room_count; ++i) {
        for (int j = i + 1; j < adj.room_count; ++j) {
            if (shared_edge_length(rooms[i].region, rooms[j].region) > threshold) {
                adj.connect(i, j);
            }
        }
    }
    return adj;
}

VectorFloorPlan generate_sample(const GeneratorParams& params, std::uint64_t index) {
    params.validate();
    Rng rng(mix_seed(params.seed, index));
    const int rooms = static_cast<int>(rng.uniform_int(params.min_rooms, params.max_rooms));
    const int notches = static_cast<int>(rng.uniform_int(params.min_notches, params.max_notches));
    for (int a = 0; a < params.max_attempts; ++a) {
        if (auto plan = attempt(params, rooms, notches, rng)) {
            return std::move(*plan);
        }
    }
    throw Error(ErrorCode::GenerationExhausted, "sample " + std::to_string(index) + " (" + std::to_string(rooms) +
                                                    " rooms) failed after " + std::to_string(params.max_attempts) +
                                                    " attempts");
}

std::vector<VectorFloorPlan> generate_dataset(const GeneratorParams& params, std::size_t count,
                                              std::uint64_t first_index) {
    std::vector<VectorFloorPlan> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(generate_sample(params, first_index + i));
    }
    return out;
}

DatasetSplit split_dataset(std::size_t count, std::uint64_t seed, double train_ratio, double validation_ratio) {
    if (train_ratio < 0.0 || validation_ratio < 0.0 || train_ratio + validation_ratio > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "split ratios must be non-negative and sum to at most 1");
    }
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(mix_seed(seed, 0x53504C4954ULL));
    rng.shuffle(idx.begin(), idx.end());
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(count) * train_ratio));
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(count) * validation_ratio));
    DatasetSplit s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(std::min(count, n_train + n_val)));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(count, n_train + n_val)), idx.end());
    return s;
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
    auto p = dataset;
    p += ".manifest.json";
    return p;
}

void save_dataset(const std::filesystem::path& path, const std::vector<VectorFloorPlan>& plans,
                  const GeneratorParams& params) {
    write_plans(path, plans);
    const Json manifest{{"schema", kManifestSchema},
                        {"format_version", kFormatVersion},
                        {"seed", params.seed},
                        {"count", plans.size()},
                        {"params", params_to_json(params)}};
    write_text_atomic(manifest_path(path), manifest.dump(2) + "\n");
}

std::vector<VectorFloorPlan> load_dataset(const std::filesystem::path& path) {
    const auto mpath = manifest_path(path);
    auto plans = read_plans(path);
    if (std::filesystem::exists(mpath)) {
        const Json m = Json::parse(read_text(mpath));
        if (m.value("format_version", 0) != kFormatVersion) {
            throw Error(ErrorCode::VersionMismatch, "dataset format version mismatch in " + mpath.string());
        }
        if (m.value("count", plans.size()) != plans.size()) {
            throw Error(ErrorCode::CorruptRecord, "manifest count does not match " + path.string());
        }
    }
    return plans;
}

} // namespace vecplan
