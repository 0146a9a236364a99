// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "vecplan/errors.hpp"

namespace vecplan {

LoadedVariant::LoadedVariant(std::string id_, Checkpoint ck, std::filesystem::path path_)
    : id(std::move(id_)),
      path(std::move(path_)),
      checkpoint(std::move(ck)),
      net(checkpoint.model, checkpoint.params),
      schedule(build_schedule(checkpoint.schedule)) {
    if (schedule.timesteps() > checkpoint.model.timesteps) {
        throw Error(ErrorCode::CorruptCheckpoint, "schedule is longer than the network's time range");
    }
}

// Registry.

void ModelRegistry::add(std::string id, Checkpoint checkpoint, std::filesystem::path path) {
    auto v = std::make_shared<const LoadedVariant>(id, std::move(checkpoint), std::move(path));
    variants_[std::move(id)] = std::move(v);
}

ModelRegistry ModelRegistry::load(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_text(path));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, path.string() + ": " + e.what());
    }
    if (doc.value("schema", std::string()) != kRegistrySchema) {
        throw Error(ErrorCode::CorruptRecord, path.string() + ": unsupported registry schema");
    }
    ModelRegistry reg;
    const auto base = path.parent_path();
    try {
        for (const auto& v : doc.at("variants")) {
            const auto id = v.at("id").get<std::string>();
            std::filesystem::path ck = v.at("checkpoint").get<std::string>();
            if (ck.is_relative()) ck = base / ck;
            if (!std::filesystem::exists(ck)) {
                throw Error(ErrorCode::MissingCheckpoint, "variant " + id + ": checkpoint " + ck.string() + " not found");
            }
            Checkpoint loaded = load_checkpoint(ck);
            if (v.contains("stage") && stage_kind_from_name(v.at("stage").get<std::string>()) != loaded.model.stage) {
                throw Error(ErrorCode::ConditioningMismatch, "variant " + id + ": checkpoint stage differs from registry");
            }
            if (v.contains("conditions") &&
                ConditionSet::parse(v.at("conditions").get<std::string>()) != loaded.model.conditions) {
                throw Error(ErrorCode::ConditioningMismatch,
                            "variant " + id + ": checkpoint conditions " + loaded.model.conditions.to_string() +
                                " differ from registry");
            }
            reg.add(id, std::move(loaded), ck);
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, path.string() + ": " + e.what());
    }
    return reg;
}

Json ModelRegistry::to_json() const {
    Json list = Json::array();
    for (const auto& [id, v] : variants_) {
        list.push_back({{"id", id},
                        {"checkpoint", v->path.string()},
                        {"stage", std::string(stage_kind_name(v->stage()))},
                        {"conditions", v->conditions().to_string()},
                        {"train_steps", v->checkpoint.step}});
    }
    return Json{{"schema", kRegistrySchema}, {"variants", std::move(list)}};
}

std::shared_ptr<const LoadedVariant> ModelRegistry::find(std::string_view id) const {
    const auto it = variants_.find(id);
    return it == variants_.end() ? nullptr : it->second;
}

std::shared_ptr<const LoadedVariant> ModelRegistry::get(std::string_view id) const {
    if (auto v = find(id)) return v;
    std::string names;
    for (const auto& [k, v] : variants_) names += (names.empty() ? "" : ", ") + k;
    throw Error(ErrorCode::MissingCheckpoint,
                "unknown variant '" + std::string(id) + "'; available: " + (names.empty() ? "none" : names));
}

std::shared_ptr<const LoadedVariant> ModelRegistry::default_for(StageKind stage, const ConditionSet& needed) const {
    for (const auto& [id, v] : variants_) {
        if (v->stage() == stage && v->conditions().contains(needed)) return v;
    }
    throw Error(ErrorCode::MissingCheckpoint, "no " + std::string(stage_kind_name(stage)) + " variant accepts " +
                                                  needed.to_string());
}

std::vector<std::string> ModelRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, v] : variants_) out.push_back(id);
    return out;
}

// Sampling.

StageTensor apply_partial(const StageTensor& x, const StageTensor& partial, std::span<const std::uint8_t> known, int t,
                          const NoiseSchedule& schedule, Rng& rng) {
    if (partial.kind != x.kind) {
        throw Error(ErrorCode::ShapeMismatch, "partial input targets a different stage");
    }
    x.check_shape();
    partial.check_shape();
    const Matrix mask = expand_slot_mask(x.kind, known);
    if (mask.sum() == 0.0) return x;
    const Matrix eps = standard_normal(x.values.rows(), x.values.cols(), rng);
    const Matrix noised = forward_noise(partial.values, t, eps, schedule);
    StageTensor out = x;
    out.values = (mask.array() > 0.5).select(noised, x.values);
    return out;
}

std::vector<StageSample> sample_stage_batch(const LoadedVariant& variant, const std::vector<Conditioning>& cs,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::vector<SampleOptions>& options) {
    const auto n = cs.size();
    if (seeds.size() != n || options.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "requests, seeds and options must have equal length");
    }
    if (n == 0) return {};
    const StageKind stage = variant.stage();
    const NoiseSchedule& s = variant.schedule;
    const int T = s.timesteps();
    const int w = variant.net.width();
    std::vector<ConditionFeatures> feats;
    feats.reserve(n);
    for (const auto& c : cs) feats.push_back(featurize(c, variant.conditions(), stage));
    for (const auto& o : options) {
        for (int t : o.snapshot_ts) {
            if (t < 0 || t > T) throw Error(ErrorCode::InvalidArgument, "snapshot step outside 0..T");
        }
        if (o.clamp) {
            if (o.clamp->values.kind != stage) {
                throw Error(ErrorCode::ConditioningMismatch, "clamped partial input targets another stage");
            }
            o.clamp->values.check_shape();
            expand_slot_mask(stage, o.clamp->known);
        }
    }

    std::vector<Rng> rngs;
    rngs.reserve(n);
    for (auto seed : seeds) rngs.emplace_back(seed);
    std::vector<StageSample> out(n);
    std::vector<std::map<int, StageTensor>> snaps(n);
    auto snapshot = [&](std::size_t b, int t, const Matrix& x) {
        const auto& ts = options[b].snapshot_ts;
        if (std::find(ts.begin(), ts.end(), t) != ts.end()) {
            snaps[b][t] = StageTensor(stage, x.cwiseMax(-1.0).cwiseMin(1.0));
        }
    };

    DenoiserBatch batch;
    batch.x.resize(static_cast<Eigen::Index>(n) * kMaxRooms, w);
    for (std::size_t b = 0; b < n; ++b) {
        batch.x.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms) = standard_normal(kMaxRooms, w, rngs[b]);
        batch.features.push_back(&feats[b]);
        snapshot(b, T, batch.x.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms));
    }
    const Matrix zero = Matrix::Zero(kMaxRooms, w);
    for (int t = T; t >= 1; --t) {
        batch.t.assign(n, t);
        const Matrix eps_hat = variant.net.forward(batch);
        if (!eps_hat.allFinite()) {
            throw Error(ErrorCode::NonFiniteOutput, "denoiser produced non-finite values at t=" + std::to_string(t));
        }
        for (std::size_t b = 0; b < n; ++b) {
            auto xb = batch.x.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms);
            const Matrix z = t > 1 ? standard_normal(kMaxRooms, w, rngs[b]) : zero;
            Matrix next = reverse_step(xb, eps_hat.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms), t,
                                       z, s);
            if (options[b].clamp) {
                next = apply_partial(StageTensor(stage, std::move(next)), options[b].clamp->values,
                                     options[b].clamp->known, t - 1, s, rngs[b])
                           .values;
            }
            xb = next;
            snapshot(b, t - 1, next);
        }
    }
    for (std::size_t b = 0; b < n; ++b) {
        out[b].tensor = StageTensor(
            stage, batch.x.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms).cwiseMax(-1.0).cwiseMin(1.0));
        for (int t : options[b].snapshot_ts) {
            out[b].snapshots.push_back({t, snaps[b].at(t)});
        }
    }
    return out;
}

StageSample sample_stage(const LoadedVariant& variant, const Conditioning& c, std::uint64_t seed,
                         const SampleOptions& options) {
    return std::move(sample_stage_batch(variant, {c}, {seed}, {options}).front());
}

// Post-processing.

namespace {

struct AxisValue {
    double v;
    int box;   // -1 for boundary anchors
    int side;  // 0 = low edge, 1 = high edge
};

void snap_axis(std::vector<Rect>& boxes, const std::vector<double>& anchors, bool x_axis, double delta) {
    std::vector<AxisValue> vals;
    for (double a : anchors) vals.push_back({a, -1, 0});
    for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
        const Rect& r = boxes[static_cast<std::size_t>(i)];
        vals.push_back({x_axis ? r.x1 : r.y1, i, 0});
        vals.push_back({x_axis ? r.x2 : r.y2, i, 1});
    }
    std::stable_sort(vals.begin(), vals.end(), [](const AxisValue& a, const AxisValue& b) { return a.v < b.v; });
    std::size_t i = 0;
    while (i < vals.size()) {
        std::size_t j = i;
        while (j + 1 < vals.size() && vals[j + 1].v - vals[i].v <= 2.0 * delta + 1e-9) ++j;
        std::vector<double> cluster_anchors;
        double sum = 0.0;
        int count = 0;
        for (std::size_t k = i; k <= j; ++k) {
            if (vals[k].box < 0) {
                cluster_anchors.push_back(vals[k].v);
            } else {
                sum += vals[k].v;
                ++count;
            }
        }
        for (std::size_t k = i; k <= j; ++k) {
            if (vals[k].box < 0) continue;
            double target = sum / count;
            if (!cluster_anchors.empty()) {
                target = *std::min_element(cluster_anchors.begin(), cluster_anchors.end(), [&](double a, double b) {
                    return std::abs(a - vals[k].v) < std::abs(b - vals[k].v);
                });
            }
            Rect& r = boxes[static_cast<std::size_t>(vals[k].box)];
            double& ref = x_axis ? (vals[k].side == 0 ? r.x1 : r.x2) : (vals[k].side == 0 ? r.y1 : r.y2);
            ref = target;
        }
        i = j + 1;
    }
}

} // namespace

VectorFloorPlan postprocess(const std::vector<RoomBox>& boxes, const Boundary& boundary,
                            const AdjacencyMatrix& adjacency, const PostprocessOptions& options) {
    if (boxes.empty()) {
        throw Error(ErrorCode::DegenerateInput, "post-processing needs at least one box");
    }
    if (boxes.size() > static_cast<std::size_t>(kMaxRooms)) {
        throw Error(ErrorCode::TooManyRooms, "more than 8 boxes");
    }
    validate_boundary_ring(boundary.corners);
    const Region interior = boundary.interior();
    const Rect bounds = *region_bounds(interior);

    std::vector<Rect> rects;
    for (const auto& b : boxes) {
        Rect r = b.rect();
        if (r.x1 > r.x2) std::swap(r.x1, r.x2);
        if (r.y1 > r.y2) std::swap(r.y1, r.y2);
        rects.push_back(r);
    }
    // 1. Snap facing edges together and onto the boundary lines.
    std::vector<double> ax, ay;
    for (const auto& p : boundary.corners) {
        ax.push_back(p.x);
        ay.push_back(p.y);
    }
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
    std::sort(ay.begin(), ay.end());
    ay.erase(std::unique(ay.begin(), ay.end()), ay.end());
    snap_axis(rects, ax, true, options.snap_distance);
    snap_axis(rects, ay, false, options.snap_distance);

    // 2. Clip to the boundary's bounding box.
    std::vector<std::optional<Rect>> live;
    for (const auto& r : rects) {
        auto c = intersect(r, bounds);
        live.push_back(c && !c->empty() ? c : std::nullopt);
    }
    // 3. Later boxes give way to earlier ones along the cheapest side.
    for (std::size_t j = 0; j < live.size(); ++j) {
        for (std::size_t i = 0; i < j && live[j]; ++i) {
            if (!live[i]) continue;
            const auto ov = intersect(*live[i], *live[j]);
            if (!ov || ov->empty()) continue;
            const Rect r = *live[j];
            const std::array<Rect, 4> cands{Rect{ov->x2, r.y1, r.x2, r.y2}, Rect{r.x1, r.y1, ov->x1, r.y2},
                                            Rect{r.x1, ov->y2, r.x2, r.y2}, Rect{r.x1, r.y1, r.x2, ov->y1}};
            const Rect* best = nullptr;
            for (const auto& c : cands) {
                if (c.empty()) continue;
                if (!best || c.area() > best->area()) best = &c;
            }
            live[j] = best ? std::optional<Rect>(*best) : std::nullopt;
        }
    }
    // Clip to the true outline; subtracting earlier rooms keeps interiors disjoint.
    std::vector<Room> rooms;
    std::vector<int> source;
    Region taken;
    for (std::size_t i = 0; i < live.size(); ++i) {
        if (!live[i]) continue;
        Region reg = region_difference(region_intersection(Region{*live[i]}, interior), taken);
        if (region_area(reg) <= 0.0) continue;
        taken = region_union(taken, reg);
        rooms.push_back({boxes[i].category, std::move(reg)});
        source.push_back(static_cast<int>(i));
    }
    if (rooms.empty()) {
        throw Error(ErrorCode::DegenerateInput, "no box overlaps the boundary");
    }
    // 4. Hand every uncovered rectangle to the neighbour sharing the longest edge.
    std::vector<Rect> pending = normalize_region(region_difference(interior, taken));
    while (!pending.empty()) {
        std::vector<Rect> next;
        bool progress = false;
        for (const Rect& piece : pending) {
            const Region pr{piece};
            int best = -1;
            double best_len = 1e-12;
            for (std::size_t r = 0; r < rooms.size(); ++r) {
                const double len = shared_edge_length(pr, rooms[r].region);
                if (len > best_len) {
                    best_len = len;
                    best = static_cast<int>(r);
                }
            }
            if (best < 0) {
                next.push_back(piece);
                continue;
            }
            rooms[static_cast<std::size_t>(best)].region = region_union(rooms[static_cast<std::size_t>(best)].region, pr);
            progress = true;
        }
        if (!progress) {
            throw Error(ErrorCode::DegenerateInput, "uncovered area is not reachable from any room");
        }
        pending = std::move(next);
    }

    VectorFloorPlan plan;
    plan.boundary = boundary;
    for (auto& r : rooms) {
        r.region = normalize_region(r.region);
    }
    plan.rooms = std::move(rooms);
    plan.adjacency.room_count = static_cast<int>(plan.rooms.size());
    for (std::size_t a = 0; a < source.size(); ++a) {
        for (std::size_t b = a + 1; b < source.size(); ++b) {
            const int sa = source[a], sb = source[b];
            if (sa < adjacency.room_count && sb < adjacency.room_count && adjacency.connected(sa, sb)) {
                plan.adjacency.connect(static_cast<int>(a), static_cast<int>(b));
            }
        }
    }
    canonicalize_plan(plan);
    return plan;
}

// Staged generation.

std::string_view generation_target_name(GenerationTarget t) noexcept {
    switch (t) {
    case GenerationTarget::Nodes: return "nodes";
    case GenerationTarget::Adjacency: return "adjacency";
    case GenerationTarget::Partition: return "partition";
    case GenerationTarget::FullPlan: return "plan";
    }
    return "plan";
}

GenerationTarget generation_target_from_name(std::string_view name) {
    if (name == "nodes") return GenerationTarget::Nodes;
    if (name == "adjacency") return GenerationTarget::Adjacency;
    if (name == "partition") return GenerationTarget::Partition;
    if (name == "plan" || name == "full_plan") return GenerationTarget::FullPlan;
    throw Error(ErrorCode::InvalidArgument, "unknown generation target '" + std::string(name) + "'");
}

std::vector<RoomNode> pass_through_nodes(const StageTensor& raw, const Conditioning& c) {
    if (raw.kind != StageKind::Nodes) {
        throw Error(ErrorCode::ShapeMismatch, "expected a nodes tensor");
    }
    raw.check_shape();
    std::vector<int> rows;
    std::optional<int> n;
    if (c.room_count) n = *c.room_count;
    else if (c.categories) n = static_cast<int>(c.categories->size());
    if (n) {
        std::vector<int> rank(kMaxRooms);
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return raw.values(a, 0) > raw.values(b, 0); });
        rows.assign(rank.begin(), rank.begin() + std::clamp(*n, 0, kMaxRooms));
        std::sort(rows.begin(), rows.end());
    } else {
        rows = decoded_node_rows(raw);
    }
    std::vector<RoomNode> out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const int r = rows[k];
        RoomNode node;
        node.is_room = true;
        node.category = c.categories && k < c.categories->size() ? (*c.categories)[k] : decode_category(raw.values(r, 1));
        auto unit = [&](int col) { return quantize_node_value(std::clamp(to_unit(raw.values(r, col)), 0.0, 1.0)); };
        node.size = unit(2);
        node.location = {unit(3), unit(4)};
        out.push_back(node);
    }
    std::stable_sort(out.begin(), out.end(), canonical_less);
    return out;
}

namespace {

struct StageRunner {
    const GenerationRequest& req;
    PipelineResult& res;

    StageSample run(const LoadedVariant& v, Conditioning c) const {
        const StageKind k = v.stage();
        const std::string tag(stage_kind_name(k));
        try {
            SampleOptions opt;
            for (int t : req.snapshot_ts) {
                if (t < 0) throw Error(ErrorCode::InvalidArgument, "snapshot step must be non-negative");
                if (t <= v.schedule.timesteps()) opt.snapshot_ts.push_back(t);
            }
            if (const auto it = req.partial.find(k); it != req.partial.end()) {
                if (v.conditions().partial) c.partial = it->second;
                if (req.clamp_partial) opt.clamp = it->second;
                if (!v.conditions().partial && !req.clamp_partial) {
                    throw Error(ErrorCode::ConditioningMismatch,
                                "variant " + v.id + " does not take partial input; enable clamp_partial");
                }
            }
            StageSample s = sample_stage(v, c, mix_seed(req.seed, static_cast<std::uint64_t>(k) + 1), opt);
            res.raw[k] = s.tensor;
            res.variants[k] = v.id;
            if (res.variant.empty()) res.variant = v.id;
            if (!s.snapshots.empty()) res.snapshots[k] = s.snapshots;
            return s;
        } catch (const Error& e) {
            throw Error(e.code(), tag + ": " + e.what());
        }
    }
};

// Keeps only the blocks the variant was trained with.
Conditioning restrict_to(Conditioning c, const ConditionSet& allowed) {
    if (!allowed.boundary) c.boundary.reset();
    if (!allowed.room_count) c.room_count.reset();
    if (!allowed.categories) c.categories.reset();
    if (!allowed.sizes_locations) c.sizes_locations.reset();
    if (!allowed.adjacency) c.adjacency.reset();
    if (!allowed.partial) c.partial.reset();
    return c;
}

void set_node_blocks(Conditioning& c, const std::vector<RoomNode>& nodes) {
    c.room_count = static_cast<int>(nodes.size());
    std::vector<RoomCategory> cats;
    std::vector<SizeLocation> sl;
    for (const auto& n : nodes) {
        cats.push_back(n.category);
        sl.push_back({n.size, n.location.x, n.location.y});
    }
    c.categories = std::move(cats);
    c.sizes_locations = std::move(sl);
}

std::vector<RoomNode> nodes_from_conditioning(const Conditioning& c) {
    std::vector<RoomNode> out;
    for (std::size_t i = 0; i < c.sizes_locations->size(); ++i) {
        const auto& sl = (*c.sizes_locations)[i];
        out.push_back({true, (*c.categories)[i], quantize_node_value(sl.size),
                       {quantize_node_value(sl.x), quantize_node_value(sl.y)}});
    }
    return out;
}

std::shared_ptr<const LoadedVariant> pick(const ModelRegistry& reg, const std::string& id, StageKind stage,
                                          const ConditionSet& needed) {
    auto v = id.empty() ? reg.default_for(stage, needed) : reg.get(id);
    if (v->stage() != stage) {
        throw Error(ErrorCode::ConditioningMismatch, "variant " + v->id + " is a " +
                                                         std::string(stage_kind_name(v->stage())) + " network, expected " +
                                                         std::string(stage_kind_name(stage)));
    }
    return v;
}

} // namespace

PipelineResult generate_plan(const GenerationRequest& req, const ModelRegistry& registry) {
    PipelineResult res;
    res.seed = req.seed;
    res.variant = req.variant;
    const StageRunner runner{req, res};
    const Conditioning& rc = req.conditioning;
    if (rc.partial) {
        throw Error(ErrorCode::InvalidArgument, "partial inputs go in the request's per-stage partial map");
    }
    const bool nodes_known = rc.categories && rc.sizes_locations;

    auto need_nodes_blocks = [&] {
        ConditionSet s;
        s.boundary = rc.boundary.has_value();
        s.room_count = s.categories = s.sizes_locations = true;
        return s;
    };

    auto sample_nodes = [&](const LoadedVariant& v) {
        check_conditioning(restrict_to(rc, {true, true, true, true, false, false}), v.conditions(), StageKind::Nodes);
        const StageSample s = runner.run(v, restrict_to(rc, v.conditions()));
        res.nodes = pass_through_nodes(s.tensor, rc);
    };

    auto sample_adjacency = [&](const LoadedVariant& v) {
        Conditioning c = rc;
        c.adjacency.reset();
        set_node_blocks(c, res.nodes);
        const StageSample s = runner.run(v, restrict_to(c, v.conditions()));
        res.adjacency = decode_adjacency(s.tensor, static_cast<int>(res.nodes.size()));
    };

    auto sample_partition = [&](const LoadedVariant& v) {
        Conditioning c = rc;
        set_node_blocks(c, res.nodes);
        if (res.adjacency) c.adjacency = *res.adjacency;
        const StageSample s = runner.run(v, restrict_to(c, v.conditions()));
        res.boxes = decode_boxes(s.tensor, res.nodes);
        if (rc.boundary && !res.boxes.empty()) {
            AdjacencyMatrix adj = res.adjacency.value_or(AdjacencyMatrix{});
            if (!res.adjacency) adj.room_count = static_cast<int>(res.boxes.size());
            try {
                res.plan = postprocess(res.boxes, *rc.boundary, adj);
            } catch (const Error& e) {
                throw Error(e.code(), std::string("postprocess: ") + e.what());
            }
        }
    };

    auto known_nodes = [&]() -> std::vector<RoomNode> {
        if (req.nodes) {
            auto n = *req.nodes;
            std::stable_sort(n.begin(), n.end(), canonical_less);
            return n;
        }
        if (nodes_known) {
            check_conditioning(rc, {true, true, true, true, true, false}, StageKind::Nodes);
            auto n = nodes_from_conditioning(rc);
            std::stable_sort(n.begin(), n.end(), canonical_less);
            return n;
        }
        throw Error(ErrorCode::InvalidArgument, "this stage needs nodes: pass nodes or categories with sizes/locations");
    };

    switch (req.target) {
    case GenerationTarget::Nodes: {
        const auto v = pick(registry, req.variant, StageKind::Nodes, {});
        if (rc.adjacency) {
            throw Error(ErrorCode::ConditioningMismatch, "nodes variants do not take adjacency conditioning");
        }
        sample_nodes(*v);
        break;
    }
    case GenerationTarget::Adjacency: {
        res.nodes = known_nodes();
        sample_adjacency(*pick(registry, req.variant, StageKind::Adjacency, need_nodes_blocks()));
        break;
    }
    case GenerationTarget::Partition: {
        res.nodes = known_nodes();
        if (rc.adjacency) res.adjacency = *rc.adjacency;
        ConditionSet needed = need_nodes_blocks();
        needed.adjacency = rc.adjacency.has_value();
        sample_partition(*pick(registry, req.variant, StageKind::Boxes, needed));
        break;
    }
    case GenerationTarget::FullPlan: {
        if (!rc.boundary) {
            throw Error(ErrorCode::InvalidArgument, "full plans need a boundary");
        }
        if (nodes_known) {
            res.nodes = known_nodes();
        } else {
            sample_nodes(*pick(registry, req.variant, StageKind::Nodes, {}));
        }
        if (res.nodes.empty()) {
            throw Error(ErrorCode::DegenerateInput, "nodes: sampled plan has no rooms");
        }
        if (rc.adjacency) {
            if (rc.adjacency->room_count != static_cast<int>(res.nodes.size())) {
                throw Error(ErrorCode::ConditioningMismatch, "adjacency room count differs from the node count");
            }
            res.adjacency = *rc.adjacency;
        } else {
            sample_adjacency(*pick(registry, req.adjacency_variant, StageKind::Adjacency, need_nodes_blocks()));
        }
        ConditionSet needed = need_nodes_blocks();
        needed.adjacency = true;
        sample_partition(*pick(registry, req.partition_variant, StageKind::Boxes, needed));
        break;
    }
    }
    return res;
}

// Documents.

Json conditioning_to_json(const Conditioning& c) {
    Json j = Json::object();
    if (c.boundary) {
        const Json b = boundary_to_json(*c.boundary);
        j["boundary"] = b.at("boundary");
        j["entrance"] = b.at("entrance");
    }
    if (c.room_count) j["room_count"] = *c.room_count;
    if (c.categories) {
        Json a = Json::array();
        for (auto cat : *c.categories) a.push_back(std::string(category_name(cat)));
        j["categories"] = std::move(a);
    }
    if (c.sizes_locations) {
        Json a = Json::array();
        for (const auto& sl : *c.sizes_locations) a.push_back(Json::array({sl.size, sl.x, sl.y}));
        j["sizes_locations"] = std::move(a);
    }
    if (c.adjacency) j["adjacency"] = adjacency_to_json(*c.adjacency);
    if (c.partial) j["partial"] = partial_to_json(*c.partial);
    return j;
}

namespace {

RoomCategory category_of(const Json& j) {
    return j.is_string() ? category_from_name(j.get<std::string>()) : category_from_int(j.get<int>());
}

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": " + e.what());
    }
}

} // namespace

Conditioning conditioning_from_json(const Json& j) {
    return guarded("conditions", [&] {
        Conditioning c;
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "conditions must be an object");
        if (j.contains("boundary")) c.boundary = boundary_from_json(j);
        if (j.contains("room_count")) c.room_count = j.at("room_count").get<int>();
        if (j.contains("categories")) {
            std::vector<RoomCategory> cats;
            for (const auto& v : j.at("categories")) cats.push_back(category_of(v));
            c.categories = std::move(cats);
        }
        if (j.contains("sizes_locations")) {
            std::vector<SizeLocation> sl;
            for (const auto& v : j.at("sizes_locations")) {
                sl.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
            }
            c.sizes_locations = std::move(sl);
        }
        if (j.contains("adjacency")) c.adjacency = adjacency_from_json(j.at("adjacency"));
        if (j.contains("partial")) c.partial = partial_from_json(j.at("partial"));
        return c;
    });
}

Json stage_tensor_to_json(const StageTensor& t) {
    Json rows = Json::array();
    for (int r = 0; r < t.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < t.cols(); ++c) row.push_back(t.values(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

StageTensor stage_tensor_from_json(const Json& j, StageKind kind) {
    return guarded("stage tensor", [&] {
        const int rows = stage_rows(kind), cols = stage_cols(kind);
        if (!j.is_array() || static_cast<int>(j.size()) != rows) {
            throw Error(ErrorCode::ShapeMismatch, "stage tensor needs 8 rows");
        }
        Matrix m(rows, cols);
        for (int r = 0; r < rows; ++r) {
            const auto& row = j.at(static_cast<std::size_t>(r));
            if (!row.is_array() || static_cast<int>(row.size()) != cols) {
                throw Error(ErrorCode::ShapeMismatch, "stage tensor row has the wrong width");
            }
            for (int c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
        return StageTensor(kind, std::move(m));
    });
}

Json partial_to_json(const PartialInput& p) {
    Json known = Json::array();
    for (auto k : p.known) known.push_back(k ? 1 : 0);
    return Json{{"stage", std::string(stage_kind_name(p.values.kind))},
                {"values", stage_tensor_to_json(p.values)},
                {"known", std::move(known)}};
}

PartialInput partial_from_json(const Json& j) {
    return guarded("partial", [&] {
        const StageKind kind = stage_kind_from_name(j.at("stage").get<std::string>());
        PartialInput p;
        p.values = stage_tensor_from_json(j.at("values"), kind);
        for (const auto& k : j.at("known")) p.known.push_back(k.get<int>() != 0 ? 1 : 0);
        if (p.known.size() != slot_map(kind).size()) {
            throw Error(ErrorCode::ShapeMismatch, "known mask has the wrong number of slots");
        }
        return p;
    });
}

Json nodes_to_json(const std::vector<RoomNode>& nodes) {
    Json a = Json::array();
    for (const auto& n : nodes) {
        a.push_back({{"category", std::string(category_name(n.category))},
                     {"size", n.size},
                     {"location", point_to_json(n.location)}});
    }
    return a;
}

std::vector<RoomNode> nodes_from_json(const Json& j) {
    return guarded("nodes", [&] {
        std::vector<RoomNode> out;
        for (const auto& n : j) {
            out.push_back({true, category_of(n.at("category")), n.at("size").get<double>(),
                           point_from_json(n.at("location"))});
        }
        if (out.size() > static_cast<std::size_t>(kMaxRooms)) {
            throw Error(ErrorCode::TooManyRooms, "more than 8 nodes");
        }
        return out;
    });
}

Json adjacency_to_json(const AdjacencyMatrix& a) {
    Json pairs = Json::array();
    for (const auto& [i, k] : a.pairs()) pairs.push_back(Json::array({i, k}));
    return Json{{"rooms", a.room_count}, {"pairs", std::move(pairs)}};
}

AdjacencyMatrix adjacency_from_json(const Json& j) {
    return guarded("adjacency", [&] {
        AdjacencyMatrix a;
        a.room_count = j.at("rooms").get<int>();
        if (a.room_count < 0 || a.room_count > kMaxRooms) {
            throw Error(ErrorCode::TooManyRooms, "adjacency room count must be 0..8");
        }
        for (const auto& p : j.at("pairs")) {
            const int x = p.at(0).get<int>(), y = p.at(1).get<int>();
            if (x < 0 || y < 0 || x >= a.room_count || y >= a.room_count || x == y) {
                throw Error(ErrorCode::InvalidArgument, "adjacency pair out of range");
            }
            a.connect(x, y);
        }
        return a;
    });
}

Json boxes_to_json(const std::vector<RoomBox>& boxes) {
    Json a = Json::array();
    for (const auto& b : boxes) {
        a.push_back({{"category", std::string(category_name(b.category))},
                     {"box", Json::array({b.top_left.x, b.top_left.y, b.bottom_right.x, b.bottom_right.y})}});
    }
    return a;
}

std::vector<RoomBox> boxes_from_json(const Json& j) {
    return guarded("boxes", [&] {
        std::vector<RoomBox> out;
        for (const auto& b : j) {
            const auto& r = b.at("box");
            out.push_back({{r.at(0).get<double>(), r.at(1).get<double>()},
                           {r.at(2).get<double>(), r.at(3).get<double>()},
                           category_of(b.at("category"))});
        }
        return out;
    });
}

Json request_to_json(const GenerationRequest& r) {
    Json j{{"schema", kRequestSchema},
           {"target", std::string(generation_target_name(r.target))},
           {"seed", r.seed},
           {"variant", r.variant},
           {"clamp_partial", r.clamp_partial},
           {"snapshot_ts", r.snapshot_ts},
           {"conditions", conditioning_to_json(r.conditioning)}};
    if (!r.adjacency_variant.empty()) j["adjacency_variant"] = r.adjacency_variant;
    if (!r.partition_variant.empty()) j["partition_variant"] = r.partition_variant;
    if (!r.partial.empty()) {
        Json p = Json::array();
        for (const auto& [k, v] : r.partial) p.push_back(partial_to_json(v));
        j["partial"] = std::move(p);
    }
    if (r.nodes) j["nodes"] = nodes_to_json(*r.nodes);
    return j;
}

GenerationRequest request_from_json(const Json& j) {
    return guarded("request", [&] {
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request must be an object");
        if (j.contains("schema") && j.at("schema").get<std::string>() != kRequestSchema) {
            throw Error(ErrorCode::InvalidArgument, "unsupported request schema");
        }
        GenerationRequest r;
        if (j.contains("target")) r.target = generation_target_from_name(j.at("target").get<std::string>());
        r.seed = j.value("seed", std::uint64_t{0});
        r.variant = j.value("variant", std::string());
        r.adjacency_variant = j.value("adjacency_variant", std::string());
        r.partition_variant = j.value("partition_variant", std::string());
        r.clamp_partial = j.value("clamp_partial", false);
        if (j.contains("snapshot_ts")) r.snapshot_ts = j.at("snapshot_ts").get<std::vector<int>>();
        if (j.contains("conditions")) r.conditioning = conditioning_from_json(j.at("conditions"));
        if (j.contains("partial")) {
            for (const auto& p : j.at("partial")) {
                PartialInput pi = partial_from_json(p);
                const StageKind k = pi.values.kind;
                r.partial[k] = std::move(pi);
            }
        }
        if (j.contains("nodes")) r.nodes = nodes_from_json(j.at("nodes"));
        return r;
    });
}

Json result_to_json(const PipelineResult& r) {
    Json j{{"schema", kResultSchema}, {"seed", r.seed}, {"variant", r.variant}, {"nodes", nodes_to_json(r.nodes)}};
    Json used = Json::object();
    for (const auto& [k, id] : r.variants) used[std::string(stage_kind_name(k))] = id;
    j["variants"] = std::move(used);
    if (r.adjacency) j["adjacency"] = adjacency_to_json(*r.adjacency);
    if (r.plan) j["plan"] = plan_to_json(*r.plan);
    Json ext = Json::object();
    if (!r.boxes.empty()) ext["raw_boxes"] = boxes_to_json(r.boxes);
    if (!r.raw.empty()) {
        Json raw = Json::object();
        for (const auto& [k, t] : r.raw) raw[std::string(stage_kind_name(k))] = stage_tensor_to_json(t);
        ext["raw"] = std::move(raw);
    }
    if (!r.snapshots.empty()) {
        Json snaps = Json::object();
        for (const auto& [k, list] : r.snapshots) {
            Json a = Json::array();
            for (const auto& s : list) a.push_back({{"t", s.t}, {"values", stage_tensor_to_json(s.x)}});
            snaps[std::string(stage_kind_name(k))] = std::move(a);
        }
        ext["snapshots"] = std::move(snaps);
    }
    j["extensions"] = std::move(ext);
    return j;
}

} // namespace vecplan
