// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vecplan/conditioning.hpp"
#include "vecplan/denoiser.hpp"
#include "vecplan/diffusion.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/random.hpp"

namespace vecplan {

// A trained network ready for sampling.
struct LoadedVariant {
    std::string id;
    std::filesystem::path path;
    Checkpoint checkpoint;
    Denoiser net;
    NoiseSchedule schedule;

    LoadedVariant(std::string id, Checkpoint checkpoint, std::filesystem::path path = {});
    StageKind stage() const noexcept { return checkpoint.model.stage; }
    const ConditionSet& conditions() const noexcept { return checkpoint.model.conditions; }
};

// Registry file:
//   {"schema": "vecplan.registry/1",
//    "variants": [{"id": "nodes/B", "checkpoint": "nodes_B.ckpt",
//                  "stage": "nodes", "conditions": "B"}, ...]}
// Relative checkpoint paths resolve against the registry file's directory.
inline constexpr const char* kRegistrySchema = "vecplan.registry/1";

class ModelRegistry {
public:
    void add(std::string id, Checkpoint checkpoint, std::filesystem::path path = {});
    // Throws MissingCheckpoint for absent files and ConditioningMismatch when a
    // checkpoint disagrees with its declared stage or conditions.
    static ModelRegistry load(const std::filesystem::path& path);
    Json to_json() const;

    std::shared_ptr<const LoadedVariant> find(std::string_view id) const;
    // Throws MissingCheckpoint naming the available ids.
    std::shared_ptr<const LoadedVariant> get(std::string_view id) const;
    // First variant (by id) of the stage whose conditions cover needed.
    std::shared_ptr<const LoadedVariant> default_for(StageKind stage, const ConditionSet& needed) const;
    std::vector<std::string> ids() const;
    bool empty() const noexcept { return variants_.empty(); }

private:
    std::map<std::string, std::shared_ptr<const LoadedVariant>, std::less<>> variants_;
};

struct Snapshot {
    int t = 0;
    StageTensor x;
};

struct SampleOptions {
    std::vector<int> snapshot_ts;
    // Known groups overwritten with the forward-noised values after each step.
    std::optional<PartialInput> clamp;
};

struct StageSample {
    StageTensor tensor;
    std::vector<Snapshot> snapshots;
};

// Reverse diffusion from x_T ~ N(0, I) seeded by seed; output clipped to [-1, 1].
StageSample sample_stage(const LoadedVariant& variant, const Conditioning& c, std::uint64_t seed,
                         const SampleOptions& options = {});
// Several requests through one batched network pass per step. Each request
// draws from its own seeded stream.
std::vector<StageSample> sample_stage_batch(const LoadedVariant& variant, const std::vector<Conditioning>& cs,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::vector<SampleOptions>& options);

// Masked groups replaced by forward_noise(partial, t, fresh noise); t = 0
// copies the partial values.
StageTensor apply_partial(const StageTensor& x, const StageTensor& partial, std::span<const std::uint8_t> known, int t,
                          const NoiseSchedule& schedule, Rng& rng);

// Snap, clip, overlap removal and gap fill. Room i of the result keeps the
// category of boxes[i]; boxes that vanish are dropped together with their
// adjacency entries. Rooms are returned in canonical order.
struct PostprocessOptions {
    double snap_distance = 0.01;
};
VectorFloorPlan postprocess(const std::vector<RoomBox>& boxes, const Boundary& boundary,
                            const AdjacencyMatrix& adjacency, const PostprocessOptions& options = {});

enum class GenerationTarget { Nodes, Adjacency, Partition, FullPlan };
std::string_view generation_target_name(GenerationTarget t) noexcept;
GenerationTarget generation_target_from_name(std::string_view name);

struct GenerationRequest {
    GenerationTarget target = GenerationTarget::FullPlan;
    // Partial inputs live in partial below, keyed by stage.
    Conditioning conditioning;
    std::map<StageKind, PartialInput> partial;
    std::uint64_t seed = 0;
    // Variant for the requested stage; for full plans, the nodes variant.
    std::string variant;
    std::string adjacency_variant;
    std::string partition_variant;
    bool clamp_partial = false;
    // Steps above a variant's T are skipped.
    std::vector<int> snapshot_ts{50, 20, 10, 0};
    // Single-stage runs: nodes and adjacency the later stages condition on.
    std::optional<std::vector<RoomNode>> nodes;
};

struct PipelineResult {
    std::uint64_t seed = 0;
    std::string variant;
    // Variant id used for each sampled stage.
    std::map<StageKind, std::string> variants;
    std::vector<RoomNode> nodes;
    std::optional<AdjacencyMatrix> adjacency;
    std::vector<RoomBox> boxes;
    std::optional<VectorFloorPlan> plan;
    // Raw model output of each sampled stage.
    std::map<StageKind, StageTensor> raw;
    std::map<StageKind, std::vector<Snapshot>> snapshots;
};

// Stage errors are rethrown with the stage name prefixed to the message.
PipelineResult generate_plan(const GenerationRequest& request, const ModelRegistry& registry);

// Nodes with R_n and R_c applied: categories replaced from R_c and the room
// count forced to R_n by is_room rank. Sizes and locations are clamped to
// [0, 1]. Returns canonical order.
std::vector<RoomNode> pass_through_nodes(const StageTensor& raw, const Conditioning& c);

inline constexpr const char* kResultSchema = "vecplan.result/1";
inline constexpr const char* kRequestSchema = "vecplan.request/1";

Json conditioning_to_json(const Conditioning& c);
Conditioning conditioning_from_json(const Json& j);
Json stage_tensor_to_json(const StageTensor& t);
StageTensor stage_tensor_from_json(const Json& j, StageKind kind);
Json partial_to_json(const PartialInput& p);
// {"stage": "nodes", "values": [[...] x 8], "known": [0|1 per slot]}
PartialInput partial_from_json(const Json& j);
Json nodes_to_json(const std::vector<RoomNode>& nodes);
std::vector<RoomNode> nodes_from_json(const Json& j);
Json adjacency_to_json(const AdjacencyMatrix& a);
// {"rooms": n, "pairs": [[i, j], ...]}
AdjacencyMatrix adjacency_from_json(const Json& j);
Json boxes_to_json(const std::vector<RoomBox>& boxes);
std::vector<RoomBox> boxes_from_json(const Json& j);
Json request_to_json(const GenerationRequest& r);
GenerationRequest request_from_json(const Json& j);
Json result_to_json(const PipelineResult& r);

} // namespace vecplan
