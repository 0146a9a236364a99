// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecplan/codec.hpp"
#include "vecplan/conditioning.hpp"
#include "vecplan/geometry.hpp"
#include "vecplan/interchange.hpp"

namespace vecplan {

// Per-plan bubble-diagram statistics.
struct PlanStatistics {
    double room_count = 0.0;          // R^n
    double living_connections = 0.0;  // C^l
    double connection_ratio = 0.0;    // C^r = C^l / (R^n - L^n), 0 when undefined
    double living_count = 0.0;        // L^n
    double living_area = 0.0;         // L^a, fraction of the boundary area
};

PlanStatistics statistics_of(const VectorFloorPlan& plan);

// Each field is mean(generated) / mean(reference).
struct StatisticsReport {
    double room_count = 0.0;
    double living_connections = 0.0;
    double connection_ratio = 0.0;
    double living_count = 0.0;
    double living_area = 0.0;
};

// Throws UndefinedRatio for empty sets or a zero reference mean.
StatisticsReport plan_statistics(std::span<const VectorFloorPlan> generated, std::span<const VectorFloorPlan> reference);

// What a generator produced for one request, in canonical order.
struct GeneratedAttributes {
    std::vector<RoomNode> nodes;
    std::optional<AdjacencyMatrix> adjacency;
};

GeneratedAttributes attributes_of(const VectorFloorPlan& plan);
// Nodes read straight from a raw nodes tensor, without pass-through.
GeneratedAttributes attributes_of(const StageTensor& raw_nodes);

// Mean absolute error per condition block; blocks absent from every request
// are left empty.
//   R_n:   |rooms - R_n|
//   R_c:   mean over 8 slots of the category codes, both sides sorted, 0 for
//          empty slots
//   R_sl:  mean over 8x3 of size and location, rows paired in canonical order
//   R_a:   mean over the 8x8 adjacency entries
struct ComplianceReport {
    std::optional<double> room_count;
    std::optional<double> categories;
    std::optional<double> sizes_locations;
    std::optional<double> adjacency;
    std::size_t samples = 0;
};

// Throws ShapeMismatch when the two lists differ in length.
ComplianceReport compliance_mae(std::span<const GeneratedAttributes> outputs, std::span<const Conditioning> conditions);

using CategoryScores = std::array<double, kCategoryCount>;

// Union of the rooms of one category.
Region category_region(const VectorFloorPlan& plan, RoomCategory category);

// variants[s] holds the K >= 2 plans generated for sample s. Throws
// InvalidArgument when a sample has fewer than two variants.
CategoryScores diversity_avg(const std::vector<std::vector<VectorFloorPlan>>& variants);

// Mean per-category IoU between generated[i] and references[i].
CategoryScores coverage(std::span<const VectorFloorPlan> generated, std::span<const VectorFloorPlan> references);

// Index in pool of the plan whose boundary overlaps plan's boundary most
// (IoU of the outlines, first index on ties).
std::size_t nearest_by_boundary(const VectorFloorPlan& plan, std::span<const VectorFloorPlan> pool);

inline constexpr int kFeatureCount = 15;
using FeatureVector = std::array<double, kFeatureCount>;

// room count; 6 per-category counts; 6 per-category area fractions;
// adjacency pair count; mean bounding-box aspect ratio (long side / short side).
FeatureVector plan_features(const VectorFloorPlan& plan);

inline constexpr std::size_t kMinFrechetSamples = 16;

// Gaussian Frechet distance between the feature sets. Not comparable to
// Inception-based FID values. Throws TooFewSamples below 16 plans per side.
double frechet_distance(std::span<const FeatureVector> a, std::span<const FeatureVector> b);
double frechet_feature_distance(std::span<const VectorFloorPlan> a, std::span<const VectorFloorPlan> b);

Json statistics_to_json(const StatisticsReport& r);
Json compliance_to_json(const ComplianceReport& r);
Json category_scores_to_json(const CategoryScores& s);

std::string format_statistics(const StatisticsReport& r);
std::string format_compliance(const ComplianceReport& r);
std::string format_category_scores(const std::string& title, const CategoryScores& s);

} // namespace vecplan
