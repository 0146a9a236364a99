// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vecplan/geometry.hpp"
#include "vecplan/interchange.hpp"

namespace vecplan {

// Procedural stand-in for a licensed floor-plan corpus. Each sample is a
// rectangle with corner notches cut into rooms by recursive guillotine splits.
struct GeneratorParams {
    std::uint64_t seed = 1;
    int min_rooms = 3;
    int max_rooms = 8;
    int min_notches = 0;
    int max_notches = 3;
    // Rooms sharing a wall segment longer than this are adjacent.
    double adjacency_threshold = 0.03;
    double storage_probability = 0.1;
    int max_attempts = 100;

    void validate() const;
};

inline constexpr double kGridStep = 1.0 / 256.0;

Json params_to_json(const GeneratorParams& p);
GeneratorParams params_from_json(const Json& j);

// Deterministic in (params, index). Throws GenerationExhausted.
VectorFloorPlan generate_sample(const GeneratorParams& params, std::uint64_t index);
std::vector<VectorFloorPlan> generate_dataset(const GeneratorParams& params, std::size_t count,
                                              std::uint64_t first_index = 0);

// Pairs of rooms sharing a wall segment longer than threshold.
AdjacencyMatrix adjacency_from_geometry(const std::vector<Room>& rooms, double threshold);

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// 0.7 / 0.15 / 0.15 of a seeded shuffle.
DatasetSplit split_dataset(std::size_t count, std::uint64_t seed, double train_ratio = 0.7,
                           double validation_ratio = 0.15);

std::filesystem::path manifest_path(const std::filesystem::path& dataset);
void save_dataset(const std::filesystem::path& path, const std::vector<VectorFloorPlan>& plans,
                  const GeneratorParams& params);
std::vector<VectorFloorPlan> load_dataset(const std::filesystem::path& path);

template <class T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& indices) {
    std::vector<T> out;
    out.reserve(indices.size());
    for (auto i : indices) {
        out.push_back(items[i]);
    }
    return out;
}

} // namespace vecplan
