// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecplan/codec.hpp"
#include "vecplan/conditioning.hpp"
#include "vecplan/diffusion.hpp"

namespace vecplan {

struct ModelConfig {
    StageKind stage = StageKind::Nodes;
    ConditionSet conditions;
    int d_model = 128;
    int layers = 4;
    int heads = 4;
    int ff_ratio = 4;
    std::uint64_t seed = 0;
    // Largest time step the network accepts.
    int timesteps = 1000;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Positions of each token group in the sequence; -1 when the group is absent.
struct TokenLayout {
    int boundary = -1;   // 4 tokens
    int entrance = -1;   // 1 token
    int room_count = -1; // 1 token
    int rows = -1;       // 8 tokens, one per room slot
    int null = -1;       // 1 token, only for an unconditioned network
    int stage = -1;      // 8 tokens
    int length = 0;

    static TokenLayout of(const ConditionSet& conditions);
};

// Inputs for one batched forward pass. features[b] must come from featurize()
// under the network's conditioning configuration.
struct DenoiserBatch {
    Matrix x;  // (B * 8) x width, sample b in rows 8b..8b+7
    std::vector<int> t;
    std::vector<const ConditionFeatures*> features;

    int size() const noexcept { return static_cast<int>(t.size()); }
};

class Denoiser {
public:
    struct Cache;

    Denoiser(ModelConfig config, std::vector<double> params);
    ~Denoiser();
    Denoiser(Denoiser&&) noexcept;
    Denoiser& operator=(Denoiser&&) noexcept;

    const ModelConfig& config() const noexcept { return config_; }
    const TokenLayout& layout() const noexcept { return layout_; }
    int width() const noexcept { return width_; }
    std::size_t param_count() const noexcept { return param_count_; }
    std::span<const double> params() const noexcept { return params_; }
    std::span<double> mutable_params() noexcept { return params_; }

    // Condition tokens (learned projections plus position embeddings) for one
    // request, without the time embedding.
    Matrix embed_conditions(const Conditioning& c) const;

    // Noise prediction for a batch; fills cache when given so backward() can run.
    Matrix forward(const DenoiserBatch& batch, Cache* cache = nullptr) const;
    // Adds d(loss)/d(params) into grad given d(loss)/d(output).
    void backward(const Cache& cache, const Matrix& d_out, std::span<double> grad) const;

    StageTensor predict_noise(const StageTensor& x_t, int t, const Conditioning& c) const;

    struct Impl;

private:
    void embed(const DenoiserBatch& batch, Matrix& tokens) const;

    ModelConfig config_;
    TokenLayout layout_;
    int width_ = 0;
    std::unique_ptr<const Impl> impl_;
    std::size_t param_count_ = 0;
    // 64-byte aligned so results do not depend on where the allocator puts it.
    std::vector<double, Eigen::aligned_allocator<double>> params_;
};

// Intermediate activations of one forward pass.
struct Denoiser::Cache {
    struct Layer {
        Matrix x, xhat1, h1, qkv, probs, o, x_mid, xhat2, h2, u, g;
        Eigen::VectorXd rstd1, rstd2;
    };
    DenoiserBatch batch;
    Matrix t_embed, t_pre, t_act;
    std::vector<Layer> layers;
    Matrix xhat_f, h_f;
    Eigen::VectorXd rstd_f;
};

std::size_t param_count(const ModelConfig& config);
// Deterministic in (config, seed).
std::vector<double> init_params(const ModelConfig& config, std::uint64_t seed);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig model;
    ScheduleParams schedule;
    std::int64_t step = 0;
    std::vector<double> params;
};

// Plain-text header followed by the raw little-endian parameter blob; written
// to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws VersionMismatch, CorruptCheckpoint, and ConditioningMismatch when
// expected_stage is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<StageKind> expected_stage = std::nullopt);

} // namespace vecplan
