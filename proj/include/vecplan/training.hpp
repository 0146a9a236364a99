// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecplan/conditioning.hpp"
#include "vecplan/denoiser.hpp"
#include "vecplan/diffusion.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/random.hpp"

namespace vecplan {

struct TrainConfig {
    int steps = 20000;
    int batch_size = 64;
    double learning_rate = 1e-3;
    int decay_interval = 10000;
    double decay_factor = 0.1;
    ScheduleParams schedule;
    double lambda = 1.0;
    bool align_enabled = true;
    // The alignment term only applies at t <= align_max_t; 0 means every t.
    int align_max_t = 0;
    std::uint64_t seed = 1;
    int checkpoint_interval = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double weight_decay = 1e-4;
    // Network shape.
    int d_model = 128;
    int layers = 4;
    int heads = 4;
    int ff_ratio = 4;

    void validate() const;
    ModelConfig model_config(StageKind stage, const ConditionSet& conditions) const;
};

// "key = value" lines, '#' comments. Unknown keys are rejected.
TrainConfig parse_train_config(const std::string& text);
std::string format_train_config(const TrainConfig& cfg);
TrainConfig load_train_config(const std::filesystem::path& path);

// lr0 * factor^floor(step / interval)
double lr_at(std::int64_t step, const TrainConfig& cfg);
// Uniform over 1..T.
int sample_timestep(Rng& rng, int timesteps);

// Adam with weight decay applied to the parameters directly.
class AdamW {
public:
    AdamW(std::size_t size, double beta1, double beta2, double epsilon, double weight_decay);

    void step(std::span<double> params, std::span<const double> grad, double lr);
    std::int64_t steps() const noexcept { return t_; }

private:
    double beta1_, beta2_, epsilon_, weight_decay_;
    std::int64_t t_ = 0;
    std::vector<double> m_, v_;
};

struct TrainRecord {
    std::int64_t step = 0;
    double loss = 0.0;
    double eps_loss = 0.0;
    double align_loss = 0.0;
    double learning_rate = 0.0;
    double wall_seconds = 0.0;
};

using TrainLog = std::vector<TrainRecord>;

Json record_to_json(const TrainRecord& r);
TrainRecord record_from_json(const Json& j);

// One ground-truth record as seen by the trainer: the target tensor and the
// conditioning features drawn from the same plan.
struct TrainingExample {
    Matrix x0;
    int room_count = 0;
    Conditioning conditioning;
    ConditionFeatures features;
};

// Throws DatasetStageMismatch for stages the dataset cannot supply.
std::vector<TrainingExample> prepare_examples(const std::vector<VectorFloorPlan>& plans, StageKind stage,
                                              const ConditionSet& conditions);

struct TrainOptions {
    // Written every checkpoint_interval steps and at the end when non-empty.
    std::filesystem::path checkpoint_path;
    // Called after every step, including the failing one before NonFiniteLoss.
    std::function<void(const TrainRecord&)> on_record;
    std::optional<std::vector<double>> initial_params;
};

struct TrainResult {
    Checkpoint checkpoint;
    TrainLog log;
};

TrainResult train_component(const std::vector<VectorFloorPlan>& dataset, StageKind stage,
                            const ConditionSet& conditions, const TrainConfig& cfg, const TrainOptions& options = {});

// Mean squared error of x0 estimates at each t, over held-out plans with
// forward-noised inputs drawn from seed.
std::vector<double> estimate_error(const Denoiser& net, const NoiseSchedule& schedule,
                                   const std::vector<TrainingExample>& heldout, std::span<const int> ts,
                                   std::uint64_t seed);

struct AblationReport {
    std::vector<int> ts;
    std::vector<double> aligned;
    std::vector<double> unaligned;
    TrainLog aligned_log;
    TrainLog unaligned_log;
};

// Trains with and without the alignment term from identical seeds and data
// order, then scores both on heldout.
AblationReport ablation_pair(const std::vector<VectorFloorPlan>& train, const std::vector<VectorFloorPlan>& heldout,
                             StageKind stage, const ConditionSet& conditions, const TrainConfig& cfg,
                             std::vector<int> ts = {50, 20, 10});

} // namespace vecplan
