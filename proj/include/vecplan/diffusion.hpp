// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "vecplan/codec.hpp"
#include "vecplan/random.hpp"

namespace vecplan {

enum class ScheduleKind { Linear, Cosine };

std::string_view schedule_kind_name(ScheduleKind kind) noexcept;
ScheduleKind schedule_kind_from_name(std::string_view name);

struct ScheduleParams {
    ScheduleKind kind = ScheduleKind::Linear;
    int timesteps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

// Index t runs 0..T. Entry 0 holds the t = 0 convention: alpha_bar = 1,
// beta = sigma = 0.
struct NoiseSchedule {
    ScheduleParams params;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> sigma;

    int timesteps() const noexcept { return static_cast<int>(beta.size()) - 1; }

    // Arbitrary per-step variances beta_1..beta_T; sigma_t = sqrt(beta_t).
    static NoiseSchedule from_betas(std::span<const double> betas);
};

NoiseSchedule build_schedule(const ScheduleParams& params);
inline NoiseSchedule build_schedule(ScheduleKind kind, int timesteps, double beta_start, double beta_end) {
    return build_schedule(ScheduleParams{kind, timesteps, beta_start, beta_end});
}

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Matrix forward_noise(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& s);
// x0 ~= (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
Matrix estimate_x0(const Matrix& x_t, const Matrix& eps_hat, int t, const NoiseSchedule& s);
// x_{t-1} = (x_t - (1 - alpha_t) / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t) + sigma_t z
Matrix reverse_step(const Matrix& x_t, const Matrix& eps_hat, int t, const Matrix& z, const NoiseSchedule& s);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Groups of tensor entries that together form one design element.
struct ElementMap {
    StageKind kind = StageKind::Nodes;
    std::vector<std::vector<std::pair<int, int>>> groups;
    // Symmetric adjacency tuples share a single noise draw.
    bool shared_draw = false;

    std::size_t size() const noexcept { return groups.size(); }
    bool empty() const noexcept { return groups.empty(); }
};

// Elements of a plan with room_count rooms: one row per room for nodes and
// boxes, one {(i,j),(j,i)} pair per room tuple i < j for adjacency.
ElementMap element_map(StageKind kind, int room_count);
// All 8 row slots (nodes, boxes) or all 28 pair slots (adjacency),
// independent of room count. Partial-input masks index these slots.
ElementMap slot_map(StageKind kind);
// Entry-wise 0/1 mask for the slots flagged in known.
Matrix expand_slot_mask(StageKind kind, std::span<const std::uint8_t> known);

// min(floor(n (1 - t/T) + 1), n) in exact integer arithmetic.
int confirmed_count(int n, int t, int timesteps);
inline double blend_weight(int confirmed, int n) noexcept {
    return (1.0 + static_cast<double>(confirmed) / n) / 2.0;
}

struct AlignmentTarget {
    Matrix x_inter;
    int n = 0;
    int n_confirmed = 0;
    int n_unconfirmed = 0;
    double k = 1.0;
    std::vector<int> unconfirmed;  // group indices into the element map
};

// Starts from x0 and blends n_unconfirmed uniformly chosen element groups
// with fresh N(0,1) noise: x0 * k + noise * (1 - k).
AlignmentTarget build_alignment_target(const Matrix& x0, int t, int timesteps, const ElementMap& emap, Rng& rng);

struct LossTerms {
    double total = 0.0;
    double eps_term = 0.0;
    double align_term = 0.0;
};

// mean((eps_hat - eps)^2) + lambda * mean((x_tilde - x_inter)^2)
LossTerms total_loss(const Matrix& eps_hat, const Matrix& eps, const Matrix& x_tilde, const Matrix& x_inter,
                     double lambda);

// Gradient of total_loss with respect to eps_hat, where x_tilde is
// estimate_x0(x_t, eps_hat, t, s). Pass an empty x_inter to drop the
// alignment term.
Matrix total_loss_grad(const Matrix& eps_hat, const Matrix& eps, const Matrix& x_tilde, const Matrix& x_inter,
                       double lambda, int t, const NoiseSchedule& s);

} // namespace vecplan
