// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "vecplan/errors.hpp"

namespace vecplan {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                                  std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                                  std::to_string(b.cols()));
    }
}

void check_step(int t, const NoiseSchedule& s, int lowest) {
    if (t < lowest || t > s.timesteps()) {
        throw Error(ErrorCode::InvalidArgument,
                    "time step " + std::to_string(t) + " outside [" + std::to_string(lowest) + ", " +
                        std::to_string(s.timesteps()) + "]");
    }
}

} // namespace

std::string_view schedule_kind_name(ScheduleKind kind) noexcept {
    return kind == ScheduleKind::Linear ? "linear" : "cosine";
}

ScheduleKind schedule_kind_from_name(std::string_view name) {
    if (name == "linear") return ScheduleKind::Linear;
    if (name == "cosine") return ScheduleKind::Cosine;
    throw Error(ErrorCode::InvalidScheduleParams, "unknown schedule kind '" + std::string(name) + "'");
}

NoiseSchedule NoiseSchedule::from_betas(std::span<const double> betas) {
    if (betas.empty()) {
        throw Error(ErrorCode::InvalidScheduleParams, "schedule needs at least one step");
    }
    NoiseSchedule s;
    s.params.timesteps = static_cast<int>(betas.size());
    s.beta.assign(1, 0.0);
    s.alpha.assign(1, 1.0);
    s.alpha_bar.assign(1, 1.0);
    s.sigma.assign(1, 0.0);
    for (double b : betas) {
        if (!(b > 0.0 && b < 1.0)) {
            throw Error(ErrorCode::InvalidScheduleParams, "beta values must lie in (0, 1)");
        }
        s.beta.push_back(b);
        s.alpha.push_back(1.0 - b);
        s.alpha_bar.push_back(s.alpha_bar.back() * (1.0 - b));
        s.sigma.push_back(std::sqrt(b));
    }
    return s;
}

NoiseSchedule build_schedule(const ScheduleParams& p) {
    if (p.timesteps < 1 || !(p.beta_start > 0.0) || !(p.beta_start <= p.beta_end) || !(p.beta_end < 1.0)) {
        throw Error(ErrorCode::InvalidScheduleParams, "need T >= 1 and 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(p.timesteps));
    if (p.kind == ScheduleKind::Linear) {
        for (int t = 1; t <= p.timesteps; ++t) {
            const double frac = p.timesteps == 1 ? 0.0 : static_cast<double>(t - 1) / (p.timesteps - 1);
            betas[static_cast<std::size_t>(t - 1)] = p.beta_start + (p.beta_end - p.beta_start) * frac;
        }
    } else {
        // Squared-cosine cumulative schedule with offset 0.008, betas capped at 0.999.
        constexpr double offset = 0.008;
        auto f = [&](double t) {
            const double c = std::cos((t / p.timesteps + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
            return c * c;
        };
        for (int t = 1; t <= p.timesteps; ++t) {
            const double b = 1.0 - f(t) / f(t - 1);
            betas[static_cast<std::size_t>(t - 1)] = std::clamp(b, p.beta_start, 0.999);
        }
    }
    NoiseSchedule s = NoiseSchedule::from_betas(betas);
    s.params = p;
    return s;
}

Matrix forward_noise(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& s) {
    check_same_shape(x0, eps, "forward_noise");
    check_step(t, s, 0);
    const double ab = s.alpha_bar[static_cast<std::size_t>(t)];
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Matrix estimate_x0(const Matrix& x_t, const Matrix& eps_hat, int t, const NoiseSchedule& s) {
    check_same_shape(x_t, eps_hat, "estimate_x0");
    check_step(t, s, 0);
    const double ab = s.alpha_bar[static_cast<std::size_t>(t)];
    return (x_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
}

Matrix reverse_step(const Matrix& x_t, const Matrix& eps_hat, int t, const Matrix& z, const NoiseSchedule& s) {
    check_same_shape(x_t, eps_hat, "reverse_step");
    check_same_shape(x_t, z, "reverse_step noise");
    check_step(t, s, 1);
    const auto i = static_cast<std::size_t>(t);
    const double coef = (1.0 - s.alpha[i]) / std::sqrt(1.0 - s.alpha_bar[i]);
    return (x_t - coef * eps_hat) / std::sqrt(s.alpha[i]) + s.sigma[i] * z;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = rng.normal();
        }
    }
    return m;
}

ElementMap element_map(StageKind kind, int room_count) {
    ElementMap m;
    m.kind = kind;
    const int n = std::clamp(room_count, 0, kMaxRooms);
    switch (kind) {
    case StageKind::Nodes:
    case StageKind::Boxes:
        for (int r = 0; r < n; ++r) {
            std::vector<std::pair<int, int>> g;
            for (int c = 0; c < stage_cols(kind); ++c) {
                g.emplace_back(r, c);
            }
            m.groups.push_back(std::move(g));
        }
        break;
    case StageKind::Adjacency:
        m.shared_draw = true;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                m.groups.push_back({{i, j}, {j, i}});
            }
        }
        break;
    default:
        throw Error(ErrorCode::InvalidArgument, "no element map for " + std::string(stage_kind_name(kind)));
    }
    return m;
}

ElementMap slot_map(StageKind kind) {
    return element_map(kind, kMaxRooms);
}

Matrix expand_slot_mask(StageKind kind, std::span<const std::uint8_t> known) {
    const ElementMap slots = slot_map(kind);
    if (known.size() != slots.size()) {
        throw Error(ErrorCode::ShapeMismatch, "known mask has " + std::to_string(known.size()) + " slots, expected " +
                                                  std::to_string(slots.size()));
    }
    Matrix mask = Matrix::Zero(stage_rows(kind), stage_cols(kind));
    for (std::size_t g = 0; g < slots.size(); ++g) {
        if (known[g]) {
            for (const auto& [r, c] : slots.groups[g]) {
                mask(r, c) = 1.0;
            }
        }
    }
    return mask;
}

int confirmed_count(int n, int t, int timesteps) {
    if (n < 1 || timesteps < 1 || t < 0 || t > timesteps) {
        throw Error(ErrorCode::InvalidArgument, "confirmed_count needs n >= 1 and 0 <= t <= T");
    }
    // n (1 - t/T) + 1 = (n (T - t) + T) / T, all terms non-negative.
    const long long num = static_cast<long long>(n) * (timesteps - t) + timesteps;
    return static_cast<int>(std::min<long long>(num / timesteps, n));
}

AlignmentTarget build_alignment_target(const Matrix& x0, int t, int timesteps, const ElementMap& emap, Rng& rng) {
    if (emap.empty()) {
        throw Error(ErrorCode::EmptyElementMap, "alignment target needs at least one element");
    }
    AlignmentTarget a;
    a.x_inter = x0;
    a.n = static_cast<int>(emap.size());
    a.n_confirmed = confirmed_count(a.n, t, timesteps);
    a.n_unconfirmed = a.n - a.n_confirmed;
    a.k = blend_weight(a.n_confirmed, a.n);

    std::vector<int> idx(emap.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first n_unconfirmed entries are a uniform sample.
    for (int i = 0; i < a.n_unconfirmed; ++i) {
        const auto j = static_cast<int>(rng.uniform_int(i, a.n - 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    a.unconfirmed.assign(idx.begin(), idx.begin() + a.n_unconfirmed);
    std::sort(a.unconfirmed.begin(), a.unconfirmed.end());
    for (int g : a.unconfirmed) {
        const auto& group = emap.groups[static_cast<std::size_t>(g)];
        const double shared = emap.shared_draw ? rng.normal() : 0.0;
        for (const auto& [r, c] : group) {
            const double noise = emap.shared_draw ? shared : rng.normal();
            a.x_inter(r, c) = x0(r, c) * a.k + noise * (1.0 - a.k);
        }
    }
    return a;
}

LossTerms total_loss(const Matrix& eps_hat, const Matrix& eps, const Matrix& x_tilde, const Matrix& x_inter,
                     double lambda) {
    check_same_shape(eps_hat, eps, "total_loss");
    check_same_shape(x_tilde, x_inter, "total_loss alignment");
    if (lambda < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be non-negative");
    }
    LossTerms l;
    l.eps_term = (eps_hat - eps).squaredNorm() / static_cast<double>(eps.size());
    l.align_term = x_inter.size() == 0 ? 0.0 : (x_tilde - x_inter).squaredNorm() / static_cast<double>(x_inter.size());
    l.total = l.eps_term + lambda * l.align_term;
    return l;
}

Matrix total_loss_grad(const Matrix& eps_hat, const Matrix& eps, const Matrix& x_tilde, const Matrix& x_inter,
                       double lambda, int t, const NoiseSchedule& s) {
    check_same_shape(eps_hat, eps, "total_loss_grad");
    const double n = static_cast<double>(eps.size());
    Matrix g = (2.0 / n) * (eps_hat - eps);
    if (x_inter.size() != 0 && lambda > 0.0) {
        check_same_shape(x_tilde, x_inter, "total_loss_grad alignment");
        const double ab = s.alpha_bar[static_cast<std::size_t>(t)];
        const double dx_de = -std::sqrt(1.0 - ab) / std::sqrt(ab);
        g += (2.0 * lambda * dx_de / static_cast<double>(x_inter.size())) * (x_tilde - x_inter);
    }
    return g;
}

} // namespace vecplan
