// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/denoiser.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "vecplan/errors.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/random.hpp"

namespace vecplan {

namespace {

using MapC = Eigen::Map<const Matrix>;
using MapM = Eigen::Map<Matrix>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

constexpr double kLayerNormEps = 1e-5;

enum class Init { Weight, Embedding, Zeros, Ones };

struct Slot {
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
    Init init = Init::Weight;
};

// Linear projection of one input group, with a learned stand-in for when the
// group is missing from a request.
struct Projection {
    int w = -1;
    int b = -1;
    int null = -1;
};

struct LayerIds {
    int ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_1, b_1, w_2, b_2;
};

void layer_norm(const Matrix& x, const MapC& gamma, const MapC& beta, Matrix& xhat, Eigen::VectorXd& rstd,
                Matrix& y) {
    const auto n = x.rows();
    const auto d = static_cast<double>(x.cols());
    xhat.resize(x.rows(), x.cols());
    rstd.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mu = x.row(r).sum() / d;
        const double var = (x.row(r).array() - mu).square().sum() / d;
        rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(r) = (x.row(r).array() - mu) * rstd(r);
    }
    y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
}

// Returns dx; accumulates into dgamma, dbeta.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Eigen::VectorXd& rstd, const MapC& gamma,
                           MapM dgamma, MapM dbeta) {
    dgamma.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
    dbeta.row(0) += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
    const double d = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double m1 = dxhat.row(r).sum() / d;
        const double m2 = dxhat.row(r).dot(xhat.row(r)) / d;
        dx.row(r) = rstd(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
    }
    return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

Matrix gelu(const Matrix& u) {
    return u.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + 0.044715 * v * v * v))); });
}

Matrix gelu_grad(const Matrix& u) {
    return u.unaryExpr([](double v) {
        const double th = std::tanh(kGeluC * (v + 0.044715 * v * v * v));
        return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * v * v);
    });
}

double sigmoid(double v) {
    return 1.0 / (1.0 + std::exp(-v));
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

void ModelConfig::validate() const {
    if (stage_cols(stage) <= 0) {
        throw Error(ErrorCode::InvalidArgument, "unknown stage kind");
    }
    if (d_model < 2 || d_model % 2 != 0 || layers < 1 || heads < 1 || d_model % heads != 0 || ff_ratio < 1 ||
        timesteps < 1) {
        throw Error(ErrorCode::InvalidArgument,
                    "model config needs an even d_model divisible by heads and positive layer, ratio and step counts");
    }
}

TokenLayout TokenLayout::of(const ConditionSet& c) {
    TokenLayout l;
    int at = 0;
    if (c.boundary) {
        l.boundary = at;
        at += ConditionFeatures::kBoundaryTokens;
        l.entrance = at++;
    }
    if (c.room_count) {
        l.room_count = at++;
    }
    if (c.has_row_blocks()) {
        l.rows = at;
        at += kMaxRooms;
    }
    if (at == 0) {
        l.null = at++;
    }
    l.stage = at;
    l.length = at + kMaxRooms;
    return l;
}

struct Denoiser::Impl {
    int d = 0;
    int dh = 0;
    int ff = 0;
    int width = 0;
    TokenLayout layout;
    std::vector<Slot> slots;
    std::size_t count = 0;

    Projection boundary, entrance, room_count, categories, sizes_locations, adjacency, partial;
    int null_token = -1;
    int pos = -1;
    int w_in = -1, b_in = -1;
    int t_w1 = -1, t_b1 = -1, t_w2 = -1, t_b2 = -1;
    std::vector<LayerIds> layers;
    int lnf_g = -1, lnf_b = -1, w_out = -1, b_out = -1;

    explicit Impl(const ModelConfig& cfg) {
        cfg.validate();
        d = cfg.d_model;
        dh = d / cfg.heads;
        ff = d * cfg.ff_ratio;
        width = stage_cols(cfg.stage);
        layout = TokenLayout::of(cfg.conditions);
        const auto& c = cfg.conditions;
        if (c.boundary) {
            boundary = projection(ConditionFeatures::kBoundaryWidth);
            entrance = projection(8);
        }
        if (c.room_count) room_count = projection(kMaxRooms);
        if (c.categories) categories = projection(ConditionFeatures::kCategoryWidth);
        if (c.sizes_locations) sizes_locations = projection(ConditionFeatures::kSizeLocationWidth);
        if (c.adjacency) adjacency = projection(kMaxRooms);
        if (c.partial) partial = projection(2 * width);
        if (layout.null >= 0) null_token = add(1, d, Init::Embedding);
        pos = add(layout.length, d, Init::Embedding);
        w_in = add(width, d, Init::Weight);
        b_in = add(1, d, Init::Zeros);
        t_w1 = add(d, d, Init::Weight);
        t_b1 = add(1, d, Init::Zeros);
        t_w2 = add(d, d, Init::Weight);
        t_b2 = add(1, d, Init::Zeros);
        for (int i = 0; i < cfg.layers; ++i) {
            LayerIds l{};
            l.ln1_g = add(1, d, Init::Ones);
            l.ln1_b = add(1, d, Init::Zeros);
            l.w_qkv = add(d, 3 * d, Init::Weight);
            l.b_qkv = add(1, 3 * d, Init::Zeros);
            l.w_o = add(d, d, Init::Weight);
            l.b_o = add(1, d, Init::Zeros);
            l.ln2_g = add(1, d, Init::Ones);
            l.ln2_b = add(1, d, Init::Zeros);
            l.w_1 = add(d, ff, Init::Weight);
            l.b_1 = add(1, ff, Init::Zeros);
            l.w_2 = add(ff, d, Init::Weight);
            l.b_2 = add(1, d, Init::Zeros);
            layers.push_back(l);
        }
        lnf_g = add(1, d, Init::Ones);
        lnf_b = add(1, d, Init::Zeros);
        w_out = add(d, width, Init::Embedding);
        b_out = add(1, width, Init::Zeros);
    }

    // Block offsets are padded to whole cache lines so vectorized reductions
    // see the same alignment on every run; padding entries stay zero.
    int add(int rows, int cols, Init init) {
        slots.push_back({rows, cols, count, init});
        count += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
        count = (count + 7) / 8 * 8;
        return static_cast<int>(slots.size()) - 1;
    }

    Projection projection(int in) {
        Projection p;
        p.w = add(in, d, Init::Weight);
        p.b = add(1, d, Init::Zeros);
        p.null = add(1, d, Init::Embedding);
        return p;
    }

    MapC get(std::span<const double> p, int id) const {
        const Slot& s = slots[static_cast<std::size_t>(id)];
        return MapC(p.data() + s.offset, s.rows, s.cols);
    }
    MapM get(std::span<double> p, int id) const {
        const Slot& s = slots[static_cast<std::size_t>(id)];
        return MapM(p.data() + s.offset, s.rows, s.cols);
    }
};

std::size_t param_count(const ModelConfig& config) {
    return Denoiser::Impl(config).count;
}

std::vector<double> init_params(const ModelConfig& config, std::uint64_t seed) {
    const Denoiser::Impl impl(config);
    std::vector<double> p(impl.count, 0.0);
    Rng rng(mix_seed(seed, 0x494E4954ULL));
    for (const Slot& s : impl.slots) {
        const std::size_t n = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
        double* out = p.data() + s.offset;
        switch (s.init) {
        case Init::Weight: {
            const double sd = 1.0 / std::sqrt(static_cast<double>(s.rows));
            for (std::size_t i = 0; i < n; ++i) out[i] = sd * rng.normal();
            break;
        }
        case Init::Embedding:
            for (std::size_t i = 0; i < n; ++i) out[i] = 0.02 * rng.normal();
            break;
        case Init::Ones:
            std::fill(out, out + n, 1.0);
            break;
        case Init::Zeros:
            break;
        }
    }
    return p;
}

Denoiser::Denoiser(ModelConfig config, std::vector<double> params)
    : config_(std::move(config)), params_(params.begin(), params.end()) {
    auto impl = std::make_unique<Impl>(config_);
    layout_ = impl->layout;
    width_ = impl->width;
    param_count_ = impl->count;
    impl_ = std::move(impl);
    if (params_.size() != param_count_) {
        throw Error(ErrorCode::ShapeMismatch, "parameter vector has " + std::to_string(params_.size()) +
                                                  " entries, config needs " + std::to_string(param_count_));
    }
}

Denoiser::~Denoiser() = default;
Denoiser::Denoiser(Denoiser&&) noexcept = default;
Denoiser& Denoiser::operator=(Denoiser&&) noexcept = default;

void Denoiser::embed(const DenoiserBatch& batch, Matrix& tokens) const {
    const Impl& m = *impl_;
    const std::span<const double> p = params_;
    const int L = layout_.length;
    const int B = batch.size();
    tokens.setZero(static_cast<Eigen::Index>(B) * L, m.d);

    auto project = [&](const Projection& proj, bool present, const Matrix& feat, Eigen::Index row, int n) {
        auto dst = tokens.middleRows(row, n);
        if (present) {
            dst.noalias() += feat * m.get(p, proj.w);
            dst.rowwise() += m.get(p, proj.b).row(0);
        } else {
            dst.rowwise() += m.get(p, proj.null).row(0);
        }
    };

    for (int b = 0; b < B; ++b) {
        const ConditionFeatures& f = *batch.features[static_cast<std::size_t>(b)];
        const Eigen::Index base = static_cast<Eigen::Index>(b) * L;
        if (layout_.boundary >= 0) {
            project(m.boundary, f.has_boundary, f.boundary, base + layout_.boundary, ConditionFeatures::kBoundaryTokens);
            project(m.entrance, f.has_boundary, f.entrance, base + layout_.entrance, 1);
        }
        if (layout_.room_count >= 0) {
            project(m.room_count, f.has_room_count, f.room_count, base + layout_.room_count, 1);
        }
        if (layout_.rows >= 0) {
            const auto r0 = base + layout_.rows;
            if (m.categories.w >= 0) project(m.categories, f.has_categories, f.categories, r0, kMaxRooms);
            if (m.sizes_locations.w >= 0)
                project(m.sizes_locations, f.has_sizes_locations, f.sizes_locations, r0, kMaxRooms);
            if (m.adjacency.w >= 0) project(m.adjacency, f.has_adjacency, f.adjacency, r0, kMaxRooms);
            if (m.partial.w >= 0) project(m.partial, f.has_partial, f.partial, r0, kMaxRooms);
        }
        if (layout_.null >= 0) {
            tokens.row(base + layout_.null) += m.get(p, m.null_token).row(0);
        }
        auto stage = tokens.middleRows(base + layout_.stage, kMaxRooms);
        stage.noalias() += batch.x.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms) * m.get(p, m.w_in);
        stage.rowwise() += m.get(p, m.b_in).row(0);
        tokens.middleRows(base, L) += m.get(p, m.pos);
    }
}

Matrix Denoiser::embed_conditions(const Conditioning& c) const {
    const ConditionFeatures f = featurize(c, config_.conditions, config_.stage);
    DenoiserBatch batch;
    batch.x = Matrix::Zero(kMaxRooms, width_);
    batch.t = {0};
    batch.features = {&f};
    Matrix tokens;
    embed(batch, tokens);
    return tokens.topRows(layout_.stage);
}

Matrix Denoiser::forward(const DenoiserBatch& batch, Cache* cache) const {
    const Impl& m = *impl_;
    const std::span<const double> p = params_;
    const int B = batch.size();
    const int L = layout_.length;
    const int d = m.d;
    const int H = config_.heads;
    const int dh = m.dh;
    if (B == 0 || batch.features.size() != static_cast<std::size_t>(B) ||
        batch.x.rows() != static_cast<Eigen::Index>(B) * kMaxRooms || batch.x.cols() != width_) {
        throw Error(ErrorCode::ShapeMismatch, "denoiser batch shape does not match the network");
    }
    for (int t : batch.t) {
        if (t < 0 || t > config_.timesteps) {
            throw Error(ErrorCode::InvalidArgument, "time step " + std::to_string(t) + " outside the network range");
        }
    }

    // Sinusoidal time embedding through a two-layer SiLU projection.
    Matrix temb(B, d);
    const int half = d / 2;
    for (int b = 0; b < B; ++b) {
        const double t = batch.t[static_cast<std::size_t>(b)];
        for (int i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * i / half);
            temb(b, i) = std::sin(t * freq);
            temb(b, i + half) = std::cos(t * freq);
        }
    }
    Matrix t_pre = temb * m.get(p, m.t_w1);
    t_pre.rowwise() += m.get(p, m.t_b1).row(0);
    const Matrix t_act = t_pre.unaryExpr([](double v) { return v * sigmoid(v); });
    Matrix tau = t_act * m.get(p, m.t_w2);
    tau.rowwise() += m.get(p, m.t_b2).row(0);

    Matrix x;
    embed(batch, x);
    for (int b = 0; b < B; ++b) {
        x.middleRows(static_cast<Eigen::Index>(b) * L, L).rowwise() += tau.row(b);
    }

    if (cache) {
        cache->batch = batch;
        cache->t_embed = temb;
        cache->t_pre = t_pre;
        cache->t_act = t_act;
        cache->layers.assign(m.layers.size(), {});
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix xhat, h, qkv, probs, o, attn, x_mid, xhat2, h2, u, g;
    Eigen::VectorXd rstd1, rstd2;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const LayerIds& l = m.layers[li];
        layer_norm(x, m.get(p, l.ln1_g), m.get(p, l.ln1_b), xhat, rstd1, h);
        qkv.noalias() = h * m.get(p, l.w_qkv);
        qkv.rowwise() += m.get(p, l.b_qkv).row(0);
        probs.resize(static_cast<Eigen::Index>(B) * H * L, L);
        o.resize(x.rows(), d);
        for (int b = 0; b < B; ++b) {
            const Eigen::Index r0 = static_cast<Eigen::Index>(b) * L;
            for (int hh = 0; hh < H; ++hh) {
                const auto q = qkv.block(r0, hh * dh, L, dh);
                const auto k = qkv.block(r0, d + hh * dh, L, dh);
                const auto v = qkv.block(r0, 2 * d + hh * dh, L, dh);
                auto pr = probs.middleRows((static_cast<Eigen::Index>(b) * H + hh) * L, L);
                pr.noalias() = (q * k.transpose()) * scale;
                for (int r = 0; r < L; ++r) {
                    const double mx = pr.row(r).maxCoeff();
                    pr.row(r) = (pr.row(r).array() - mx).exp();
                    pr.row(r) /= pr.row(r).sum();
                }
                o.block(r0, hh * dh, L, dh).noalias() = pr * v;
            }
        }
        attn.noalias() = o * m.get(p, l.w_o);
        attn.rowwise() += m.get(p, l.b_o).row(0);
        x_mid = x + attn;
        layer_norm(x_mid, m.get(p, l.ln2_g), m.get(p, l.ln2_b), xhat2, rstd2, h2);
        u.noalias() = h2 * m.get(p, l.w_1);
        u.rowwise() += m.get(p, l.b_1).row(0);
        g = gelu(u);
        Matrix next = x_mid;
        next.noalias() += g * m.get(p, l.w_2);
        next.rowwise() += m.get(p, l.b_2).row(0);
        if (cache) {
            auto& c = cache->layers[li];
            c.x = std::move(x);
            c.xhat1 = xhat;
            c.rstd1 = rstd1;
            c.h1 = h;
            c.qkv = qkv;
            c.probs = probs;
            c.o = o;
            c.x_mid = x_mid;
            c.xhat2 = xhat2;
            c.rstd2 = rstd2;
            c.h2 = h2;
            c.u = u;
            c.g = g;
        }
        x = std::move(next);
    }

    Matrix xs(static_cast<Eigen::Index>(B) * kMaxRooms, d);
    for (int b = 0; b < B; ++b) {
        xs.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms) =
            x.middleRows(static_cast<Eigen::Index>(b) * L + layout_.stage, kMaxRooms);
    }
    Matrix xhat_f, h_f;
    Eigen::VectorXd rstd_f;
    layer_norm(xs, m.get(p, m.lnf_g), m.get(p, m.lnf_b), xhat_f, rstd_f, h_f);
    Matrix out = h_f * m.get(p, m.w_out);
    out.rowwise() += m.get(p, m.b_out).row(0);
    if (cache) {
        cache->xhat_f = std::move(xhat_f);
        cache->rstd_f = std::move(rstd_f);
        cache->h_f = std::move(h_f);
    }
    return out;
}

void Denoiser::backward(const Cache& cache, const Matrix& d_out, std::span<double> grad) const {
    const Impl& m = *impl_;
    const std::span<const double> p = params_;
    const DenoiserBatch& batch = cache.batch;
    const int B = batch.size();
    const int L = layout_.length;
    const int d = m.d;
    const int H = config_.heads;
    const int dh = m.dh;
    if (grad.size() != param_count_) {
        throw Error(ErrorCode::ShapeMismatch, "gradient buffer does not match the parameter count");
    }
    if (d_out.rows() != batch.x.rows() || d_out.cols() != width_) {
        throw Error(ErrorCode::ShapeMismatch, "output gradient shape does not match the batch");
    }

    m.get(grad, m.w_out).noalias() += cache.h_f.transpose() * d_out;
    m.get(grad, m.b_out).row(0) += d_out.colwise().sum();
    const Matrix dh_f = d_out * m.get(p, m.w_out).transpose();
    const Matrix dxs = layer_norm_backward(dh_f, cache.xhat_f, cache.rstd_f, m.get(p, m.lnf_g), m.get(grad, m.lnf_g),
                                           m.get(grad, m.lnf_b));
    Matrix dx = Matrix::Zero(static_cast<Eigen::Index>(B) * L, d);
    for (int b = 0; b < B; ++b) {
        dx.middleRows(static_cast<Eigen::Index>(b) * L + layout_.stage, kMaxRooms) =
            dxs.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t li = m.layers.size(); li-- > 0;) {
        const LayerIds& l = m.layers[li];
        const auto& c = cache.layers[li];
        // Feed-forward block.
        m.get(grad, l.w_2).noalias() += c.g.transpose() * dx;
        m.get(grad, l.b_2).row(0) += dx.colwise().sum();
        const Matrix du = (dx * m.get(p, l.w_2).transpose()).cwiseProduct(gelu_grad(c.u));
        m.get(grad, l.w_1).noalias() += c.h2.transpose() * du;
        m.get(grad, l.b_1).row(0) += du.colwise().sum();
        const Matrix dh2 = du * m.get(p, l.w_1).transpose();
        Matrix dx_mid = dx + layer_norm_backward(dh2, c.xhat2, c.rstd2, m.get(p, l.ln2_g), m.get(grad, l.ln2_g),
                                                 m.get(grad, l.ln2_b));
        // Attention block.
        m.get(grad, l.w_o).noalias() += c.o.transpose() * dx_mid;
        m.get(grad, l.b_o).row(0) += dx_mid.colwise().sum();
        const Matrix d_o = dx_mid * m.get(p, l.w_o).transpose();
        Matrix dqkv(c.qkv.rows(), c.qkv.cols());
        Matrix dp(L, L), ds(L, L);
        for (int b = 0; b < B; ++b) {
            const Eigen::Index r0 = static_cast<Eigen::Index>(b) * L;
            for (int hh = 0; hh < H; ++hh) {
                const auto q = c.qkv.block(r0, hh * dh, L, dh);
                const auto k = c.qkv.block(r0, d + hh * dh, L, dh);
                const auto v = c.qkv.block(r0, 2 * d + hh * dh, L, dh);
                const auto pr = c.probs.middleRows((static_cast<Eigen::Index>(b) * H + hh) * L, L);
                const auto dob = d_o.block(r0, hh * dh, L, dh);
                dp.noalias() = dob * v.transpose();
                dqkv.block(r0, 2 * d + hh * dh, L, dh).noalias() = pr.transpose() * dob;
                const Eigen::VectorXd rs = (dp.array() * pr.array()).rowwise().sum();
                ds = pr.array() * (dp.array().colwise() - rs.array());
                dqkv.block(r0, hh * dh, L, dh).noalias() = (ds * k) * scale;
                dqkv.block(r0, d + hh * dh, L, dh).noalias() = (ds.transpose() * q) * scale;
            }
        }
        m.get(grad, l.w_qkv).noalias() += c.h1.transpose() * dqkv;
        m.get(grad, l.b_qkv).row(0) += dqkv.colwise().sum();
        const Matrix dh1 = dqkv * m.get(p, l.w_qkv).transpose();
        dx = dx_mid + layer_norm_backward(dh1, c.xhat1, c.rstd1, m.get(p, l.ln1_g), m.get(grad, l.ln1_g),
                                          m.get(grad, l.ln1_b));
    }

    // Embedding and time projection.
    Matrix dtau = Matrix::Zero(B, d);
    auto project_back = [&](const Projection& proj, bool present, const Matrix& feat, Eigen::Index row, int n) {
        const auto src = dx.middleRows(row, n);
        if (present) {
            m.get(grad, proj.w).noalias() += feat.transpose() * src;
            m.get(grad, proj.b).row(0) += src.colwise().sum();
        } else {
            m.get(grad, proj.null).row(0) += src.colwise().sum();
        }
    };
    auto dpos = m.get(grad, m.pos);
    for (int b = 0; b < B; ++b) {
        const ConditionFeatures& f = *batch.features[static_cast<std::size_t>(b)];
        const Eigen::Index base = static_cast<Eigen::Index>(b) * L;
        const auto blk = dx.middleRows(base, L);
        dpos += blk;
        dtau.row(b) = blk.colwise().sum();
        if (layout_.boundary >= 0) {
            project_back(m.boundary, f.has_boundary, f.boundary, base + layout_.boundary,
                         ConditionFeatures::kBoundaryTokens);
            project_back(m.entrance, f.has_boundary, f.entrance, base + layout_.entrance, 1);
        }
        if (layout_.room_count >= 0) {
            project_back(m.room_count, f.has_room_count, f.room_count, base + layout_.room_count, 1);
        }
        if (layout_.rows >= 0) {
            const auto r0 = base + layout_.rows;
            if (m.categories.w >= 0) project_back(m.categories, f.has_categories, f.categories, r0, kMaxRooms);
            if (m.sizes_locations.w >= 0)
                project_back(m.sizes_locations, f.has_sizes_locations, f.sizes_locations, r0, kMaxRooms);
            if (m.adjacency.w >= 0) project_back(m.adjacency, f.has_adjacency, f.adjacency, r0, kMaxRooms);
            if (m.partial.w >= 0) project_back(m.partial, f.has_partial, f.partial, r0, kMaxRooms);
        }
        if (layout_.null >= 0) {
            m.get(grad, m.null_token).row(0) += dx.row(base + layout_.null);
        }
        const auto ds = dx.middleRows(base + layout_.stage, kMaxRooms);
        m.get(grad, m.w_in).noalias() +=
            batch.x.middleRows(static_cast<Eigen::Index>(b) * kMaxRooms, kMaxRooms).transpose() * ds;
        m.get(grad, m.b_in).row(0) += ds.colwise().sum();
    }
    m.get(grad, m.t_w2).noalias() += cache.t_act.transpose() * dtau;
    m.get(grad, m.t_b2).row(0) += dtau.colwise().sum();
    const Matrix dact = dtau * m.get(p, m.t_w2).transpose();
    const Matrix dpre = dact.cwiseProduct(cache.t_pre.unaryExpr([](double v) {
        const double s = sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
    }));
    m.get(grad, m.t_w1).noalias() += cache.t_embed.transpose() * dpre;
    m.get(grad, m.t_b1).row(0) += dpre.colwise().sum();
}

StageTensor Denoiser::predict_noise(const StageTensor& x_t, int t, const Conditioning& c) const {
    if (x_t.kind != config_.stage) {
        throw Error(ErrorCode::ShapeMismatch, "network predicts " + std::string(stage_kind_name(config_.stage)) +
                                                  " tensors, got " + std::string(stage_kind_name(x_t.kind)));
    }
    x_t.check_shape();
    if (t < 1 || t > config_.timesteps) {
        throw Error(ErrorCode::InvalidArgument, "time step must be in 1..T");
    }
    const ConditionFeatures f = featurize(c, config_.conditions, config_.stage);
    DenoiserBatch batch;
    batch.x = x_t.values;
    batch.t = {t};
    batch.features = {&f};
    Matrix out = forward(batch);
    if (!out.allFinite()) {
        throw Error(ErrorCode::NonFiniteOutput, "denoiser produced non-finite values");
    }
    return StageTensor(config_.stage, std::move(out));
}

// Checkpoint files.

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    static_assert(std::endian::native == std::endian::little, "checkpoint blobs are little-endian");
    const Denoiser::Impl impl(ck.model);
    if (ck.params.size() != impl.count) {
        throw Error(ErrorCode::ShapeMismatch, "checkpoint parameters do not match the model config");
    }
    const std::size_t bytes = ck.params.size() * sizeof(double);
    std::ostringstream out;
    out << "vecplan-checkpoint\n"
        << "version " << kCheckpointVersion << '\n'
        << "stage " << stage_kind_name(ck.model.stage) << '\n'
        << "conditions " << ck.model.conditions.to_string() << '\n'
        << "d_model " << ck.model.d_model << '\n'
        << "layers " << ck.model.layers << '\n'
        << "heads " << ck.model.heads << '\n'
        << "ff_ratio " << ck.model.ff_ratio << '\n'
        << "seed " << ck.model.seed << '\n'
        << "timesteps " << ck.model.timesteps << '\n'
        << "schedule " << schedule_kind_name(ck.schedule.kind) << '\n'
        << "schedule_timesteps " << ck.schedule.timesteps << '\n';
    out.precision(17);
    out << "beta_start " << ck.schedule.beta_start << '\n'
        << "beta_end " << ck.schedule.beta_end << '\n'
        << "step " << ck.step << '\n'
        << "param_count " << ck.params.size() << '\n'
        << "checksum " << fnv1a(ck.params.data(), bytes) << '\n'
        << "end\n";
    std::string data = out.str();
    const auto header = data.size();
    data.resize(header + bytes);
    std::memcpy(data.data() + header, ck.params.data(), bytes);
    write_text_atomic(path, data);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<StageKind> expected_stage) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open checkpoint " + path.string());
    }
    auto corrupt = [&](const std::string& why) -> Error {
        return Error(ErrorCode::CorruptCheckpoint, path.string() + ": " + why);
    };
    std::string line;
    if (!std::getline(in, line) || line != "vecplan-checkpoint") {
        throw corrupt("missing checkpoint magic");
    }
    Checkpoint ck;
    std::size_t count = 0;
    std::uint64_t checksum = 0;
    bool have_version = false, have_count = false, have_checksum = false, have_end = false;
    while (std::getline(in, line)) {
        if (line == "end") {
            have_end = true;
            break;
        }
        std::istringstream kv(line);
        std::string key, value;
        kv >> key >> value;
        if (value.empty()) {
            throw corrupt("header line '" + line + "' has no value");
        }
        try {
            if (key == "version") {
                have_version = true;
                if (std::stoi(value) != kCheckpointVersion) {
                    throw Error(ErrorCode::VersionMismatch, path.string() + ": checkpoint format version " + value +
                                                                ", this build reads " +
                                                                std::to_string(kCheckpointVersion));
                }
            } else if (key == "stage") {
                ck.model.stage = stage_kind_from_name(value);
            } else if (key == "conditions") {
                ck.model.conditions = ConditionSet::parse(value);
            } else if (key == "d_model") {
                ck.model.d_model = std::stoi(value);
            } else if (key == "layers") {
                ck.model.layers = std::stoi(value);
            } else if (key == "heads") {
                ck.model.heads = std::stoi(value);
            } else if (key == "ff_ratio") {
                ck.model.ff_ratio = std::stoi(value);
            } else if (key == "seed") {
                ck.model.seed = std::stoull(value);
            } else if (key == "timesteps") {
                ck.model.timesteps = std::stoi(value);
            } else if (key == "schedule") {
                ck.schedule.kind = schedule_kind_from_name(value);
            } else if (key == "schedule_timesteps") {
                ck.schedule.timesteps = std::stoi(value);
            } else if (key == "beta_start") {
                ck.schedule.beta_start = std::stod(value);
            } else if (key == "beta_end") {
                ck.schedule.beta_end = std::stod(value);
            } else if (key == "step") {
                ck.step = std::stoll(value);
            } else if (key == "param_count") {
                count = std::stoull(value);
                have_count = true;
            } else if (key == "checksum") {
                checksum = std::stoull(value);
                have_checksum = true;
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::VersionMismatch) throw;
            throw corrupt(e.what());
        } catch (const std::exception&) {
            throw corrupt("bad value for '" + key + "'");
        }
    }
    if (!have_end || !have_version || !have_count || !have_checksum) {
        throw corrupt("incomplete header");
    }
    if (expected_stage && *expected_stage != ck.model.stage) {
        throw Error(ErrorCode::ConditioningMismatch, path.string() + " holds a " +
                                                         std::string(stage_kind_name(ck.model.stage)) +
                                                         " network, expected " +
                                                         std::string(stage_kind_name(*expected_stage)));
    }
    try {
        ck.model.validate();
        if (count != param_count(ck.model)) {
            throw corrupt("parameter count does not match the model config");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptCheckpoint) throw;
        throw corrupt(e.what());
    }
    ck.params.resize(count);
    in.read(reinterpret_cast<char*>(ck.params.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double) || in.peek() != std::char_traits<char>::eof()) {
        throw corrupt("parameter blob has the wrong length");
    }
    if (fnv1a(ck.params.data(), count * sizeof(double)) != checksum) {
        throw corrupt("parameter checksum mismatch");
    }
    return ck;
}

} // namespace vecplan
