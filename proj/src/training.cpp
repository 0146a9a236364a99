// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vecplan/errors.hpp"
#include "vecplan/interchange.hpp"

namespace vecplan {

void TrainConfig::validate() const {
    if (steps < 1 || batch_size < 1 || decay_interval < 1 || checkpoint_interval < 0 || align_max_t < 0) {
        throw Error(ErrorCode::InvalidArgument, "train config counts must be positive");
    }
    if (!(learning_rate > 0.0) || !(decay_factor > 0.0) || !(lambda >= 0.0) || !(weight_decay >= 0.0) ||
        !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "train config has an out-of-range rate or coefficient");
    }
    build_schedule(schedule);
    model_config(StageKind::Nodes, {}).validate();
}

ModelConfig TrainConfig::model_config(StageKind stage, const ConditionSet& conditions) const {
    ModelConfig m;
    m.stage = stage;
    m.conditions = conditions;
    m.d_model = d_model;
    m.layers = layers;
    m.heads = heads;
    m.ff_ratio = ff_ratio;
    m.seed = seed;
    m.timesteps = schedule.timesteps;
    return m;
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        if (strip(line).empty()) continue;
        const std::string where = "config line " + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, where + ": expected key = value");
        }
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        try {
            std::size_t used = 0;
            auto as_int = [&] {
                const int v = std::stoi(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            };
            auto as_double = [&] {
                const double v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            };
            if (key == "steps") c.steps = as_int();
            else if (key == "batch_size") c.batch_size = as_int();
            else if (key == "learning_rate") c.learning_rate = as_double();
            else if (key == "decay_interval") c.decay_interval = as_int();
            else if (key == "decay_factor") c.decay_factor = as_double();
            else if (key == "schedule") c.schedule.kind = schedule_kind_from_name(value);
            else if (key == "timesteps") c.schedule.timesteps = as_int();
            else if (key == "beta_start") c.schedule.beta_start = as_double();
            else if (key == "beta_end") c.schedule.beta_end = as_double();
            else if (key == "lambda") c.lambda = as_double();
            else if (key == "align_enabled") {
                if (value != "true" && value != "false") throw std::invalid_argument(value);
                c.align_enabled = value == "true";
            } else if (key == "align_max_t") c.align_max_t = as_int();
            else if (key == "seed") {
                c.seed = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } else if (key == "checkpoint_interval") c.checkpoint_interval = as_int();
            else if (key == "beta1") c.beta1 = as_double();
            else if (key == "beta2") c.beta2 = as_double();
            else if (key == "adam_epsilon") c.adam_epsilon = as_double();
            else if (key == "weight_decay") c.weight_decay = as_double();
            else if (key == "d_model") c.d_model = as_int();
            else if (key == "layers") c.layers = as_int();
            else if (key == "heads") c.heads = as_int();
            else if (key == "ff_ratio") c.ff_ratio = as_int();
            else throw Error(ErrorCode::InvalidArgument, where + ": unknown key '" + key + "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, where + ": bad value '" + value + "' for " + key);
        }
    }
    c.validate();
    return c;
}

std::string format_train_config(const TrainConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "steps = " << c.steps << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "learning_rate = " << c.learning_rate << '\n'
        << "decay_interval = " << c.decay_interval << '\n'
        << "decay_factor = " << c.decay_factor << '\n'
        << "schedule = " << schedule_kind_name(c.schedule.kind) << '\n'
        << "timesteps = " << c.schedule.timesteps << '\n'
        << "beta_start = " << c.schedule.beta_start << '\n'
        << "beta_end = " << c.schedule.beta_end << '\n'
        << "lambda = " << c.lambda << '\n'
        << "align_enabled = " << (c.align_enabled ? "true" : "false") << '\n'
        << "align_max_t = " << c.align_max_t << '\n'
        << "seed = " << c.seed << '\n'
        << "checkpoint_interval = " << c.checkpoint_interval << '\n'
        << "beta1 = " << c.beta1 << '\n'
        << "beta2 = " << c.beta2 << '\n'
        << "adam_epsilon = " << c.adam_epsilon << '\n'
        << "weight_decay = " << c.weight_decay << '\n'
        << "d_model = " << c.d_model << '\n'
        << "layers = " << c.layers << '\n'
        << "heads = " << c.heads << '\n'
        << "ff_ratio = " << c.ff_ratio << '\n';
    return out.str();
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    return parse_train_config(read_text(path));
}

double lr_at(std::int64_t step, const TrainConfig& cfg) {
    if (step < 0) {
        throw Error(ErrorCode::InvalidArgument, "step must be non-negative");
    }
    return cfg.learning_rate * std::pow(cfg.decay_factor, static_cast<double>(step / cfg.decay_interval));
}

int sample_timestep(Rng& rng, int timesteps) {
    if (timesteps < 1) {
        throw Error(ErrorCode::InvalidArgument, "T must be positive");
    }
    return static_cast<int>(rng.uniform_int(1, timesteps));
}

AdamW::AdamW(std::size_t size, double beta1, double beta2, double epsilon, double weight_decay)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), weight_decay_(weight_decay), m_(size, 0.0), v_(size, 0.0) { }

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match the parameter count");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double decay = 1.0 - lr * weight_decay_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        const double mh = m_[i] / c1;
        const double vh = v_[i] / c2;
        params[i] = params[i] * decay - lr * mh / (std::sqrt(vh) + epsilon_);
    }
}

Json record_to_json(const TrainRecord& r) {
    return Json{{"step", r.step},
                {"loss", r.loss},
                {"eps_loss", r.eps_loss},
                {"align_loss", r.align_loss},
                {"lr", r.learning_rate},
                {"wall_seconds", r.wall_seconds}};
}

TrainRecord record_from_json(const Json& j) {
    TrainRecord r;
    r.step = j.at("step").get<std::int64_t>();
    r.loss = j.at("loss").get<double>();
    r.eps_loss = j.at("eps_loss").get<double>();
    r.align_loss = j.at("align_loss").get<double>();
    r.learning_rate = j.at("lr").get<double>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    return r;
}

std::vector<TrainingExample> prepare_examples(const std::vector<VectorFloorPlan>& plans, StageKind stage,
                                              const ConditionSet& conditions) {
    if (stage != StageKind::Nodes && stage != StageKind::Adjacency && stage != StageKind::Boxes) {
        throw Error(ErrorCode::DatasetStageMismatch,
                    "plans supply nodes, adjacency and partition targets, not " + std::string(stage_kind_name(stage)));
    }
    std::vector<TrainingExample> out;
    out.reserve(plans.size());
    ConditionSet teacher = conditions;
    teacher.partial = false;
    for (const auto& plan : plans) {
        TrainingExample ex;
        ex.room_count = static_cast<int>(plan.rooms.size());
        switch (stage) {
        case StageKind::Nodes:
            ex.x0 = encode_nodes(plan.nodes()).values;
            break;
        case StageKind::Adjacency:
            ex.x0 = encode_adjacency(plan.adjacency).values;
            break;
        default:
            ex.x0 = encode_boxes(plan.boxes()).values;
            break;
        }
        ex.conditioning = Conditioning::from_plan(plan, teacher);
        ex.features = featurize(ex.conditioning, conditions, stage);
        out.push_back(std::move(ex));
    }
    return out;
}

TrainResult train_component(const std::vector<VectorFloorPlan>& dataset, StageKind stage,
                            const ConditionSet& conditions, const TrainConfig& cfg, const TrainOptions& options) {
    cfg.validate();
    if (dataset.empty()) {
        throw Error(ErrorCode::InvalidArgument, "training needs a non-empty dataset");
    }
    const std::vector<TrainingExample> examples = prepare_examples(dataset, stage, conditions);
    const ModelConfig mc = cfg.model_config(stage, conditions);
    Denoiser net(mc, options.initial_params ? *options.initial_params : init_params(mc, cfg.seed));
    const NoiseSchedule schedule = build_schedule(cfg.schedule);
    const int T = schedule.timesteps();
    const int B = cfg.batch_size;
    const int w = stage_cols(stage);
    AdamW opt(net.param_count(), cfg.beta1, cfg.beta2, cfg.adam_epsilon, cfg.weight_decay);

    // Independent streams so that toggling the alignment term leaves data
    // order, time steps and noise untouched.
    Rng data_rng(mix_seed(cfg.seed, 1));
    Rng noise_rng(mix_seed(cfg.seed, 2));
    Rng align_rng(mix_seed(cfg.seed, 3));
    Rng partial_rng(mix_seed(cfg.seed, 4));

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();

    std::vector<ConditionFeatures> step_features(conditions.partial ? static_cast<std::size_t>(B) : 0);
    const std::size_t slots = conditions.partial ? slot_map(stage).size() : 0;
    std::vector<double, Eigen::aligned_allocator<double>> grad(net.param_count());
    DenoiserBatch batch;
    Denoiser::Cache cache;
    Matrix x0(static_cast<Eigen::Index>(B) * kMaxRooms, w);
    Matrix eps(x0.rows(), w);
    Matrix d_out(x0.rows(), w);
    TrainResult result;
    const auto start = std::chrono::steady_clock::now();

    for (int s = 0; s < cfg.steps; ++s) {
        const double lr = lr_at(s, cfg);
        batch.x.resize(x0.rows(), w);
        batch.t.assign(static_cast<std::size_t>(B), 0);
        batch.features.assign(static_cast<std::size_t>(B), nullptr);
        std::vector<const TrainingExample*> picked(static_cast<std::size_t>(B));
        for (int b = 0; b < B; ++b) {
            if (cursor == order.size()) {
                data_rng.shuffle(order.begin(), order.end());
                cursor = 0;
            }
            const TrainingExample& ex = examples[order[cursor++]];
            picked[static_cast<std::size_t>(b)] = &ex;
            const auto rows = static_cast<Eigen::Index>(b) * kMaxRooms;
            const int t = sample_timestep(noise_rng, T);
            batch.t[static_cast<std::size_t>(b)] = t;
            x0.middleRows(rows, kMaxRooms) = ex.x0;
            eps.middleRows(rows, kMaxRooms) = standard_normal(kMaxRooms, w, noise_rng);
            batch.x.middleRows(rows, kMaxRooms) = forward_noise(ex.x0, t, eps.middleRows(rows, kMaxRooms), schedule);
            if (conditions.partial) {
                // Random known subsets, values from the same record.
                const double rate = partial_rng.uniform();
                Conditioning c = ex.conditioning;
                PartialInput partial{StageTensor(stage, ex.x0), std::vector<std::uint8_t>(slots)};
                for (auto& k : partial.known) k = partial_rng.bernoulli(rate) ? 1 : 0;
                c.partial = std::move(partial);
                step_features[static_cast<std::size_t>(b)] = featurize(c, conditions, stage);
                batch.features[static_cast<std::size_t>(b)] = &step_features[static_cast<std::size_t>(b)];
            } else {
                batch.features[static_cast<std::size_t>(b)] = &ex.features;
            }
        }

        const Matrix eps_hat = net.forward(batch, &cache);
        TrainRecord rec;
        rec.step = s + 1;
        rec.learning_rate = lr;
        for (int b = 0; b < B; ++b) {
            const auto rows = static_cast<Eigen::Index>(b) * kMaxRooms;
            const int t = batch.t[static_cast<std::size_t>(b)];
            const Matrix e_hat = eps_hat.middleRows(rows, kMaxRooms);
            const Matrix e = eps.middleRows(rows, kMaxRooms);
            const bool align = cfg.align_enabled && cfg.lambda > 0.0 && (cfg.align_max_t == 0 || t <= cfg.align_max_t);
            Matrix x_tilde, x_inter;
            if (align) {
                const TrainingExample& ex = *picked[static_cast<std::size_t>(b)];
                x_tilde = estimate_x0(batch.x.middleRows(rows, kMaxRooms), e_hat, t, schedule);
                const ElementMap emap = element_map(stage, ex.room_count);
                x_inter = emap.empty() ? ex.x0 : build_alignment_target(ex.x0, t, T, emap, align_rng).x_inter;
            }
            const LossTerms l = total_loss(e_hat, e, x_tilde, x_inter, cfg.lambda);
            rec.eps_loss += l.eps_term / B;
            rec.align_loss += l.align_term / B;
            rec.loss += l.total / B;
            d_out.middleRows(rows, kMaxRooms) =
                total_loss_grad(e_hat, e, x_tilde, x_inter, cfg.lambda, t, schedule) / static_cast<double>(B);
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(rec);
        if (options.on_record) options.on_record(rec);
        if (!std::isfinite(rec.loss)) {
            throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at step " + std::to_string(rec.step) +
                                                      " (eps term " + std::to_string(rec.eps_loss) + ", align term " +
                                                      std::to_string(rec.align_loss) + ")");
        }

        std::fill(grad.begin(), grad.end(), 0.0);
        net.backward(cache, d_out, grad);
        opt.step(net.mutable_params(), grad, lr);

        if (!options.checkpoint_path.empty() && cfg.checkpoint_interval > 0 && (s + 1) % cfg.checkpoint_interval == 0) {
            const auto p = net.params();
            save_checkpoint(options.checkpoint_path, {mc, cfg.schedule, s + 1, {p.begin(), p.end()}});
        }
    }

    const auto p = net.params();
    result.checkpoint = Checkpoint{mc, cfg.schedule, cfg.steps, {p.begin(), p.end()}};
    if (!options.checkpoint_path.empty()) {
        save_checkpoint(options.checkpoint_path, result.checkpoint);
    }
    return result;
}

std::vector<double> estimate_error(const Denoiser& net, const NoiseSchedule& schedule,
                                   const std::vector<TrainingExample>& heldout, std::span<const int> ts,
                                   std::uint64_t seed) {
    if (heldout.empty()) {
        throw Error(ErrorCode::InvalidArgument, "held-out set is empty");
    }
    const int w = net.width();
    constexpr std::size_t chunk = 64;
    std::vector<double> out;
    for (int t : ts) {
        double total = 0.0;
        for (std::size_t first = 0; first < heldout.size(); first += chunk) {
            const std::size_t n = std::min(chunk, heldout.size() - first);
            DenoiserBatch batch;
            batch.x.resize(static_cast<Eigen::Index>(n) * kMaxRooms, w);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& ex = heldout[first + i];
                Rng rng(mix_seed(seed, mix_seed(first + i, static_cast<std::uint64_t>(t))));
                const Matrix eps = standard_normal(kMaxRooms, w, rng);
                batch.x.middleRows(static_cast<Eigen::Index>(i) * kMaxRooms, kMaxRooms) =
                    forward_noise(ex.x0, t, eps, schedule);
                batch.t.push_back(t);
                batch.features.push_back(&ex.features);
            }
            const Matrix eps_hat = net.forward(batch);
            for (std::size_t i = 0; i < n; ++i) {
                const auto rows = static_cast<Eigen::Index>(i) * kMaxRooms;
                const Matrix x_tilde =
                    estimate_x0(batch.x.middleRows(rows, kMaxRooms), eps_hat.middleRows(rows, kMaxRooms), t, schedule);
                total += (x_tilde - heldout[first + i].x0).squaredNorm() / static_cast<double>(x_tilde.size());
            }
        }
        out.push_back(total / static_cast<double>(heldout.size()));
    }
    return out;
}

AblationReport ablation_pair(const std::vector<VectorFloorPlan>& train, const std::vector<VectorFloorPlan>& heldout,
                             StageKind stage, const ConditionSet& conditions, const TrainConfig& cfg,
                             std::vector<int> ts) {
    TrainConfig on = cfg;
    on.align_enabled = true;
    TrainConfig off = cfg;
    off.align_enabled = false;
    AblationReport r;
    r.ts = std::move(ts);
    const auto held = prepare_examples(heldout, stage, conditions);
    const NoiseSchedule schedule = build_schedule(cfg.schedule);
    const std::uint64_t eval_seed = mix_seed(cfg.seed, 0xAB1A7E);

    TrainResult a = train_component(train, stage, conditions, on);
    r.aligned = estimate_error(Denoiser(a.checkpoint.model, a.checkpoint.params), schedule, held, r.ts, eval_seed);
    r.aligned_log = std::move(a.log);
    TrainResult b = train_component(train, stage, conditions, off);
    r.unaligned = estimate_error(Denoiser(b.checkpoint.model, b.checkpoint.params), schedule, held, r.ts, eval_seed);
    r.unaligned_log = std::move(b.log);
    return r;
}

} // namespace vecplan
