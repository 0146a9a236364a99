// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Trained checkpoints are cached
// under --cache keyed by a hash of their training setup, so reruns only pay
// for sampling and evaluation.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../common/gradcheck.hpp"
#include "vecplan/codec.hpp"
#include "vecplan/diffusion.hpp"
#include "vecplan/errors.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/metrics.hpp"
#include "vecplan/pipeline.hpp"
#include "vecplan/synthetic.hpp"
#include "vecplan/training.hpp"

namespace fs = std::filesystem;
using namespace vecplan;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Shared data: 2000 training plans and 200 held-out plans.
struct Corpus {
    std::vector<VectorFloorPlan> train;
    std::vector<VectorFloorPlan> heldout;
};

constexpr std::uint64_t kDataSeed = 2026;

const Corpus& corpus() {
    static const Corpus c = [] {
        GeneratorParams gp;
        gp.seed = kDataSeed;
        auto all = generate_dataset(gp, 2200);
        Corpus out;
        out.train.assign(all.begin(), all.begin() + 2000);
        out.heldout.assign(all.begin() + 2000, all.end());
        return out;
    }();
    return c;
}

TrainConfig desk_config(int steps, int decay_interval) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch_size = 64;
    cfg.decay_interval = decay_interval;
    cfg.d_model = 64;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.ff_ratio = 4;
    cfg.lambda = 1.0;
    cfg.align_max_t = 200;
    cfg.seed = 11;
    return cfg;
}

class Models {
public:
    explicit Models(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    // Trains on the shared training split unless a checkpoint for exactly
    // this setup is already cached. Returns the checkpoint and its log.
    TrainResult get(StageKind stage, const char* conditions, const TrainConfig& cfg) {
        const std::string key = std::string(stage_kind_name(stage)) + "|" + conditions + "|" +
                                format_train_config(cfg) + "|data " + std::to_string(kDataSeed) + " 2000|layout 2";
        const std::string stem = std::string(stage_kind_name(stage)) + "_" + fmt("%016llx", (unsigned long long)fnv1a(key));
        const fs::path ck = dir_ / (stem + ".ckpt");
        const fs::path log = dir_ / (stem + ".log.jsonl");
        TrainResult r;
        if (fs::exists(ck) && fs::exists(log)) {
            r.checkpoint = load_checkpoint(ck, stage);
            std::ifstream in(log);
            std::string line;
            while (std::getline(in, line)) r.log.push_back(record_from_json(Json::parse(line)));
            std::printf("  [cache] %s %s from %s\n", std::string(stage_kind_name(stage)).c_str(), conditions,
                        ck.string().c_str());
            return r;
        }
        std::printf("  [train] %s %s, %d steps\n", std::string(stage_kind_name(stage)).c_str(), conditions, cfg.steps);
        std::fflush(stdout);
        const auto start = Clock::now();
        r = train_component(corpus().train, stage, ConditionSet::parse(conditions), cfg);
        std::ostringstream text;
        for (const auto& rec : r.log) text << record_to_json(rec).dump() << '\n';
        write_text_atomic(log, text.str());
        save_checkpoint(ck, r.checkpoint);
        std::printf("  [train] done in %.0f s\n", seconds_since(start));
        return r;
    }

private:
    fs::path dir_;
};

// Criteria.

Outcome codec_roundtrip() {
    GeneratorParams gp;
    gp.seed = 7;
    const auto gen_start = Clock::now();
    const auto plans = generate_dataset(gp, 10000);
    const double gen_s = seconds_since(gen_start);
    const auto start = Clock::now();
    std::size_t bad = 0;
    for (const auto& p : plans) {
        const auto [b, e] = encode_boundary(p.boundary);
        const Boundary back = decode_boundary(b, e);
        const auto nodes = p.nodes();
        const auto boxes = p.boxes();
        const bool ok = back.corners == p.boundary.corners && back.entrance == p.boundary.entrance &&
                        decode_nodes(encode_nodes(nodes)) == nodes &&
                        decode_adjacency(encode_adjacency(p.adjacency), p.adjacency.room_count) == p.adjacency &&
                        decode_boxes(encode_boxes(boxes), nodes) == boxes;
        bad += ok ? 0 : 1;
    }
    const double s = seconds_since(start);
    return {bad == 0 && s < 60.0,
            fmt("10000 plans, %zu mismatches, codec %.2f s (generation %.2f s)", bad, s, gen_s)};
}

Outcome diffusion_inversion() {
    const auto start = Clock::now();
    Rng rng(21);
    double worst = 0.0;
    const StageKind kinds[] = {StageKind::Boundary, StageKind::Entrance, StageKind::Nodes, StageKind::Adjacency,
                               StageKind::Boxes};
    for (int i = 0; i < 10000; ++i) {
        ScheduleParams sp;
        sp.kind = rng.bernoulli(0.5) ? ScheduleKind::Linear : ScheduleKind::Cosine;
        sp.timesteps = static_cast<int>(rng.uniform_int(1, 1000));
        sp.beta_start = rng.uniform(1e-5, 1e-3);
        sp.beta_end = rng.uniform(sp.beta_start, 0.05);
        const auto s = build_schedule(sp);
        const auto shape = StageTensor::filled(kinds[rng.uniform_int(0, 4)], 0.0);
        const Matrix x0 = (standard_normal(shape.rows(), shape.cols(), rng).array().tanh()).matrix();
        const Matrix eps = standard_normal(shape.rows(), shape.cols(), rng);
        const int t = static_cast<int>(rng.uniform_int(1, sp.timesteps));
        const Matrix back = estimate_x0(forward_noise(x0, t, eps, s), eps, t, s);
        worst = std::max(worst, (back - x0).norm() / x0.norm());
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-5 && secs < 60.0, fmt("10000 tuples, max relative error %.3g, %.2f s", worst, secs)};
}

Outcome alignment_schedule() {
    const int T = 1000;
    std::size_t count_bad = 0, zero_bad = 0, confirmed_bad = 0, checked = 0;
    Rng rng(5);
    for (int n = 1; n <= 8; ++n) {
        for (StageKind kind : {StageKind::Nodes, StageKind::Adjacency, StageKind::Boxes}) {
            const auto emap = element_map(kind, n);
            if (kind == StageKind::Adjacency && emap.empty()) continue;
            const auto shape = StageTensor::filled(kind, 0.0);
            for (int t = 0; t <= T; ++t) {
                // Brute force in exact rationals: floor((n(T - t) + T) / T), capped at n.
                const int brute = std::min((n * (T - t) + T) / T, n);
                const int expected_groups = static_cast<int>(emap.size());
                const int n_el = kind == StageKind::Adjacency ? expected_groups : n;
                const int brute_el = std::min((n_el * (T - t) + T) / T, n_el);
                if (kind == StageKind::Nodes && confirmed_count(n, t, T) != brute) ++count_bad;
                Matrix x0 = standard_normal(shape.rows(), shape.cols(), rng);
                if (kind == StageKind::Adjacency) x0 = (x0 + x0.transpose().eval()) / 2.0;
                const auto a = build_alignment_target(x0, t, T, emap, rng);
                ++checked;
                if (a.n_confirmed != brute_el) ++count_bad;
                if (t == 0 && !(a.x_inter.array() == x0.array()).all()) ++zero_bad;
                std::set<int> blended(a.unconfirmed.begin(), a.unconfirmed.end());
                Matrix touched = Matrix::Zero(x0.rows(), x0.cols());
                for (int g : blended) {
                    for (auto [r, c] : emap.groups[static_cast<std::size_t>(g)]) touched(r, c) = 1.0;
                }
                for (Eigen::Index i = 0; i < x0.size(); ++i) {
                    if (touched.data()[i] == 0.0 && a.x_inter.data()[i] != x0.data()[i]) {
                        ++confirmed_bad;
                        break;
                    }
                }
            }
        }
    }
    const bool ok = count_bad == 0 && zero_bad == 0 && confirmed_bad == 0;
    return {ok, fmt("%zu (n, t, stage) cases: %zu count mismatches, %zu t=0 mismatches, %zu confirmed-entry changes",
                    checked, count_bad, zero_bad, confirmed_bad)};
}

Outcome gradient_check() {
    const auto start = Clock::now();
    const auto r = vecplan::testing::gradient_check(200, 17);
    const double s = seconds_since(start);
    return {r.checked >= 100 && r.max_rel_error <= 1e-3 && s < 300.0,
            fmt("%d parameters, max relative error %.3g, %.2f s", r.checked, r.max_rel_error, s)};
}

Outcome iou_oracle() {
    // Rectangle corners lie on the 1/1024 lattice so every raster cell is
    // wholly inside or outside; one jittered sample per cell then estimates
    // the areas without discretization bias.
    const auto start = Clock::now();
    constexpr int N = 1024;
    Rng rng(99);
    auto random_region = [&] {
        Region r;
        const int k = static_cast<int>(rng.uniform_int(1, 4));
        for (int i = 0; i < k; ++i) {
            int x1 = static_cast<int>(rng.uniform_int(0, N)), x2 = static_cast<int>(rng.uniform_int(0, N));
            int y1 = static_cast<int>(rng.uniform_int(0, N)), y2 = static_cast<int>(rng.uniform_int(0, N));
            if (x1 > x2) std::swap(x1, x2);
            if (y1 > y2) std::swap(y1, y2);
            if (x1 == x2 || y1 == y2) continue;
            r = region_union(r, Region{{double(x1) / N, double(y1) / N, double(x2) / N, double(y2) / N}});
        }
        return r;
    };
    auto inside = [](const Region& r, double x, double y) {
        for (const auto& q : r) {
            if (x >= q.x1 && x < q.x2 && y >= q.y1 && y < q.y2) return true;
        }
        return false;
    };
    double worst = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
        const Region a = random_region();
        const Region b = random_region();
        std::int64_t inter = 0, uni = 0;
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < N; ++i) {
                const double x = (i + rng.uniform()) / N;
                const double y = (j + rng.uniform()) / N;
                const bool ia = inside(a, x, y), ib = inside(b, x, y);
                inter += ia && ib;
                uni += ia || ib;
            }
        }
        const double oracle = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
        worst = std::max(worst, std::abs(oracle - rectilinear_iou(a, b)));
    }
    return {worst <= 1e-3, fmt("1000 pairs, max |IoU - raster| %.3g, %.1f s", worst, seconds_since(start))};
}

// Trained-model criteria.

struct PipelineModels {
    ModelRegistry trained;
    ModelRegistry untrained;
};

PipelineModels pipeline_models(Models& models) {
    const TrainConfig cfg = desk_config(6000, 4000);
    PipelineModels m;
    struct Spec {
        const char* id;
        StageKind stage;
        const char* conditions;
    };
    const Spec specs[] = {{"nodes/B", StageKind::Nodes, "B"},
                          {"adjacency/B+nodes", StageKind::Adjacency, "B+Rn+Rc+Rsl"},
                          {"partition/B+nodes+Ra", StageKind::Boxes, "B+Rn+Rc+Rsl+Ra"}};
    for (const auto& s : specs) {
        auto r = models.get(s.stage, s.conditions, cfg);
        Checkpoint fresh = r.checkpoint;
        fresh.step = 0;
        fresh.params = init_params(fresh.model, cfg.seed);
        m.trained.add(s.id, std::move(r.checkpoint));
        m.untrained.add(s.id, std::move(fresh));
    }
    return m;
}

struct Generation {
    std::optional<PipelineResult> result;
    std::string error;
};

Generation generate_full(const ModelRegistry& reg, const Boundary& boundary, std::uint64_t seed) {
    GenerationRequest req;
    req.conditioning.boundary = boundary;
    req.seed = seed;
    req.snapshot_ts.clear();
    Generation g;
    try {
        g.result = generate_plan(req, reg);
    } catch (const Error& e) {
        g.error = e.what();
    }
    return g;
}

Outcome compliance(Models& models) {
    const TrainConfig cfg = desk_config(20000, 10000);
    const auto start = Clock::now();
    auto r = models.get(StageKind::Nodes, "B+Rn+Rc", cfg);
    const double train_s = seconds_since(start);
    const LoadedVariant v("nodes/B+Rn+Rc", r.checkpoint);
    const auto cs_blocks = ConditionSet::parse("B+Rn+Rc");
    std::vector<Conditioning> cs;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < corpus().heldout.size(); ++i) {
        cs.push_back(Conditioning::from_plan(corpus().heldout[i], cs_blocks));
        seeds.push_back(1000 + i);
    }
    const auto sample_start = Clock::now();
    const auto out = sample_stage_batch(v, cs, seeds, std::vector<SampleOptions>(cs.size()));
    std::vector<GeneratedAttributes> attrs;
    for (const auto& s : out) attrs.push_back(attributes_of(s.tensor));
    const auto rep = compliance_mae(attrs, cs);

    // Trailing versus initial noise loss over windows of 100 records.
    auto window = [&](std::size_t from) {
        double sum = 0.0;
        for (std::size_t i = from; i < from + 100; ++i) sum += r.log[i].eps_loss;
        return sum / 100.0;
    };
    const double early = window(0), late = window(r.log.size() - 100);
    std::printf("  info: eps loss first 100 steps %.4f, last 100 steps %.4f (ratio %.2f)\n", early, late,
                early / late);
    const bool ok = *rep.room_count <= 0.05 && *rep.categories <= 0.05;
    return {ok, fmt("200 held-out requests, MAE R_n %.4f, R_c %.4f (train %.0f s%s, sampling %.0f s)", *rep.room_count,
                    *rep.categories, train_s, train_s < 5 ? " cached" : "", seconds_since(sample_start))};
}

struct FullRuns {
    std::vector<Generation> trained;
};

Outcome partition_validity(const PipelineModels& m, FullRuns& runs) {
    const auto start = Clock::now();
    std::size_t valid = 0, symmetric = 0, adjacency_seen = 0;
    std::map<std::string, int> errors;
    for (std::size_t i = 0; i < corpus().heldout.size(); ++i) {
        auto g = generate_full(m.trained, corpus().heldout[i].boundary, 5000 + i);
        if (g.result && g.result->adjacency) {
            ++adjacency_seen;
            symmetric += g.result->adjacency->valid() ? 1 : 0;
        }
        if (g.result && g.result->plan) {
            const auto& plan = *g.result->plan;
            const auto c = check_partition(plan);
            const double area = polygon_area(plan.boundary.corners);
            if (c.area_error <= 0.01 && c.overlap_area <= 1e-9 * area) ++valid;
        } else {
            ++errors[g.error.substr(0, g.error.find(':', g.error.find(':') + 1))];
        }
        runs.trained.push_back(std::move(g));
    }
    for (const auto& [e, n] : errors) std::printf("  info: %d generations failed with %s\n", n, e.c_str());
    const std::size_t n = corpus().heldout.size();
    const bool ok = valid * 10 >= n * 9 && symmetric == adjacency_seen;
    return {ok, fmt("%zu/%zu valid partitions, %zu/%zu adjacency outputs symmetric, %.0f s", valid, n, symmetric,
                    adjacency_seen, seconds_since(start))};
}

Outcome diversity(const PipelineModels& m) {
    const auto start = Clock::now();
    std::vector<std::vector<VectorFloorPlan>> variants;
    std::size_t failed = 0, dropped = 0;
    for (std::size_t b = 0; b < 100; ++b) {
        std::vector<VectorFloorPlan> set;
        for (std::uint64_t k = 0; k < 5; ++k) {
            auto g = generate_full(m.trained, corpus().heldout[b].boundary, 9000 + 10 * b + k);
            if (g.result && g.result->plan) set.push_back(*g.result->plan);
            else ++failed;
        }
        if (set.size() >= 2) variants.push_back(std::move(set));
        else ++dropped;
    }
    if (variants.empty()) return {false, "no boundary produced two plans"};
    const auto d = diversity_avg(variants);
    std::printf("  info: %s", format_category_scores("Diversity_avg", d).c_str());
    const double living = d[static_cast<int>(RoomCategory::Living) - 1];
    return {living >= 0.05 && living <= 0.95,
            fmt("living Diversity_avg %.3f over %zu boundaries (%zu failed variants, %zu boundaries dropped), %.0f s",
                living, variants.size(), failed, dropped, seconds_since(start))};
}

Outcome frechet(const PipelineModels& m, const FullRuns& runs) {
    const auto start = Clock::now();
    const auto& ref = corpus().heldout;
    const double self = frechet_feature_distance(ref, ref);
    std::vector<VectorFloorPlan> trained, untrained;
    for (const auto& g : runs.trained) {
        if (g.result && g.result->plan) trained.push_back(*g.result->plan);
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
        auto g = generate_full(m.untrained, ref[i].boundary, 5000 + i);
        if (g.result && g.result->plan) untrained.push_back(*g.result->plan);
    }
    auto fd = [&](const std::vector<VectorFloorPlan>& plans) {
        return plans.size() >= kMinFrechetSamples ? frechet_feature_distance(plans, ref)
                                                  : std::numeric_limits<double>::infinity();
    };
    const double fd_trained = fd(trained);
    const double fd_untrained = fd(untrained);
    const bool ok = self <= 1e-8 && std::isfinite(fd_trained) && fd_trained < fd_untrained;
    return {ok, fmt("FD(X,X) %.3g; trained %.3f (%zu plans) vs untrained %.3f (%zu plans), %.0f s", self, fd_trained,
                    trained.size(), fd_untrained, untrained.size(), seconds_since(start))};
}

Outcome ablation(Models& models) {
    const auto start = Clock::now();
    const auto& c = corpus();
    const auto cs = ConditionSet::parse("B+Rn+Rc");
    const std::vector<int> ts{50, 20, 10};

    // Determinism of the whole harness on a short run.
    TrainConfig small = desk_config(200, 10000);
    const std::vector<VectorFloorPlan> held(c.heldout.begin(), c.heldout.begin() + 50);
    const auto a = ablation_pair(c.train, held, StageKind::Nodes, cs, small, ts);
    const auto b = ablation_pair(c.train, held, StageKind::Nodes, cs, small, ts);
    const bool deterministic = a.aligned == b.aligned && a.unaligned == b.unaligned &&
                               a.aligned_log.back().loss == b.aligned_log.back().loss &&
                               a.unaligned_log.back().loss == b.unaligned_log.back().loss;

    // Reported desk-scale series.
    TrainConfig cfg = desk_config(3000, 2000);
    TrainConfig on = cfg, off = cfg;
    on.align_enabled = true;
    off.align_enabled = false;
    const auto ra = models.get(StageKind::Nodes, "B+Rn+Rc", on);
    const auto rb = models.get(StageKind::Nodes, "B+Rn+Rc", off);
    const auto examples = prepare_examples(c.heldout, StageKind::Nodes, cs);
    const auto schedule = build_schedule(cfg.schedule);
    const std::uint64_t eval_seed = mix_seed(cfg.seed, 0xAB1A7E);
    const auto ea = estimate_error(Denoiser(ra.checkpoint.model, ra.checkpoint.params), schedule, examples, ts, eval_seed);
    const auto eb = estimate_error(Denoiser(rb.checkpoint.model, rb.checkpoint.params), schedule, examples, ts, eval_seed);
    std::printf("  info: mean |x~ - x0|^2 at t = 50/20/10: aligned %.5f/%.5f/%.5f, unaligned %.5f/%.5f/%.5f\n", ea[0],
                ea[1], ea[2], eb[0], eb[1], eb[2]);
    std::printf("  info: at t = 10 the %s variant scores lower\n", ea[2] < eb[2] ? "aligned" : "unaligned");
    return {deterministic && ea.size() == 3 && eb.size() == 3,
            fmt("paired series %s on rerun; t=10 aligned %.5f vs unaligned %.5f, %.0f s",
                deterministic ? "identical" : "DIFFERENT", ea[2], eb[2], seconds_since(start))};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vecplan acceptance suite"};
    std::string cache = "acceptance_cache";
    std::vector<std::string> only;
    app.add_option("--cache", cache, "Directory for trained checkpoints");
    app.add_option("--only", only, "Run just these criteria");
    CLI11_PARSE(app, argc, argv);

    Models models(cache);
    const auto wanted = [&](const std::string& name) {
        return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
    };

    int failures = 0;
    const auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
        if (!wanted(name)) return;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    };

    report("codec-roundtrip", codec_roundtrip);
    report("diffusion-inversion", diffusion_inversion);
    report("alignment-schedule", alignment_schedule);
    report("gradient-check", gradient_check);
    report("iou-oracle", iou_oracle);
    report("compliance", [&] { return compliance(models); });

    std::optional<PipelineModels> pm;
    FullRuns runs;
    auto need_pipeline = [&]() -> const PipelineModels& {
        if (!pm) pm = pipeline_models(models);
        return *pm;
    };
    report("partition-validity", [&] { return partition_validity(need_pipeline(), runs); });
    report("diversity", [&] { return diversity(need_pipeline()); });
    report("frechet", [&] {
        if (runs.trained.empty()) {
            for (std::size_t i = 0; i < corpus().heldout.size(); ++i) {
                runs.trained.push_back(generate_full(need_pipeline().trained, corpus().heldout[i].boundary, 5000 + i));
            }
        }
        return frechet(need_pipeline(), runs);
    });
    report("ablation", [&] { return ablation(models); });

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "NOT ACCEPTED", failures);
    return failures == 0 ? 0 : 1;
}
