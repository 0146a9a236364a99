// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

// vecplan: data generation, training, sampling, evaluation and the HTTP service.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 model error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vecplan/errors.hpp"
#include "vecplan/metrics.hpp"
#include "vecplan/pipeline.hpp"
#include "vecplan/service.hpp"
#include "vecplan/synthetic.hpp"
#include "vecplan/training.hpp"

namespace fs = std::filesystem;
using namespace vecplan;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

int exit_code_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidScheduleParams: return kExitUsage;
    case ErrorCode::ConditioningMismatch:
    case ErrorCode::NonFiniteOutput:
    case ErrorCode::VersionMismatch:
    case ErrorCode::CorruptCheckpoint:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::MissingCheckpoint: return kExitModel;
    default: return kExitData;
    }
}

const char* env_or(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

// Lines of JSON documents; a single top-level array is accepted too.
std::vector<Json> read_documents(const fs::path& path) {
    const std::string text = read_text(path);
    std::vector<Json> out;
    try {
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '[') {
            for (auto& j : Json::parse(text)) out.push_back(std::move(j));
            return out;
        }
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out.push_back(Json::parse(line));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, path.string() + ": " + e.what());
    }
    return out;
}

// Plan documents, or result documents carrying a plan.
std::vector<VectorFloorPlan> read_plan_documents(const fs::path& path) {
    std::vector<VectorFloorPlan> out;
    for (const auto& j : read_documents(path)) {
        try {
            out.push_back(plan_from_json(j.contains("plan") && j.at("plan").is_object() ? j.at("plan") : j));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::CorruptRecord, path.string() + ": " + e.what());
        }
    }
    return out;
}

GeneratedAttributes attributes_from_result(const Json& j, bool raw) {
    try {
        if (raw) {
            return attributes_of(stage_tensor_from_json(j.at("extensions").at("raw").at("nodes"), StageKind::Nodes));
        }
        if (j.contains("plan") && j.at("plan").is_object() && !j.contains("nodes")) {
            return attributes_of(plan_from_json(j.at("plan")));
        }
        GeneratedAttributes a;
        a.nodes = nodes_from_json(j.at("nodes"));
        std::stable_sort(a.nodes.begin(), a.nodes.end(), canonical_less);
        if (j.contains("adjacency")) a.adjacency = adjacency_from_json(j.at("adjacency"));
        return a;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, std::string("result document: ") + e.what());
    }
}

ModelRegistry open_registry(const std::string& registry, const std::string& checkpoint, const std::string& id) {
    if (!checkpoint.empty()) {
        ModelRegistry r;
        const fs::path p = checkpoint;
        if (!fs::exists(p)) throw Error(ErrorCode::MissingCheckpoint, "checkpoint " + checkpoint + " not found");
        r.add(id.empty() ? p.stem().string() : id, load_checkpoint(p), p);
        return r;
    }
    if (registry.empty()) {
        throw Error(ErrorCode::MissingCheckpoint, "no registry: pass --registry or set VECPLAN_REGISTRY");
    }
    if (!fs::exists(registry)) throw Error(ErrorCode::MissingCheckpoint, "registry " + registry + " not found");
    return ModelRegistry::load(registry);
}

void write_output(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text_atomic(out, text);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vecplan: vector floor-plan diffusion"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic plan dataset");
    GeneratorParams gp;
    std::size_t gen_count = 1000;
    std::string gen_out = "dataset.jsonl";
    gen->add_option("--seed", gp.seed, "Generator seed");
    gen->add_option("--count", gen_count, "Number of plans")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Output path (JSON lines; a .manifest.json is written alongside)");
    gen->add_option("--min-rooms", gp.min_rooms, "Fewest rooms per plan");
    gen->add_option("--max-rooms", gp.max_rooms, "Most rooms per plan");

    // train
    auto* train = app.add_subcommand("train", "Train one denoiser variant");
    std::string tr_stage, tr_conditions = "none", tr_config, tr_data, tr_out, tr_log;
    int tr_steps = -1;
    train->add_option("--stage", tr_stage, "nodes | adjacency | partition")->required();
    train->add_option("--conditions", tr_conditions, "Condition blocks, e.g. B+Rn+Rc");
    train->add_option("--config", tr_config, "Training config (key = value lines)");
    train->add_option("--data", tr_data, "Dataset path")->required();
    train->add_option("--out", tr_out, "Checkpoint path")->required();
    train->add_option("--log", tr_log, "Training log (JSON lines); default <out>.log.jsonl");
    train->add_option("--steps", tr_steps, "Override the configured step count");

    // sample
    auto* sample = app.add_subcommand("sample", "Run the generation pipeline");
    std::string sm_variant, sm_request, sm_out, sm_registry = env_or("VECPLAN_REGISTRY", ""), sm_checkpoint;
    std::string sm_target;
    std::uint64_t sm_seed = 0;
    bool sm_seed_set = false;
    int sm_count = 1;
    sample->add_option("--variant", sm_variant, "Variant id (default: first matching variant)");
    sample->add_option("--request", sm_request, "Request document")->required();
    auto* seed_opt = sample->add_option("--seed", sm_seed, "Seed (overrides the request)");
    sample->add_option("--out", sm_out, "Output path; '-' for stdout");
    sample->add_option("--registry", sm_registry, "Registry file (env VECPLAN_REGISTRY)");
    sample->add_option("--checkpoint", sm_checkpoint, "Single checkpoint instead of a registry");
    sample->add_option("--target", sm_target, "nodes | adjacency | partition | plan (overrides the request)");
    sample->add_option("--count", sm_count, "Results to draw, with seeds seed, seed+1, ...")->check(CLI::PositiveNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate generated plans");
    std::string ev_metric, ev_generated, ev_reference, ev_out;
    int ev_k = 5;
    bool ev_nn = false, ev_raw = false, ev_json = false;
    eval->add_option("--metric", ev_metric, "stats | mae | diversity | coverage | ffd")
        ->required()
        ->check(CLI::IsMember({"stats", "mae", "diversity", "coverage", "ffd"}));
    eval->add_option("--generated", ev_generated, "Generated plans or result documents")->required();
    eval->add_option("--reference", ev_reference, "Reference plans (requests for mae)");
    eval->add_option("--k", ev_k, "Variants per sample for diversity")->check(CLI::Range(2, 1000));
    eval->add_flag("--nn", ev_nn, "Coverage against each plan's nearest reference boundary");
    eval->add_flag("--raw", ev_raw, "MAE on raw nodes output instead of the pass-through nodes");
    eval->add_flag("--json", ev_json, "Print machine-readable JSON");
    eval->add_option("--out", ev_out, "Output path; default stdout");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    std::string sv_registry = env_or("VECPLAN_REGISTRY", ""), sv_bind = env_or("VECPLAN_BIND", "127.0.0.1:8080");
    int sv_in_flight = 2;
    serve_cmd->add_option("--registry", sv_registry, "Registry file (env VECPLAN_REGISTRY)");
    serve_cmd->add_option("--bind", sv_bind, "host:port (env VECPLAN_BIND)");
    serve_cmd->add_option("--max-in-flight", sv_in_flight, "Concurrent generations")->check(CLI::PositiveNumber);

    // register
    auto* reg_cmd = app.add_subcommand("register", "Add a checkpoint to a registry file");
    std::string rg_registry, rg_id, rg_checkpoint;
    reg_cmd->add_option("--registry", rg_registry, "Registry file (created if absent)")->required();
    reg_cmd->add_option("--id", rg_id, "Variant id, e.g. nodes/B+Rn+Rc")->required();
    reg_cmd->add_option("--checkpoint", rg_checkpoint, "Checkpoint path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    sm_seed_set = seed_opt->count() > 0;

    try {
        if (*gen) {
            gp.validate();
            save_dataset(gen_out, generate_dataset(gp, gen_count), gp);
            std::cerr << "wrote " << gen_count << " plans to " << gen_out << "\n";
            return 0;
        }
        if (*train) {
            TrainConfig cfg = tr_config.empty() ? TrainConfig{} : load_train_config(tr_config);
            if (tr_steps >= 0) cfg.steps = tr_steps;
            cfg.validate();
            const StageKind stage = stage_kind_from_name(tr_stage);
            const ConditionSet cs = ConditionSet::parse(tr_conditions);
            const auto data = load_dataset(tr_data);
            const fs::path log_path = tr_log.empty() ? fs::path(tr_out + ".log.jsonl") : fs::path(tr_log);
            std::ofstream log(log_path);
            if (!log) throw Error(ErrorCode::Io, "cannot write " + log_path.string());
            TrainOptions opt;
            opt.checkpoint_path = tr_out;
            opt.on_record = [&](const TrainRecord& r) {
                log << record_to_json(r).dump() << '\n';
                if (r.step % 100 == 0 || r.step == cfg.steps) {
                    std::fprintf(stderr, "step %lld loss %.5f eps %.5f align %.5f lr %.2e\n",
                                 static_cast<long long>(r.step), r.loss, r.eps_loss, r.align_loss, r.learning_rate);
                }
            };
            train_component(data, stage, cs, cfg, opt);
            std::cerr << "wrote " << tr_out << "\n";
            return 0;
        }
        if (*sample) {
            const ModelRegistry reg = open_registry(sm_registry, sm_checkpoint, sm_variant);
            const auto docs = read_documents(sm_request);
            if (docs.size() != 1) throw Error(ErrorCode::InvalidArgument, "request file must hold one document");
            GenerationRequest req = request_from_json(docs.front());
            if (!sm_variant.empty()) req.variant = sm_variant;
            if (!sm_target.empty()) req.target = generation_target_from_name(sm_target);
            if (sm_seed_set) req.seed = sm_seed;
            std::string text;
            for (int i = 0; i < sm_count; ++i) {
                GenerationRequest r = req;
                r.seed = req.seed + static_cast<std::uint64_t>(i);
                text += sm_count == 1 ? result_to_json(generate_plan(r, reg)).dump(2) + "\n"
                                      : result_to_json(generate_plan(r, reg)).dump() + "\n";
            }
            write_output(sm_out, text);
            return 0;
        }
        if (*eval) {
            Json report;
            std::string table;
            if (ev_metric == "mae") {
                if (ev_reference.empty()) throw Error(ErrorCode::InvalidArgument, "mae needs --reference requests");
                std::vector<GeneratedAttributes> outs;
                for (const auto& j : read_documents(ev_generated)) outs.push_back(attributes_from_result(j, ev_raw));
                std::vector<Conditioning> conds;
                for (const auto& j : read_documents(ev_reference)) {
                    conds.push_back(j.contains("conditions") ? request_from_json(j).conditioning
                                                             : conditioning_from_json(j));
                }
                const auto r = compliance_mae(outs, conds);
                report = compliance_to_json(r);
                table = format_compliance(r);
            } else if (ev_metric == "diversity") {
                const auto plans = read_plan_documents(ev_generated);
                if (plans.size() % static_cast<std::size_t>(ev_k) != 0) {
                    throw Error(ErrorCode::InvalidArgument, "plan count is not a multiple of --k");
                }
                std::vector<std::vector<VectorFloorPlan>> sets;
                for (std::size_t i = 0; i < plans.size(); i += static_cast<std::size_t>(ev_k)) {
                    sets.emplace_back(plans.begin() + static_cast<std::ptrdiff_t>(i),
                                      plans.begin() + static_cast<std::ptrdiff_t>(i) + ev_k);
                }
                const auto s = diversity_avg(sets);
                report = category_scores_to_json(s);
                table = format_category_scores("Diversity_avg", s);
            } else {
                if (ev_reference.empty()) throw Error(ErrorCode::InvalidArgument, "--reference is required");
                const auto g = read_plan_documents(ev_generated);
                const auto r = read_plan_documents(ev_reference);
                if (ev_metric == "stats") {
                    const auto s = plan_statistics(g, r);
                    report = statistics_to_json(s);
                    table = format_statistics(s);
                } else if (ev_metric == "coverage") {
                    std::vector<VectorFloorPlan> paired;
                    if (ev_nn) {
                        for (const auto& p : g) paired.push_back(r[nearest_by_boundary(p, r)]);
                    } else {
                        paired = r;
                    }
                    const auto s = coverage(g, paired);
                    report = category_scores_to_json(s);
                    table = format_category_scores(ev_nn ? "Coverage^NN_avg" : "Coverage^GT_avg", s);
                } else {
                    const double d = frechet_feature_distance(g, r);
                    report = Json{{"frechet_feature_distance", d}};
                    table = "frechet_feature_distance " + std::to_string(d) + "\n";
                }
            }
            report["metric"] = ev_metric;
            write_output(ev_out, ev_json ? report.dump(2) + "\n" : table);
            return 0;
        }
        if (*serve_cmd) {
            auto reg = std::make_shared<const ModelRegistry>(open_registry(sv_registry, "", ""));
            const auto colon = sv_bind.rfind(':');
            if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--bind must be host:port");
            const std::string host = sv_bind.substr(0, colon);
            int port = 0;
            try {
                port = std::stoi(sv_bind.substr(colon + 1));
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidArgument, "--bind port is not a number");
            }
            ServiceOptions so;
            so.max_in_flight = sv_in_flight;
            Service service(reg, so);
            std::cerr << "serving " << reg->ids().size() << " variants on " << host << ":" << port << "\n";
            if (!serve(service, host, port)) {
                std::cerr << "vecplan: cannot bind " << sv_bind << "\n";
                return kExitUsage;
            }
            return 0;
        }
        if (*reg_cmd) {
            Json doc{{"schema", kRegistrySchema}, {"variants", Json::array()}};
            if (fs::exists(rg_registry)) doc = Json::parse(read_text(rg_registry));
            const Checkpoint ck = load_checkpoint(rg_checkpoint);
            auto& list = doc["variants"];
            for (auto it = list.begin(); it != list.end();) {
                it = it->value("id", std::string()) == rg_id ? list.erase(it) : it + 1;
            }
            list.push_back({{"id", rg_id},
                            {"checkpoint", rg_checkpoint},
                            {"stage", std::string(stage_kind_name(ck.model.stage))},
                            {"conditions", ck.model.conditions.to_string()}});
            write_text_atomic(rg_registry, doc.dump(2) + "\n");
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "vecplan: " << e.what() << "\n";
        return exit_code_of(e.code());
    } catch (const Json::exception& e) {
        std::cerr << "vecplan: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "vecplan: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
