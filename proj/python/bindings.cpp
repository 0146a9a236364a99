// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

// Thin bindings over the C++ library. Structured values cross the boundary as
// JSON text so the Python side sees the same schema as the CLI and HTTP API.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vecplan/codec.hpp"
#include "vecplan/diffusion.hpp"
#include "vecplan/errors.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/metrics.hpp"
#include "vecplan/pipeline.hpp"
#include "vecplan/synthetic.hpp"
#include "vecplan/training.hpp"

namespace py = pybind11;
using namespace vecplan;

namespace {

std::vector<VectorFloorPlan> plans_from_text(const std::vector<std::string>& texts) {
    std::vector<VectorFloorPlan> plans;
    plans.reserve(texts.size());
    for (const auto& t : texts) plans.push_back(plan_from_json(Json::parse(t)));
    return plans;
}

std::vector<std::string> plans_to_text(const std::vector<VectorFloorPlan>& plans) {
    std::vector<std::string> out;
    out.reserve(plans.size());
    for (const auto& p : plans) out.push_back(plan_to_json(p).dump());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "vecplan native core";

    static py::exception<Error> error(m, "VecplanError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
            exc.attr("code") = std::string(error_code_name(e.code()));
            PyErr_SetObject(error.ptr(), exc.ptr());
        } catch (const Json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def(
        "generate_dataset",
        [](std::size_t count, std::uint64_t seed) {
            GeneratorParams gp;
            gp.seed = seed;
            return plans_to_text(generate_dataset(gp, count));
        },
        py::arg("count"), py::arg("seed") = 1, "Synthetic plans as JSON strings.");

    m.def(
        "encode_plan",
        [](const std::string& text) {
            const auto plan = plan_from_json(Json::parse(text));
            const auto [b, e] = encode_boundary(plan.boundary);
            py::dict d;
            d["boundary"] = Matrix(b.values);
            d["entrance"] = Matrix(e.values);
            d["nodes"] = Matrix(encode_nodes(plan.nodes()).values);
            d["adjacency"] = Matrix(encode_adjacency(plan.adjacency).values);
            d["boxes"] = Matrix(encode_boxes(plan.boxes()).values);
            return d;
        },
        py::arg("plan"), "Stage tensors of a plan, keyed by stage.");

    m.def(
        "schedule",
        [](const std::string& kind, int timesteps, double beta_start, double beta_end) {
            const auto s = build_schedule(schedule_kind_from_name(kind), timesteps, beta_start, beta_end);
            py::dict d;
            d["beta"] = s.beta;
            d["alpha_bar"] = s.alpha_bar;
            return d;
        },
        py::arg("kind") = "linear", py::arg("timesteps") = 1000, py::arg("beta_start") = 1e-4,
        py::arg("beta_end") = 0.02);

    m.def(
        "forward_noise",
        [](const Matrix& x0, int t, const Matrix& eps, const std::string& kind, int timesteps) {
            return forward_noise(x0, t, eps, build_schedule(schedule_kind_from_name(kind), timesteps, 1e-4, 0.02));
        },
        py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("kind") = "linear", py::arg("timesteps") = 1000);

    m.def(
        "estimate_x0",
        [](const Matrix& xt, const Matrix& eps, int t, const std::string& kind, int timesteps) {
            return estimate_x0(xt, eps, t, build_schedule(schedule_kind_from_name(kind), timesteps, 1e-4, 0.02));
        },
        py::arg("x_t"), py::arg("eps_hat"), py::arg("t"), py::arg("kind") = "linear", py::arg("timesteps") = 1000);

    m.def("confirmed_count", &confirmed_count, py::arg("n"), py::arg("t"), py::arg("timesteps") = 1000);

    m.def(
        "rectilinear_iou",
        [](const std::vector<std::array<double, 4>>& a, const std::vector<std::array<double, 4>>& b) {
            auto region = [](const std::vector<std::array<double, 4>>& rs) {
                Region r;
                for (const auto& q : rs) r = region_union(r, Region{{q[0], q[1], q[2], q[3]}});
                return r;
            };
            return rectilinear_iou(region(a), region(b));
        },
        py::arg("a"), py::arg("b"), "IoU of two unions of (x1, y1, x2, y2) rectangles.");

    m.def(
        "plan_statistics",
        [](const std::vector<std::string>& generated, const std::vector<std::string>& reference) {
            return statistics_to_json(plan_statistics(plans_from_text(generated), plans_from_text(reference))).dump();
        },
        py::arg("generated"), py::arg("reference"));

    m.def(
        "frechet_distance",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
            return frechet_feature_distance(plans_from_text(a), plans_from_text(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "train",
        [](const std::vector<std::string>& plans, const std::string& stage, const std::string& conditions,
           const std::string& config, const std::filesystem::path& checkpoint) {
            py::gil_scoped_release release;
            TrainOptions options;
            options.checkpoint_path = checkpoint;
            const auto r = train_component(plans_from_text(plans), stage_kind_from_name(stage),
                                           ConditionSet::parse(conditions), parse_train_config(config), options);
            std::vector<std::string> log;
            for (const auto& rec : r.log) log.push_back(record_to_json(rec).dump());
            return log;
        },
        py::arg("plans"), py::arg("stage"), py::arg("conditions"), py::arg("config"), py::arg("checkpoint"),
        "Trains one variant, writes the checkpoint and returns the log as JSON lines.");

    py::class_<ModelRegistry, std::shared_ptr<ModelRegistry>>(m, "Registry")
        .def(py::init<>())
        .def_static("load", &ModelRegistry::load, py::arg("path"))
        .def(
            "add",
            [](ModelRegistry& r, const std::string& id, const std::filesystem::path& path) {
                r.add(id, load_checkpoint(path), path);
            },
            py::arg("id"), py::arg("checkpoint"))
        .def("ids", &ModelRegistry::ids)
        .def(
            "generate",
            [](const ModelRegistry& r, const std::string& request) {
                const auto req = request_from_json(Json::parse(request));
                PipelineResult result;
                {
                    py::gil_scoped_release release;
                    result = generate_plan(req, r);
                }
                return result_to_json(result).dump();
            },
            py::arg("request"), "Runs one generation request (JSON) and returns the result as JSON.");
}
