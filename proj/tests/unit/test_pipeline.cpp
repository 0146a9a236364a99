// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "tiny_models.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/pipeline.hpp"
#include "vecplan/synthetic.hpp"

using namespace vecplan;
using vecplan::testing::error_code_of;
using vecplan::testing::tiny_checkpoint;
using vecplan::testing::tiny_registry;
using vecplan::testing::unit_square;
namespace fs = std::filesystem;

namespace {

RoomBox box(double x1, double y1, double x2, double y2, RoomCategory c) { return {{x1, y1}, {x2, y2}, c}; }

AdjacencyMatrix empty_adjacency(int n) {
    AdjacencyMatrix a;
    a.room_count = n;
    return a;
}

void check_partition_of(const VectorFloorPlan& p) {
    const auto c = check_partition(p);
    CHECK(c.area_error <= 0.01 * polygon_area(p.boundary.corners));
    CHECK(c.overlap_area < 1e-12);
}

Conditioning boundary_only() {
    Conditioning c;
    c.boundary = unit_square();
    return c;
}

} // namespace

TEST_CASE("apply_partial examples") {
    const auto s = build_schedule(ScheduleKind::Linear, 1000, 1e-4, 0.02);
    Rng rng(1);
    const StageTensor x = StageTensor::filled(StageKind::Nodes, 0.25);
    const StageTensor partial = StageTensor::filled(StageKind::Nodes, -0.5);
    std::vector<std::uint8_t> none(8, 0), all(8, 1), half(8, 0);
    CHECK(apply_partial(x, partial, none, 400, s, rng).values == x.values);
    CHECK(apply_partial(x, partial, all, 0, s, rng).values == partial.values);
    for (int i = 0; i < 8; i += 2) half[static_cast<std::size_t>(i)] = 1;
    const auto mixed = apply_partial(x, partial, half, 300, s, rng);
    for (int r = 0; r < 8; ++r) {
        if (r % 2 == 0) CHECK((mixed.values.row(r).array() != x.values.row(r).array()).all());
        else CHECK(mixed.values.row(r) == x.values.row(r));
    }
    CHECK(error_code_of([&] {
              apply_partial(x, StageTensor::filled(StageKind::Adjacency, 0.0), std::vector<std::uint8_t>(28), 1, s, rng);
          }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("stage sampling is seeded and snapshots follow the request") {
    const LoadedVariant v("n", tiny_checkpoint(StageKind::Nodes, "B+Rn+Rc"));
    Conditioning c = boundary_only();
    c.room_count = 4;
    SampleOptions o;
    o.snapshot_ts = {50, 20, 10, 0};
    const auto a = sample_stage(v, c, 9, o);
    const auto b = sample_stage(v, c, 9, o);
    CHECK(a.tensor.values == b.tensor.values);
    CHECK(sample_stage(v, c, 10, o).tensor.values != a.tensor.values);
    REQUIRE(a.snapshots.size() == 4);
    CHECK(a.snapshots[0].t == 50);
    CHECK(a.snapshots[1].t == 20);
    CHECK(a.snapshots[2].t == 10);
    CHECK(a.snapshots[3].t == 0);
    CHECK(a.snapshots[3].x.values == a.tensor.values);
    CHECK(a.tensor.values.cwiseAbs().maxCoeff() <= 1.0);
    o.snapshot_ts = {101};
    CHECK(error_code_of([&] { sample_stage(v, c, 9, o); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("batched sampling matches single requests") {
    const LoadedVariant v("n", tiny_checkpoint(StageKind::Nodes, "B+Rn+Rc"));
    std::vector<Conditioning> cs{boundary_only(), boundary_only(), boundary_only()};
    cs[1].room_count = 3;
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const auto batch = sample_stage_batch(v, cs, seeds, std::vector<SampleOptions>(3));
    for (std::size_t i = 0; i < 3; ++i) {
        const auto single = sample_stage(v, cs[i], seeds[i]);
        CHECK((single.tensor.values - batch[i].tensor.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("full clamping returns the partial input exactly") {
    const LoadedVariant v("a", tiny_checkpoint(StageKind::Adjacency, "B+Rn+Rc+Rsl"));
    const auto plan = vecplan::testing::two_room_plan();
    const auto target = encode_adjacency(plan.adjacency);
    SampleOptions o;
    o.clamp = PartialInput{target, std::vector<std::uint8_t>(28, 1)};
    const auto out = sample_stage(v, Conditioning::from_plan(plan, ConditionSet::parse("B+Rn+Rc+Rsl")), 4, o);
    const Matrix mask = expand_slot_mask(StageKind::Adjacency, o.clamp->known);
    CHECK(out.tensor.values.cwiseProduct(mask) == target.values.cwiseProduct(mask));
    CHECK(decode_adjacency(out.tensor, 2) == plan.adjacency);
}

TEST_CASE("postprocess keeps an exact partition unchanged") {
    const std::vector<RoomBox> boxes{box(0, 0, 0.5, 1, RoomCategory::Living), box(0.5, 0, 1, 1, RoomCategory::Bedroom)};
    AdjacencyMatrix adj = empty_adjacency(2);
    adj.connect(0, 1);
    const auto p = postprocess(boxes, unit_square(), adj);
    REQUIRE(p.rooms.size() == 2);
    CHECK(p.rooms[0].region == Region{{0, 0, 0.5, 1}});
    CHECK(p.rooms[1].region == Region{{0.5, 0, 1, 1}});
    CHECK(p.adjacency.connected(0, 1));
    check_partition_of(p);
}

TEST_CASE("postprocess snaps a small gap shut") {
    const std::vector<RoomBox> boxes{box(0, 0, 0.48, 1, RoomCategory::Living), box(0.5, 0, 1, 1, RoomCategory::Bedroom)};
    const auto p = postprocess(boxes, unit_square(), empty_adjacency(2));
    REQUIRE(p.rooms.size() == 2);
    // The facing edges 0.48 and 0.50 share a cluster and meet at 0.49.
    CHECK(p.rooms[0].region == Region{{0, 0, 0.49, 1}});
    CHECK(p.rooms[1].region == Region{{0.49, 0, 1, 1}});
    check_partition_of(p);
}

TEST_CASE("postprocess fills the ring around a single inner box") {
    const std::vector<RoomBox> boxes{box(0.2, 0.2, 0.8, 0.8, RoomCategory::Living)};
    const auto p = postprocess(boxes, unit_square(), empty_adjacency(1));
    REQUIRE(p.rooms.size() == 1);
    CHECK(region_area(p.rooms[0].region) == doctest::Approx(1.0).epsilon(1e-12));
    check_partition_of(p);
}

TEST_CASE("postprocess resolves overlaps by shrinking the later box") {
    const std::vector<RoomBox> boxes{box(0, 0, 0.6, 1, RoomCategory::Living), box(0.4, 0, 1, 1, RoomCategory::Bedroom)};
    const auto p = postprocess(boxes, unit_square(), empty_adjacency(2));
    REQUIRE(p.rooms.size() == 2);
    CHECK(p.rooms[0].region == Region{{0, 0, 0.6, 1}});
    CHECK(p.rooms[1].region == Region{{0.6, 0, 1, 1}});
}

TEST_CASE("postprocess output is a partition for random boxes") {
    GeneratorParams gp;
    gp.seed = 31;
    Rng rng(8);
    for (const auto& plan : generate_dataset(gp, 60)) {
        std::vector<RoomBox> boxes = plan.boxes();
        for (auto& b : boxes) {
            b.top_left.x = std::clamp(b.top_left.x + rng.uniform(-0.03, 0.03), 0.0, 1.0);
            b.top_left.y = std::clamp(b.top_left.y + rng.uniform(-0.03, 0.03), 0.0, 1.0);
            b.bottom_right.x = std::clamp(b.bottom_right.x + rng.uniform(-0.03, 0.03), 0.0, 1.0);
            b.bottom_right.y = std::clamp(b.bottom_right.y + rng.uniform(-0.03, 0.03), 0.0, 1.0);
        }
        const auto p = postprocess(boxes, plan.boundary, plan.adjacency);
        check_partition_of(p);
        CHECK(p.adjacency.valid());
    }
}

TEST_CASE("postprocess rejects boxes outside the boundary") {
    const auto l = Boundary::make({{0, 0}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}},
                                  {{{0.125, 0}, {0.25, 0}, {0.25, 0.0625}, {0.125, 0.0625}}});
    const std::vector<RoomBox> boxes{box(0.7, 0.7, 0.9, 0.9, RoomCategory::Living)};
    CHECK(error_code_of([&] { postprocess(boxes, l, empty_adjacency(1)); }) == ErrorCode::DegenerateInput);
}

TEST_CASE("requested room counts and categories pass through") {
    const auto& reg = tiny_registry();
    GenerationRequest req;
    req.conditioning = boundary_only();
    req.conditioning.room_count = 5;
    req.variant = "nodes/B+Rn+Rc";
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        req.seed = seed;
        const auto r = generate_plan(req, reg);
        CHECK(r.plan.has_value());
        CHECK(r.nodes.size() == 5);
        check_partition_of(*r.plan);
    }

    const std::vector<RoomCategory> cats{RoomCategory::Living, RoomCategory::Bedroom, RoomCategory::Bedroom,
                                         RoomCategory::Kitchen, RoomCategory::Bathroom};
    req.conditioning.categories = cats;
    req.target = GenerationTarget::Nodes;
    const auto r = generate_plan(req, reg);
    REQUIRE(r.nodes.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.nodes[i].category == cats[i]);
    CHECK(r.variants.at(StageKind::Nodes) == "nodes/B+Rn+Rc");
}

TEST_CASE("full plans are deterministic and differ across seeds") {
    const auto& reg = tiny_registry();
    GenerationRequest req;
    req.conditioning = boundary_only();
    req.seed = 5;
    const auto a = generate_plan(req, reg);
    const auto b = generate_plan(req, reg);
    CHECK(result_to_json(a).dump() == result_to_json(b).dump());
    CHECK(a.snapshots.at(StageKind::Nodes).size() == 4);
    CHECK(a.variants.size() == 3);
    req.seed = 6;
    CHECK(result_to_json(generate_plan(req, reg)).dump() != result_to_json(a).dump());
}

TEST_CASE("generation errors carry their stage") {
    const auto& reg = tiny_registry();
    GenerationRequest req;
    CHECK(error_code_of([&] { generate_plan(req, reg); }) == ErrorCode::InvalidArgument);
    req.conditioning = boundary_only();
    req.variant = "nodes/none";
    CHECK(error_code_of([&] { generate_plan(req, reg); }) == ErrorCode::MissingCheckpoint);
    req.variant = "adjacency/B+nodes";
    CHECK(error_code_of([&] { generate_plan(req, reg); }) == ErrorCode::ConditioningMismatch);

    req.variant.clear();
    req.partial[StageKind::Nodes] = PartialInput{StageTensor::filled(StageKind::Nodes, -1.0), std::vector<std::uint8_t>(8)};
    req.variant = "nodes/B+Rn+Rc";
    try {
        generate_plan(req, reg);
        FAIL("expected ConditioningMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConditioningMismatch);
        CHECK(std::string(e.what()).find("nodes") != std::string::npos);
    }
    req.clamp_partial = true;
    CHECK_NOTHROW(generate_plan(req, reg));

    ModelRegistry empty;
    GenerationRequest plain;
    plain.conditioning = boundary_only();
    CHECK(error_code_of([&] { generate_plan(plain, empty); }) == ErrorCode::MissingCheckpoint);
}

TEST_CASE("clamped partial nodes are preserved exactly") {
    const auto& reg = tiny_registry();
    const auto plan = vecplan::testing::two_room_plan();
    GenerationRequest req;
    req.target = GenerationTarget::Nodes;
    req.conditioning = boundary_only();
    req.variant = "nodes/B+Rn+Rc+P";
    req.clamp_partial = true;
    std::vector<std::uint8_t> known(8, 0);
    known[0] = 1;
    req.partial[StageKind::Nodes] = PartialInput{encode_nodes(plan.nodes()), known};
    const auto r = generate_plan(req, reg);
    CHECK(r.raw.at(StageKind::Nodes).values.row(0) == encode_nodes(plan.nodes()).values.row(0));
}

TEST_CASE("nodes given in the conditioning skip node sampling") {
    const auto& reg = tiny_registry();
    const auto plan = vecplan::testing::two_room_plan();
    GenerationRequest req;
    req.conditioning = Conditioning::from_plan(plan, ConditionSet::parse("B+Rn+Rc+Rsl"));
    const auto r = generate_plan(req, reg);
    CHECK(r.nodes == plan.nodes());
    CHECK(r.raw.count(StageKind::Nodes) == 0);
    CHECK(r.raw.count(StageKind::Adjacency) == 1);
}

TEST_CASE("pass-through nodes honour R_n and R_c") {
    StageTensor raw = StageTensor::filled(StageKind::Nodes, -1.0);
    for (int r = 0; r < 8; ++r) raw.values(r, 0) = -0.9 + 0.2 * r;
    Conditioning c;
    c.room_count = 3;
    auto nodes = pass_through_nodes(raw, c);
    CHECK(nodes.size() == 3);
    c.categories = std::vector<RoomCategory>{RoomCategory::Living, RoomCategory::Kitchen, RoomCategory::Balcony};
    nodes = pass_through_nodes(raw, c);
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].category == RoomCategory::Living);
    CHECK(nodes[1].category == RoomCategory::Kitchen);
    CHECK(nodes[2].category == RoomCategory::Balcony);
}

TEST_CASE("requests and results survive a JSON round-trip") {
    const auto plan = vecplan::testing::two_room_plan();
    GenerationRequest req;
    req.target = GenerationTarget::Partition;
    req.conditioning = Conditioning::from_plan(plan, ConditionSet::parse("B+Rn+Rc+Rsl+Ra"));
    req.seed = 77;
    req.variant = "partition/B+nodes+Ra";
    req.clamp_partial = true;
    req.snapshot_ts = {20, 0};
    std::vector<std::uint8_t> known(8, 0);
    known[1] = 1;
    req.partial[StageKind::Boxes] = PartialInput{encode_boxes(plan.boxes()), known};
    const auto j = request_to_json(req);
    const auto back = request_from_json(j);
    CHECK(request_to_json(back) == j);
    CHECK(back.seed == 77);
    CHECK(back.partial.at(StageKind::Boxes).known == known);
    CHECK(*back.conditioning.adjacency == plan.adjacency);

    const auto& reg = tiny_registry();
    const auto res = generate_plan(req, reg);
    const auto rj = result_to_json(res);
    CHECK(rj.contains("extensions"));
    CHECK(rj["extensions"].contains("raw_boxes"));
    CHECK(rj["seed"] == 77);

    CHECK(generation_target_from_name("plan") == GenerationTarget::FullPlan);
    CHECK(generation_target_from_name("full_plan") == GenerationTarget::FullPlan);
    CHECK(error_code_of([] { generation_target_from_name("house"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("registries load from files") {
    const auto dir = fs::temp_directory_path() / ("vecplan_test_reg_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    save_checkpoint(dir / "n.ckpt", tiny_checkpoint(StageKind::Nodes, "B"));
    auto write = [&](const std::string& text) {
        std::ofstream(dir / "registry.json") << text;
        return dir / "registry.json";
    };
    const auto ok = ModelRegistry::load(
        write(R"({"schema": "vecplan.registry/1", "variants": [{"id": "nodes/B", "checkpoint": "n.ckpt", "stage": "nodes", "conditions": "B"}]})"));
    CHECK(ok.ids() == std::vector<std::string>{"nodes/B"});
    CHECK(ok.to_json()["variants"][0]["train_steps"] == 0);
    CHECK(error_code_of([&] {
              ModelRegistry::load(write(R"({"schema": "vecplan.registry/1", "variants": [{"id": "x", "checkpoint": "gone.ckpt"}]})"));
          }) == ErrorCode::MissingCheckpoint);
    CHECK(error_code_of([&] {
              ModelRegistry::load(write(
                  R"({"schema": "vecplan.registry/1", "variants": [{"id": "x", "checkpoint": "n.ckpt", "stage": "adjacency"}]})"));
          }) == ErrorCode::ConditioningMismatch);
    CHECK(error_code_of([&] { ModelRegistry::load(write("{")); }) == ErrorCode::CorruptRecord);
    CHECK(error_code_of([&] { ok.get("nope"); }) == ErrorCode::MissingCheckpoint);
    fs::remove_all(dir);
}
