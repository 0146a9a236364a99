// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <thread>

#include "fixtures.hpp"
#include "tiny_models.hpp"
#include "vecplan/interchange.hpp"
#include "vecplan/service.hpp"

using namespace vecplan;
using vecplan::testing::tiny_registry;
using vecplan::testing::unit_square;

namespace {

Service make_service() {
    ServiceOptions o;
    o.seed = 123;
    return Service(std::make_shared<const ModelRegistry>(tiny_registry()), o);
}

Json call(Service& s, const char* method, const std::string& path, const Json& body, int expect = 200) {
    const auto r = s.handle(method, path, body.is_null() ? std::string() : body.dump());
    CHECK_MESSAGE(r.status == expect, r.body);
    return Json::parse(r.body);
}

Json boundary_conditions(int rooms) {
    Conditioning c;
    c.boundary = unit_square();
    c.room_count = rooms;
    return conditioning_to_json(c);
}

} // namespace

TEST_CASE("health and variants") {
    auto s = make_service();
    CHECK(call(s, "GET", "/v1/health", nullptr)["status"] == "ok");
    const auto v = call(s, "GET", "/v1/variants", nullptr);
    CHECK(v["schema"] == kRegistrySchema);
    CHECK(v["variants"].size() == tiny_registry().ids().size());
    call(s, "GET", "/v1/nothing", nullptr, 404);
    call(s, "DELETE", "/v1/health", nullptr, 404);
}

TEST_CASE("generation with a fixed seed is deterministic") {
    auto s = make_service();
    const Json body{{"conditions", boundary_conditions(4)}, {"seed", 42}, {"variant", "nodes/B+Rn+Rc"}};
    const auto a = call(s, "POST", "/v1/generate/plan", body);
    const auto b = call(s, "POST", "/v1/generate/plan", body);
    CHECK(a == b);
    CHECK(a["seed"] == 42);
    CHECK(a["schema"] == kResultSchema);
    CHECK(a["variants"]["nodes"] == "nodes/B+Rn+Rc");
    CHECK(a["nodes"].size() == 4);
    CHECK(a.contains("plan"));

    // Server-assigned seeds are echoed.
    Json unseeded = body;
    unseeded.erase("seed");
    const auto c = call(s, "POST", "/v1/generate/nodes", unseeded);
    CHECK(c["seed"].is_number_unsigned());
}

TEST_CASE("errors map to status codes with a schema") {
    auto s = make_service();
    const auto bad = call(s, "POST", "/v1/generate/plan", Json{{"conditions", 5}}, 400);
    CHECK(bad["schema"] == kErrorSchema);
    CHECK(s.handle("POST", "/v1/generate/plan", "{not json").status == 400);
    CHECK(s.handle("POST", "/v1/generate/house", "{}").status == 400);

    Json mismatch{{"conditions", boundary_conditions(4)}, {"variant", "adjacency/B+nodes"}, {"seed", 1}};
    CHECK(call(s, "POST", "/v1/generate/nodes", mismatch, 409)["code"] == "ConditioningMismatch");

    Json unknown{{"conditions", boundary_conditions(4)}, {"variant", "nodes/zzz"}, {"seed", 1}};
    const auto u = call(s, "POST", "/v1/generate/nodes", unknown, 400);
    CHECK(u["message"].get<std::string>().find("nodes/B+Rn+Rc") != std::string::npos);

    Json conditions = boundary_conditions(4);
    conditions["boundary"] = Json{{0, 0}, {1, 0}, {0.5, 1}, {0, 1}};
    const Json diagonal{{"conditions", conditions}, {"seed", 1}};
    CHECK(s.handle("POST", "/v1/generate/plan", diagonal.dump()).status == 422);
    call(s, "GET", "/v1/session/nope", nullptr, 404);
}

TEST_CASE("session pins survive a regeneration step") {
    auto s = make_service();
    const auto created = call(s, "POST", "/v1/session", Json{{"conditions", boundary_conditions(5)}, {"seed", 7}});
    const std::string id = created["session"];
    CHECK(created["schema"] == kSessionSchema);

    // Pinning before any result has nothing to copy.
    call(s, "PATCH", "/v1/session/" + id, Json{{"pin", {{{"stage", "nodes"}, {"slots", {0, 1}}}}}}, 409);

    const Json step{{"stage", "nodes"}, {"variant", "nodes/B+Rn+Rc"}};
    const auto first = call(s, "POST", "/v1/session/" + id + "/step", step);
    CHECK(first["session"] == id);
    const auto raw0 = stage_tensor_from_json(first["extensions"]["raw"]["nodes"], StageKind::Nodes);

    const auto patched = call(s, "PATCH", "/v1/session/" + id, Json{{"pin", {{{"stage", "nodes"}, {"slots", {0, 1}}}}}});
    CHECK(patched["pins"].size() == 1);

    Json again = step;
    again["seed"] = 999;
    const auto second = call(s, "POST", "/v1/session/" + id + "/step", again);
    const auto raw1 = stage_tensor_from_json(second["extensions"]["raw"]["nodes"], StageKind::Nodes);
    CHECK(raw1.values.topRows(2) == raw0.values.topRows(2));
    CHECK(raw1.values.bottomRows(6) != raw0.values.bottomRows(6));

    // Adjacency and partition steps build on the session's nodes.
    const auto adj = call(s, "POST", "/v1/session/" + id + "/step", Json{{"stage", "adjacency"}});
    CHECK(adj["nodes"] == second["nodes"]);
    const auto part = call(s, "POST", "/v1/session/" + id + "/step", Json{{"stage", "partition"}});
    CHECK(part["adjacency"] == adj["adjacency"]);
    CHECK(call(s, "GET", "/v1/session/" + id, nullptr)["steps"] == 4);

    call(s, "PATCH", "/v1/session/" + id, Json{{"unpin", {{{"stage", "nodes"}}}}});
    CHECK(call(s, "GET", "/v1/session/" + id, nullptr)["pins"].empty());
}

TEST_CASE("concurrent sessions stay isolated") {
    auto s = make_service();
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
        ids.push_back(call(s, "POST", "/v1/session", Json{{"conditions", boundary_conditions(3 + i)}, {"seed", i}})["session"]);
    }
    std::vector<std::thread> workers;
    std::vector<int> failures(4, 0);
    for (int i = 0; i < 4; ++i) {
        workers.emplace_back([&, i] {
            for (int round = 0; round < 3; ++round) {
                const auto r = s.handle("POST", "/v1/session/" + ids[static_cast<std::size_t>(i)] + "/step",
                                        Json{{"stage", "nodes"}, {"variant", "nodes/B+Rn+Rc"}}.dump());
                const auto j = Json::parse(r.body);
                if (r.status != 200 || j["session"] != ids[static_cast<std::size_t>(i)] ||
                    j["nodes"].size() != static_cast<std::size_t>(3 + i)) {
                    ++failures[static_cast<std::size_t>(i)];
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    for (int i = 0; i < 4; ++i) {
        CHECK(failures[static_cast<std::size_t>(i)] == 0);
        const auto st = call(s, "GET", "/v1/session/" + ids[static_cast<std::size_t>(i)], nullptr);
        CHECK(st["steps"] == 3);
        CHECK(st["conditions"]["room_count"] == 3 + i);
    }
}

TEST_CASE("a response plan re-submitted as conditions round-trips") {
    auto s = make_service();
    const auto r = call(s, "POST", "/v1/generate/plan", Json{{"conditions", boundary_conditions(4)}, {"seed", 3}});
    const auto plan = plan_from_json(r["plan"]);
    const auto cs = ConditionSet::parse("B+Rn+Rc+Rsl+Ra");
    const auto c = Conditioning::from_plan(plan, cs);
    const auto back = conditioning_from_json(conditioning_to_json(c));
    CHECK(conditioning_to_json(back) == conditioning_to_json(c));
    CHECK(*back.boundary == plan.boundary);
    CHECK(*back.adjacency == plan.adjacency);

    // The same conditions drive a partition request; the nodes come back unchanged.
    const auto again =
        call(s, "POST", "/v1/generate/partition", Json{{"conditions", conditioning_to_json(c)}, {"seed", 4}});
    CHECK(nodes_from_json(again["nodes"]) == plan.nodes());
}
