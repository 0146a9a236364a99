// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/service.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <httplib.h>

#include "vecplan/errors.hpp"

namespace vecplan {

namespace {

int status_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::TooManyRooms:
    case ErrorCode::InvalidCategory:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::CorruptRecord:
    case ErrorCode::MissingCheckpoint:
    case ErrorCode::InvalidScheduleParams: return 400;
    case ErrorCode::ConditioningMismatch: return 409;
    case ErrorCode::MalformedBoundary:
    case ErrorCode::DegenerateInput: return 422;
    default: return 500;
    }
}

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
    return {status, Json{{"schema", kErrorSchema}, {"code", code}, {"message", message}}.dump()};
}

HttpResponse ok(const Json& j) { return {200, j.dump()}; }

std::string hex_id(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    while (!path.empty()) {
        if (path.front() == '/') {
            path.remove_prefix(1);
            continue;
        }
        const auto slash = path.find('/');
        parts.push_back(path.substr(0, slash));
        if (slash == std::string_view::npos) break;
        path.remove_prefix(slash);
    }
    return parts;
}

Json parse_body(const std::string& body) {
    if (body.empty()) return Json::object();
    try {
        Json j = Json::parse(body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
        return j;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
}

} // namespace

Service::Service(std::shared_ptr<const ModelRegistry> registry, ServiceOptions options)
    : registry_(std::move(registry)), options_(options) {
    if (!registry_) throw Error(ErrorCode::InvalidArgument, "service needs a registry");
    if (options_.max_in_flight < 1) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be positive");
    seed_source_.seed(options_.seed ? *options_.seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}());
}

std::uint64_t Service::next_seed() {
    const std::lock_guard lock(seed_mutex_);
    return seed_source_() >> 11;  // keep seeds exact in JSON doubles
}

PipelineResult Service::run(const GenerationRequest& request) {
    {
        std::unique_lock lock(flight_mutex_);
        flight_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        Service* s;
        ~Release() {
            {
                const std::lock_guard lock(s->flight_mutex_);
                --s->in_flight_;
            }
            s->flight_cv_.notify_one();
        }
    } release{this};
    return generate_plan(request, *registry_);
}

HttpResponse Service::handle(std::string_view method, std::string_view path, const std::string& body) {
    try {
        const auto parts = split_path(path);
        if (parts.size() < 2 || parts[0] != "v1") {
            return error_response(404, "NotFound", "unknown route");
        }
        const auto& what = parts[1];
        if (what == "health" && parts.size() == 2 && method == "GET") {
            return ok({{"status", "ok"}, {"variants", registry_->ids().size()}});
        }
        if (what == "variants" && parts.size() == 2 && method == "GET") {
            return ok(registry_->to_json());
        }
        if (what == "generate" && parts.size() == 3 && method == "POST") {
            return generate(parts[2], parse_body(body));
        }
        if (what == "session") {
            if (parts.size() == 2 && method == "POST") return create_session(parse_body(body));
            if (parts.size() < 3 || parts.size() > 4) return error_response(404, "NotFound", "unknown route");
            auto s = find_session(parts[2]);
            if (!s) return error_response(404, "NotFound", "unknown session " + std::string(parts[2]));
            const std::lock_guard lock(s->mutex);
            if (parts.size() == 3 && method == "GET") return ok(session_to_json(s->state));
            if (parts.size() == 3 && method == "PATCH") return patch_session(*s, parse_body(body));
            if (parts.size() == 4 && parts[3] == "step" && method == "POST") return step_session(*s, parse_body(body));
        }
        return error_response(404, "NotFound", "unknown route");
    } catch (const Error& e) {
        const int status = status_of(e.code());
        if (status == 500) {
            const auto id = hex_id(next_seed());
            std::fprintf(stderr, "vecplan serve: error %s: %s\n", id.c_str(), e.what());
            return error_response(500, "Internal", "internal error " + id);
        }
        return error_response(status, error_code_name(e.code()), e.what());
    } catch (const std::exception& e) {
        const auto id = hex_id(next_seed());
        std::fprintf(stderr, "vecplan serve: error %s: %s\n", id.c_str(), e.what());
        return error_response(500, "Internal", "internal error " + id);
    }
}

HttpResponse Service::generate(std::string_view target, const Json& body) {
    GenerationRequest req = request_from_json(body);
    req.target = generation_target_from_name(target);
    if (!body.contains("seed")) req.seed = next_seed();
    return ok(result_to_json(run(req)));
}

std::shared_ptr<Service::Session> Service::find_session(std::string_view id) {
    const std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

Json Service::session_to_json(const SessionState& s) const {
    Json pins = Json::array();
    for (const auto& [k, p] : s.pins) pins.push_back(partial_to_json(p));
    Json j{{"schema", kSessionSchema},
           {"session", s.id},
           {"seed", s.base_seed},
           {"steps", s.counter},
           {"conditions", conditioning_to_json(s.conditioning)},
           {"pins", std::move(pins)}};
    if (s.last) j["last"] = result_to_json(*s.last);
    return j;
}

HttpResponse Service::create_session(const Json& body) {
    auto session = std::make_shared<Session>();
    auto& st = session->state;
    if (body.contains("conditions")) st.conditioning = conditioning_from_json(body.at("conditions"));
    if (st.conditioning.partial) throw Error(ErrorCode::InvalidArgument, "sessions take pins, not partial conditions");
    st.base_seed = body.contains("seed") ? body.at("seed").get<std::uint64_t>() : next_seed();
    {
        const std::lock_guard lock(sessions_mutex_);
        st.id = "s" + hex_id(mix_seed(st.base_seed, ++session_counter_));
        sessions_[st.id] = session;
    }
    return ok(session_to_json(st));
}

HttpResponse Service::patch_session(Session& s, const Json& body) {
    SessionState next = s.state;
    try {
        if (body.contains("conditions")) {
            next.conditioning = conditioning_from_json(body.at("conditions"));
            if (next.conditioning.partial) {
                throw Error(ErrorCode::InvalidArgument, "sessions take pins, not partial conditions");
            }
        }
        if (body.contains("boundary")) {
            next.conditioning.boundary = boundary_from_json(body);
        }
        if (body.contains("unpin")) {
            for (const auto& u : body.at("unpin")) {
                const StageKind k = stage_kind_from_name(u.at("stage").get<std::string>());
                const auto it = next.pins.find(k);
                if (it == next.pins.end()) continue;
                if (!u.contains("slots")) {
                    next.pins.erase(it);
                    continue;
                }
                for (int slot : u.at("slots").get<std::vector<int>>()) {
                    if (slot < 0 || slot >= static_cast<int>(it->second.known.size())) {
                        throw Error(ErrorCode::InvalidArgument, "unpin slot out of range");
                    }
                    it->second.known[static_cast<std::size_t>(slot)] = 0;
                }
            }
        }
        if (body.contains("pin")) {
            for (const auto& p : body.at("pin")) {
                const StageKind k = stage_kind_from_name(p.at("stage").get<std::string>());
                StageTensor source;
                if (p.contains("values")) {
                    source = stage_tensor_from_json(p.at("values"), k);
                } else if (next.last && next.last->raw.count(k)) {
                    source = next.last->raw.at(k);
                } else {
                    throw Error(ErrorCode::ConditioningMismatch,
                                "nothing to pin: no " + std::string(stage_kind_name(k)) + " result yet and no values");
                }
                auto [it, fresh] = next.pins.try_emplace(k);
                PartialInput& pin = it->second;
                if (fresh) {
                    pin.values = StageTensor::filled(k, 0.0);
                    pin.known.assign(slot_map(k).size(), 0);
                }
                const auto slots = slot_map(k);
                for (int slot : p.at("slots").get<std::vector<int>>()) {
                    if (slot < 0 || slot >= static_cast<int>(slots.size())) {
                        throw Error(ErrorCode::InvalidArgument, "pin slot out of range");
                    }
                    pin.known[static_cast<std::size_t>(slot)] = 1;
                    std::vector<std::uint8_t> one(slots.size(), 0);
                    one[static_cast<std::size_t>(slot)] = 1;
                    const Matrix mask = expand_slot_mask(k, one);
                    pin.values.values = (mask.array() > 0.5).select(source.values, pin.values.values);
                }
            }
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("session patch: ") + e.what());
    }
    s.state = std::move(next);
    return ok(session_to_json(s.state));
}

HttpResponse Service::step_session(Session& s, const Json& body) {
    auto& st = s.state;
    GenerationRequest req;
    try {
        req.target = generation_target_from_name(body.value("stage", std::string("plan")));
        req.variant = body.value("variant", std::string());
        req.adjacency_variant = body.value("adjacency_variant", std::string());
        req.partition_variant = body.value("partition_variant", std::string());
        req.seed = body.contains("seed") ? body.at("seed").get<std::uint64_t>() : mix_seed(st.base_seed, st.counter + 1);
        if (body.contains("snapshot_ts")) req.snapshot_ts = body.at("snapshot_ts").get<std::vector<int>>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("session step: ") + e.what());
    }
    req.conditioning = st.conditioning;
    req.clamp_partial = true;
    for (const auto& [k, p] : st.pins) {
        if (std::any_of(p.known.begin(), p.known.end(), [](auto v) { return v != 0; })) req.partial[k] = p;
    }
    // Later stages build on the nodes (and adjacency) of the previous step.
    if ((req.target == GenerationTarget::Adjacency || req.target == GenerationTarget::Partition) && st.last &&
        !st.last->nodes.empty() && !(st.conditioning.categories && st.conditioning.sizes_locations)) {
        req.nodes = st.last->nodes;
        if (req.target == GenerationTarget::Partition && st.last->adjacency && !req.conditioning.adjacency) {
            req.conditioning.adjacency = st.last->adjacency;
        }
    }
    PipelineResult res = run(req);
    ++st.counter;
    st.last = res;
    Json j = result_to_json(res);
    j["session"] = st.id;
    return ok(j);
}

bool serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    auto bridge = [&service](const httplib::Request& req, httplib::Response& res) {
        const HttpResponse r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    server.Get(R"(/v1/.*)", bridge);
    server.Post(R"(/v1/.*)", bridge);
    server.Patch(R"(/v1/.*)", bridge);
    return server.listen(host, port);
}

} // namespace vecplan
