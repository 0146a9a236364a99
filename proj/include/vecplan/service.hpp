// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "vecplan/pipeline.hpp"

namespace vecplan {

inline constexpr const char* kSessionSchema = "vecplan.session/1";
inline constexpr const char* kErrorSchema = "vecplan.error/1";

struct HttpResponse {
    int status = 200;
    std::string body;
};

struct ServiceOptions {
    // Generations allowed to run at once; further requests wait.
    int max_in_flight = 2;
    // Seed for server-assigned seeds; unset draws from std::random_device.
    std::optional<std::uint64_t> seed;
};

// Interactive state: pinned elements are clamped into every later step.
struct SessionState {
    std::string id;
    Conditioning conditioning;
    std::map<StageKind, PartialInput> pins;
    std::optional<PipelineResult> last;
    std::uint64_t base_seed = 0;
    std::uint64_t counter = 0;
};

// Transport-free request handling; serve() binds it to HTTP.
//   POST  /v1/generate/{nodes,adjacency,partition,plan}   body: request document
//   POST  /v1/session                                     body: {"conditions", "seed"}
//   GET   /v1/session/{id}
//   PATCH /v1/session/{id}  body: {"conditions", "pin": [...], "unpin": [...]}
//   POST  /v1/session/{id}/step  body: {"stage", "seed"}
//   GET   /v1/variants, GET /v1/health
// Errors: 400 malformed, 404 unknown route or session, 409 conditioning
// mismatch, 422 geometric validation failure, 500 with an opaque id.
class Service {
public:
    explicit Service(std::shared_ptr<const ModelRegistry> registry, ServiceOptions options = {});

    HttpResponse handle(std::string_view method, std::string_view path, const std::string& body);

private:
    struct Session {
        std::mutex mutex;
        SessionState state;
    };

    HttpResponse generate(std::string_view target, const Json& body);
    HttpResponse create_session(const Json& body);
    HttpResponse patch_session(Session& s, const Json& body);
    HttpResponse step_session(Session& s, const Json& body);
    Json session_to_json(const SessionState& s) const;
    std::shared_ptr<Session> find_session(std::string_view id);
    PipelineResult run(const GenerationRequest& request);
    std::uint64_t next_seed();

    std::shared_ptr<const ModelRegistry> registry_;
    ServiceOptions options_;

    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
    std::uint64_t session_counter_ = 0;

    std::mutex seed_mutex_;
    std::mt19937_64 seed_source_;

    std::mutex flight_mutex_;
    std::condition_variable flight_cv_;
    int in_flight_ = 0;
};

// Blocks serving HTTP until stop is requested or the listener fails.
// Returns false when the address cannot be bound.
bool serve(Service& service, const std::string& host, int port);

} // namespace vecplan
