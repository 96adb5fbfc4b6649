#pragma once

#include "cdf/serialize.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace cdf {

struct ServiceOptions {
    std::filesystem::path data_dir;  // empty: in-memory only
    int solve_iters = 800;
};

struct ServiceResponse {
    int status = 200;
    Json body;
};

/// Session store and request handling behind the HTTP API. handle() is the
/// whole API; bind() only forwards HTTP requests to it.
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();

    ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);
    void bind(httplib::Server& server);

    /// Called inside a solve after the session is marked busy; tests use it
    /// to hold a solve open.
    std::function<void()> solve_hook;

private:
    struct Session;
    struct StoredQuad {
        QuadMesh quad;
        std::string session;
    };

    ServiceResponse create_session(const Json& body);
    ServiceResponse get_mesh(Session& s);
    ServiceResponse put_strokes(Session& s, const Json& body);
    ServiceResponse solve(Session& s, const Json& body);
    ServiceResponse streamlines(Session& s, const Json& body);
    ServiceResponse quads(Session& s, const Json& body);
    ServiceResponse planarize_quad(const std::string& quad_id, const Json& body);

    std::shared_ptr<Session> find(const std::string& id);
    void persist(const Session& s);
    void restore();

    ServiceOptions options_;
    std::mutex store_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, StoredQuad> quads_;
    int next_session_ = 1;
    int next_field_ = 1;
    int next_quad_ = 1;
    std::atomic<long long> revision_{0};
};

/// Runs the HTTP server until it is stopped; returns nonzero if the port
/// cannot be bound.
int serve(const ServiceOptions& options, const std::string& host, int port);

}  // namespace cdf
