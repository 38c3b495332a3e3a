#pragma once

#include <functional>
#include <memory>
#include <string>

#include "sheetagent/gateway.hpp"
#include "sheetagent/orchestrator.hpp"

namespace sheetagent {

inline constexpr int kDefaultPort = 7341;

/// Session service under /v1: JSON routes plus a server-sent event stream per session.
class Service {
public:
    /// Called once per new session.
    using BackendFactory = std::function<std::shared_ptr<Backend>()>;

    explicit Service(BackendFactory factory);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds `host:port`; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Call after bind().
    void listen();
    void stop();

    std::shared_ptr<Session> find_session(const std::string& id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace sheetagent
