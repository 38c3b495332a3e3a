#include "sheetagent/service.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "sheetagent/codec.hpp"

namespace sheetagent {

namespace {

struct Entry {
    std::shared_ptr<Session> session;
    std::mutex thread_mu;
    std::thread turn;
};

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(-1, ' ', false, Json::error_handler_t::replace), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, Json{{"error", message}});
}

std::string sse_frame(const Event& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + e.type +
           "\ndata: " + e.payload.dump(-1, ' ', false, Json::error_handler_t::replace) + "\n\n";
}

std::string new_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

}  // namespace

struct Service::Impl {
    BackendFactory factory;
    httplib::Server server;
    mutable std::mutex mu;
    std::map<std::string, std::shared_ptr<Entry>> sessions;
    std::atomic<bool> stopping{false};

    std::shared_ptr<Entry> entry(const std::string& id) const {
        std::lock_guard lock(mu);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    /// Starts a turn on its own thread; the slot must already be claimed.
    void launch(const std::shared_ptr<Entry>& e, std::string text) {
        std::lock_guard lock(e->thread_mu);
        if (e->turn.joinable()) e->turn.join();
        e->turn = std::thread([s = e->session, text = std::move(text)] {
            try {
                s->run_claimed_turn(text);
            } catch (const std::exception& ex) {
                s->events().append("error", Json{{"code", "internal"}, {"message", ex.what()}});
            }
        });
    }

    void routes();
};

void Service::Impl::routes() {
    server.new_task_queue = [] { return new httplib::ThreadPool(16); };

    server.Post("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
        auto e = std::make_shared<Entry>();
        e->session = std::make_shared<Session>(factory());
        std::string id;
        {
            std::lock_guard lock(mu);
            do id = new_session_id();
            while (sessions.count(id));
            sessions[id] = e;
        }
        send_json(res, 201, Json{{"id", id}});
    });

    server.Post(R"(/v1/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
        auto e = entry(req.matches[1]);
        if (!e) return send_error(res, 404, "unknown session");
        Json body = Json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string() ||
            trim(body["text"].get<std::string>()).empty())
            return send_error(res, 400, "body must be {\"text\": non-empty string}");
        try {
            e->session->claim_turn();
        } catch (const TurnInFlight& ex) {
            return send_error(res, 409, ex.what());
        }
        launch(e, body["text"].get<std::string>());
        send_json(res, 202, Json{{"accepted", true}});
    });

    server.Post(R"(/v1/sessions/([^/]+)/suggestions/(\d+)/accept)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    auto e = entry(req.matches[1]);
                    if (!e) return send_error(res, 404, "unknown session");
                    const std::size_t index = std::stoul(req.matches[2]);
                    try {
                        e->session->claim_turn();
                    } catch (const TurnInFlight& ex) {
                        return send_error(res, 409, ex.what());
                    }
                    std::string text;
                    try {
                        text = e->session->suggestion_text(index);
                    } catch (const NoSuchSuggestion& ex) {
                        e->session->release_turn();
                        return send_error(res, 404, ex.what());
                    }
                    launch(e, text);
                    send_json(res, 202, Json{{"accepted", true}, {"text", text}});
                });

    server.Post(R"(/v1/sessions/([^/]+)/stop)", [this](const httplib::Request& req, httplib::Response& res) {
        auto e = entry(req.matches[1]);
        if (!e) return send_error(res, 404, "unknown session");
        e->session->stop();
        send_json(res, 202, Json{{"stopping", e->session->turn_in_flight()}});
    });

    server.Post(R"(/v1/sessions/([^/]+)/undo)", [this](const httplib::Request& req, httplib::Response& res) {
        auto e = entry(req.matches[1]);
        if (!e) return send_error(res, 404, "unknown session");
        try {
            e->session->undo();
        } catch (const NothingToUndo& ex) {
            return send_error(res, 409, ex.what());
        } catch (const TurnInFlight& ex) {
            return send_error(res, 409, ex.what());
        }
        send_json(res, 200, Json{{"revision", e->session->workbook().revision()}});
    });

    server.Get(R"(/v1/sessions/([^/]+)/workbook)", [this](const httplib::Request& req, httplib::Response& res) {
        auto e = entry(req.matches[1]);
        if (!e) return send_error(res, 404, "unknown session");
        res.set_content(e->session->state_document(), "application/json");
    });

    server.Get(R"(/v1/sessions/([^/]+)/workbook/export)", [this](const httplib::Request& req, httplib::Response& res) {
        auto e = entry(req.matches[1]);
        if (!e) return send_error(res, 404, "unknown session");
        const std::string fmt = req.has_param("fmt") ? req.get_param_value("fmt") : "json";
        const Workbook wb = e->session->workbook();
        if (fmt == "json") return res.set_content(serialize_state(wb), "application/json");
        if (fmt != "csv" && fmt != "md") return send_error(res, 400, "fmt must be csv, md or json");

        std::vector<const Table*> tables;
        if (req.has_param("table")) {
            const Table* t = wb.find_table(req.get_param_value("table"));
            if (!t) return send_error(res, 404, "no table named '" + req.get_param_value("table") + "'");
            tables.push_back(t);
        } else {
            for (const auto& s : wb.sheets())
                for (const auto& t : s.tables) tables.push_back(&t);
        }
        if (fmt == "csv") {
            if (tables.size() != 1) return send_error(res, 400, "csv export needs ?table= when the workbook has " +
                                                                    std::to_string(tables.size()) + " tables");
            return res.set_content(export_csv(*tables.front()), "text/csv");
        }
        std::string out;
        for (const Table* t : tables) out += (out.empty() ? "" : "\n") + render_markdown(table_proto(*t));
        res.set_content(out, "text/markdown");
    });

    server.Get(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
        auto e = entry(req.matches[1]);
        if (!e) return send_error(res, 404, "unknown session");
        std::uint64_t after = 0;
        const std::string resume = req.has_header("Last-Event-ID") ? req.get_header_value("Last-Event-ID")
                                   : req.has_param("after")          ? req.get_param_value("after")
                                                                     : "";
        if (!resume.empty()) {
            auto n = parse_number(resume);
            if (!n || *n < 0) return send_error(res, 400, "Last-Event-ID must be an event number");
            after = static_cast<std::uint64_t>(*n);
        }
        const bool follow = !(req.has_param("follow") && req.get_param_value("follow") == "false");
        auto session = e->session;
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, session, after, follow](std::size_t, httplib::DataSink& sink) mutable {
                for (;;) {
                    for (const auto& ev : session->events().since(after)) {
                        const std::string frame = sse_frame(ev);
                        if (!sink.write(frame.data(), frame.size())) return false;
                        after = ev.seq;
                    }
                    if (!follow || stopping) {
                        sink.done();
                        return true;
                    }
                    session->events().wait_after(after, std::chrono::milliseconds(200));
                    if (!sink.is_writable()) return false;
                }
            });
    });
}

Service::Service(BackendFactory factory) : impl_(std::make_unique<Impl>()) {
    impl_->factory = std::move(factory);
    impl_->routes();
}

Service::~Service() {
    stop();
    std::lock_guard lock(impl_->mu);
    for (auto& [id, e] : impl_->sessions) {
        e->session->stop();
        std::lock_guard tl(e->thread_mu);
        if (e->turn.joinable()) e->turn.join();
    }
}

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
    impl_->stopping = true;
    impl_->server.stop();
}

std::shared_ptr<Session> Service::find_session(const std::string& id) const {
    auto e = impl_->entry(id);
    return e ? e->session : nullptr;
}

}  // namespace sheetagent
