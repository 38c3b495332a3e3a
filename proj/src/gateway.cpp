#include "sheetagent/gateway.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

namespace sheetagent {

namespace {

Json tool_call_json(const ToolCall& c) { return Json{{"id", c.id}, {"name", c.name}, {"args", c.args}}; }

ToolCall tool_call_from(const Json& j) {
    ToolCall c;
    c.id = j.value("id", "");
    c.name = j.at("name").get<std::string>();
    c.args = j.contains("args") ? j.at("args") : Json::object();
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw BackendError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json parse_file(const std::filesystem::path& p) {
    Json j = Json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) throw BackendError(p.string() + " is not valid JSON");
    return j;
}

std::string last_role(const Json& messages) {
    if (!messages.is_array() || messages.empty()) return "";
    return messages.back().value("role", "");
}

std::string last_user_text(const Json& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->value("role", "") == "user" && (*it)["content"].is_string()) return (*it)["content"].get<std::string>();
    }
    return "";
}

}  // namespace

Json LlmRequest::to_json() const {
    return Json{{"kind", kind == RequestKind::Plan ? "plan" : "suggest"}, {"withTools", with_tools}, {"messages", messages}};
}

LlmRequest LlmRequest::from_json(const Json& j) {
    LlmRequest r;
    r.kind = j.at("kind").get<std::string>() == "plan" ? RequestKind::Plan : RequestKind::Suggest;
    r.with_tools = j.value("withTools", false);
    r.messages = j.at("messages");
    return r;
}

Json LlmResponse::to_json() const {
    Json calls = Json::array();
    for (const auto& c : tool_calls) calls.push_back(tool_call_json(c));
    return Json{{"content", content ? Json(*content) : Json(nullptr)}, {"toolCalls", calls}};
}

LlmResponse LlmResponse::from_json(const Json& j) {
    LlmResponse r;
    if (j.contains("content") && j.at("content").is_string()) r.content = j.at("content").get<std::string>();
    if (j.contains("toolCalls"))
        for (const auto& c : j.at("toolCalls")) r.tool_calls.push_back(tool_call_from(c));
    return r;
}

AgentTurn to_agent_turn(const LlmResponse& r) {
    AgentTurn t;
    t.tool_calls = r.tool_calls;
    t.done = r.tool_calls.empty();
    if (!r.content) return t;
    std::string text(trim(*r.content));
    // A final line "GOAL: ..." carries the refreshed goal summary.
    const std::size_t nl = text.rfind('\n');
    const std::size_t start = nl == std::string::npos ? 0 : nl + 1;
    const std::string_view last = trim(std::string_view(text).substr(start));
    if (last.substr(0, 5) == "GOAL:") {
        t.goal = std::string(trim(last.substr(5)));
        text = std::string(trim(std::string_view(text).substr(0, start)));
    }
    if (!text.empty()) t.utterance = text;
    return t;
}

std::string compose_content(const std::optional<std::string>& utterance, const std::optional<std::string>& goal) {
    std::string out = utterance.value_or("");
    if (goal) out += (out.empty() ? "" : "\n\n") + std::string("GOAL: ") + *goal;
    return out;
}

std::string request_hash(const LlmRequest& r) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : r.to_json().dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// config

std::optional<BackendMode> parse_backend_mode(std::string_view s) {
    if (iequals(s, "live")) return BackendMode::Live;
    if (iequals(s, "scripted")) return BackendMode::Scripted;
    if (iequals(s, "replay")) return BackendMode::Replay;
    return std::nullopt;
}

BackendConfig BackendConfig::from_env(const std::function<const char*(const char*)>& getenv) {
    auto get = [&](const char* name) -> std::optional<std::string> {
        const char* v = getenv ? getenv(name) : std::getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    BackendConfig c;
    if (auto m = get("AGENT_BACKEND")) {
        auto mode = parse_backend_mode(*m);
        if (!mode) throw BackendError("AGENT_BACKEND must be live, scripted or replay");
        c.mode = *mode;
    }
    c.api_base = get("AGENT_API_BASE").value_or("");
    c.api_key = get("AGENT_API_KEY").value_or("");
    c.model = get("AGENT_MODEL").value_or("");
    if (auto t = get("AGENT_TIMEOUT_MS")) {
        auto v = parse_number(*t);
        if (!v || *v <= 0 || *v > 3600000) throw BackendError("AGENT_TIMEOUT_MS must be a positive number of ms");
        c.timeout_ms = static_cast<int>(*v);
    }
    if (auto s = get("AGENT_SCRIPT")) c.script_path = *s;
    if (auto f = get("AGENT_FIXTURE")) c.fixture_path = *f;
    return c;
}

std::optional<std::string> BackendConfig::problem() const {
    switch (mode) {
        case BackendMode::Live:
            if (api_base.empty()) return "live backend needs AGENT_API_BASE";
            if (api_key.empty()) return "live backend needs AGENT_API_KEY";
            if (model.empty()) return "live backend needs AGENT_MODEL";
            return std::nullopt;
        case BackendMode::Scripted:
            if (!script_path) return "scripted backend needs a script file (AGENT_SCRIPT)";
            return std::nullopt;
        case BackendMode::Replay:
            if (!fixture_path) return "replay backend needs a fixture file (AGENT_FIXTURE)";
            return std::nullopt;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// live

LiveBackend::LiveBackend(std::string api_base, std::string api_key, std::string model, int timeout_ms)
    : api_key_(std::move(api_key)), model_(std::move(model)), timeout_ms_(timeout_ms) {
    while (!api_base.empty() && api_base.back() == '/') api_base.pop_back();
    const auto scheme = api_base.find("://");
    const auto slash = api_base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    scheme_host_ = slash == std::string::npos ? api_base : api_base.substr(0, slash);
    path_ = (slash == std::string::npos ? "" : api_base.substr(slash)) + "/chat/completions";
}

LlmResponse LiveBackend::send(const LlmRequest& request) {
    Json body{{"model", model_}, {"messages", request.messages}};
    if (request.with_tools) {
        Json tools = Json::array();
        for (const auto& t : tool_schemas().at("tools")) {
            tools.push_back(Json{{"type", "function"},
                                 {"function",
                                  Json{{"name", t.at("name")},
                                       {"description", t.at("description")},
                                       {"parameters", t.at("parameters")}}}});
        }
        body["tools"] = tools;
    }

    httplib::Client client(scheme_host_);
    const auto timeout = std::chrono::milliseconds(timeout_ms_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body.dump(-1, ' ', false, Json::error_handler_t::replace),
                           "application/json");
    if (!res) {
        const auto elapsed = std::chrono::steady_clock::now() - started;
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || elapsed >= timeout)
            throw Timeout("no reply from the model endpoint within " + std::to_string(timeout_ms_) + " ms");
        throw TransportError("model endpoint request failed: " + httplib::to_string(err));
    }
    if (res->status != 200) throw TransportError("model endpoint answered HTTP " + std::to_string(res->status));

    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].contains("message"))
        throw TransportError("model endpoint returned an unexpected body");
    const Json& msg = reply["choices"][0]["message"];
    LlmResponse out;
    try {
        if (msg.contains("content") && msg["content"].is_string()) out.content = msg["content"].get<std::string>();
        if (msg.contains("tool_calls") && msg["tool_calls"].is_array()) {
            for (const auto& tc : msg["tool_calls"]) {
                ToolCall call;
                call.id = tc.value("id", "");
                const Json fn = tc.value("function", Json::object());
                call.name = fn.value("name", "");
                const Json raw = fn.value("arguments", Json("{}"));
                if (raw.is_string()) {
                    Json args = Json::parse(raw.get<std::string>(), nullptr, false);
                    // Unparseable arguments go through as a string so validation reports them.
                    call.args = args.is_discarded() ? raw : args;
                } else {
                    call.args = raw;
                }
                out.tool_calls.push_back(std::move(call));
            }
        }
    } catch (const Json::exception& e) {
        throw TransportError(std::string("model endpoint returned a malformed message: ") + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// scripted

Script Script::from_json(const Json& j) {
    if (!j.is_object() || j.value("schemaVersion", "") != "script/v1")
        throw BackendError("script must be an object with schemaVersion \"script/v1\"");
    Script s;
    if (!j.contains("turns") || !j["turns"].is_array()) throw BackendError("script needs a \"turns\" array");
    try {
        read_turns(j["turns"], s);
    } catch (const Json::exception& e) {
        throw BackendError(std::string("malformed script: ") + e.what());
    }
    return s;
}

void Script::read_turns(const Json& turns, Script& s) {
    for (const auto& tj : turns) {
        ScriptTurn turn;
        turn.user = tj.value("user", "");
        if (tj.contains("accept")) turn.accept = tj["accept"].get<std::size_t>();
        if (turn.user.empty() && !turn.accept) throw BackendError("each script turn needs \"user\" or \"accept\"");
        for (const auto& sj : tj.value("steps", Json::array())) {
            ScriptStep step;
            if (sj.contains("utterance") && sj["utterance"].is_string()) step.utterance = sj["utterance"].get<std::string>();
            if (sj.contains("goal") && sj["goal"].is_string()) step.goal = sj["goal"].get<std::string>();
            for (const auto& cj : sj.value("toolCalls", Json::array())) step.tool_calls.push_back(tool_call_from(cj));
            turn.steps.push_back(std::move(step));
        }
        if (tj.contains("suggestions")) turn.suggestions = tj["suggestions"];
        s.turns.push_back(std::move(turn));
    }
}

Script Script::load(const std::filesystem::path& p) { return from_json(parse_file(p)); }

ScriptedBackend::ScriptedBackend(Script script) : script_(std::move(script)) {}

LlmResponse ScriptedBackend::send(const LlmRequest& request) {
    std::lock_guard lock(mu_);
    if (request.kind == RequestKind::Suggest) {
        LlmResponse r;
        r.content = turn_ && script_.turns[*turn_].suggestions ? script_.turns[*turn_].suggestions->dump() : "[]";
        return r;
    }
    if (last_role(request.messages) == "user") {
        if (next_turn_ >= script_.turns.size())
            throw ScriptMismatch("script has no turn left for user message: " + last_user_text(request.messages));
        const ScriptTurn& turn = script_.turns[next_turn_];
        const std::string actual = last_user_text(request.messages);
        if (!turn.user.empty() && trim(turn.user) != trim(actual))
            throw ScriptMismatch("script turn " + std::to_string(next_turn_ + 1) + " expected user text \"" +
                                 turn.user + "\" but got \"" + actual + "\"");
        turn_ = next_turn_++;
        next_step_ = 0;
    }
    if (!turn_) throw ScriptMismatch("plan request before any user message");
    const ScriptTurn& turn = script_.turns[*turn_];
    if (next_step_ >= turn.steps.size())
        throw ScriptMismatch("script turn " + std::to_string(*turn_ + 1) + " has no step " +
                             std::to_string(next_step_ + 1));
    const ScriptStep& step = turn.steps[next_step_];
    LlmResponse r;
    const std::string content = compose_content(step.utterance, step.goal);
    if (!content.empty()) r.content = content;
    for (std::size_t k = 0; k < step.tool_calls.size(); ++k) {
        ToolCall c = step.tool_calls[k];
        if (c.id.empty())
            c.id = "call_" + std::to_string(*turn_ + 1) + "_" + std::to_string(next_step_ + 1) + "_" + std::to_string(k + 1);
        r.tool_calls.push_back(std::move(c));
    }
    ++next_step_;
    return r;
}

// ---------------------------------------------------------------------------
// fixtures

Json SessionInput::to_json() const {
    if (accept) return Json{{"accept", *accept}};
    return Json{{"text", text.value_or("")}};
}

SessionInput SessionInput::from_json(const Json& j) {
    SessionInput in;
    if (j.contains("accept")) in.accept = j["accept"].get<std::size_t>();
    else in.text = j.at("text").get<std::string>();
    return in;
}

Json Fixture::to_json() const {
    Json inputs_j = Json::array(), entries_j = Json::array();
    for (const auto& i : inputs) inputs_j.push_back(i.to_json());
    for (const auto& e : entries)
        entries_j.push_back(Json{{"requestHash", e.hash}, {"request", e.request.to_json()}, {"response", e.response.to_json()}});
    return Json{{"schemaVersion", "fixture/v1"}, {"inputs", inputs_j}, {"entries", entries_j}};
}

Fixture Fixture::from_json(const Json& j) {
    if (!j.is_object() || j.value("schemaVersion", "") != "fixture/v1")
        throw BackendError("fixture must be an object with schemaVersion \"fixture/v1\"");
    Fixture f;
    try {
        for (const auto& i : j.value("inputs", Json::array())) f.inputs.push_back(SessionInput::from_json(i));
        for (const auto& e : j.at("entries")) {
            f.entries.push_back(FixtureEntry{e.at("requestHash").get<std::string>(), LlmRequest::from_json(e.at("request")),
                                             LlmResponse::from_json(e.at("response"))});
        }
    } catch (const Json::exception& e) {
        throw BackendError(std::string("malformed fixture: ") + e.what());
    }
    return f;
}

Fixture Fixture::load(const std::filesystem::path& p) { return from_json(parse_file(p)); }

void Fixture::save(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw BackendError("cannot write " + p.string());
    out << to_json().dump(2, ' ', false, Json::error_handler_t::replace) << "\n";
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner) : inner_(std::move(inner)) {}

LlmResponse RecordingBackend::send(const LlmRequest& request) {
    LlmResponse r = inner_->send(request);
    std::lock_guard lock(mu_);
    entries_.push_back(FixtureEntry{request_hash(request), request, r});
    return r;
}

std::vector<FixtureEntry> RecordingBackend::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

ReplayBackend::ReplayBackend(const Fixture& fixture) {
    for (const auto& e : fixture.entries) answers_[e.hash].push_back(e.response);
}

LlmResponse ReplayBackend::send(const LlmRequest& request) {
    const std::string hash = request_hash(request);
    std::lock_guard lock(mu_);
    auto it = answers_.find(hash);
    if (it == answers_.end()) throw FixtureMiss(hash);
    std::size_t& n = used_[hash];
    const LlmResponse& r = it->second[std::min(n, it->second.size() - 1)];
    ++n;
    return r;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    if (auto p = config.problem()) throw BackendError(*p);
    switch (config.mode) {
        case BackendMode::Live:
            return std::make_unique<LiveBackend>(config.api_base, config.api_key, config.model, config.timeout_ms);
        case BackendMode::Scripted:
            return std::make_unique<ScriptedBackend>(Script::load(*config.script_path));
        case BackendMode::Replay:
            return std::make_unique<ReplayBackend>(Fixture::load(*config.fixture_path));
    }
    throw BackendError("unknown backend mode");
}

}  // namespace sheetagent
