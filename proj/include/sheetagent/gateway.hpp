#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sheetagent/json.hpp"
#include "sheetagent/tools.hpp"

namespace sheetagent {

enum class RequestKind { Plan, Suggest };

/// One chat-completions style exchange. `messages` use the OpenAI shape (system, user,
/// assistant with tool_calls, tool). The model name is added by the live backend.
struct LlmRequest {
    RequestKind kind = RequestKind::Plan;
    Json messages = Json::array();
    bool with_tools = false;

    Json to_json() const;
    static LlmRequest from_json(const Json& j);
};

struct LlmResponse {
    std::optional<std::string> content;
    std::vector<ToolCall> tool_calls;

    Json to_json() const;
    static LlmResponse from_json(const Json& j);
};

/// Planner output. `done` is set when there are no tool calls.
struct AgentTurn {
    std::optional<std::string> utterance;
    std::optional<std::string> goal;
    std::vector<ToolCall> tool_calls;
    bool done = true;
};

/// Splits a trailing "GOAL: ..." line off the reply text.
AgentTurn to_agent_turn(const LlmResponse& r);

/// Inverse of the GOAL convention, used by the scripted backend.
std::string compose_content(const std::optional<std::string>& utterance, const std::optional<std::string>& goal);

/// Hex FNV-1a 64 of the request's canonical JSON.
std::string request_hash(const LlmRequest& r);

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class Timeout : public BackendError {
public:
    using BackendError::BackendError;
};
class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};
class ScriptMismatch : public BackendError {
public:
    using BackendError::BackendError;
};
class FixtureMiss : public BackendError {
public:
    FixtureMiss(std::string hash)
        : BackendError("no recorded response for request " + hash), hash_(std::move(hash)) {}
    const std::string& hash() const { return hash_; }

private:
    std::string hash_;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Throws BackendError.
    virtual LlmResponse send(const LlmRequest& request) = 0;
};

enum class BackendMode { Live, Scripted, Replay };

struct BackendConfig {
    BackendMode mode = BackendMode::Scripted;
    std::string api_base;
    std::string api_key;
    std::string model;
    int timeout_ms = 60000;
    std::optional<std::filesystem::path> script_path;
    std::optional<std::filesystem::path> fixture_path;

    /// Reads AGENT_BACKEND, AGENT_API_BASE, AGENT_API_KEY, AGENT_MODEL, AGENT_TIMEOUT_MS,
    /// AGENT_SCRIPT and AGENT_FIXTURE. `getenv` is injectable for tests.
    static BackendConfig from_env(const std::function<const char*(const char*)>& getenv = nullptr);

    /// Problem with the settings for the chosen mode, if any.
    std::optional<std::string> problem() const;
};

std::optional<BackendMode> parse_backend_mode(std::string_view s);

/// Chat-completions over HTTP(S) with function calling.
class LiveBackend : public Backend {
public:
    LiveBackend(std::string api_base, std::string api_key, std::string model, int timeout_ms);
    LlmResponse send(const LlmRequest& request) override;

private:
    std::string scheme_host_;
    std::string path_;
    std::string api_key_;
    std::string model_;
    int timeout_ms_;
};

/// One authored user turn of a script/v1 document.
struct ScriptStep {
    std::optional<std::string> utterance;
    std::optional<std::string> goal;
    std::vector<ToolCall> tool_calls;
};

struct ScriptTurn {
    std::string user;
    std::optional<std::size_t> accept;  // pill index the user clicks instead of typing
    std::vector<ScriptStep> steps;
    std::optional<Json> suggestions;  // reply to the suggestion request, verbatim
};

struct Script {
    std::vector<ScriptTurn> turns;
    static Script from_json(const Json& j);
    static Script load(const std::filesystem::path& p);

private:
    static void read_turns(const Json& turns, Script& s);
};

/// Replays authored turns. A plan request ending in a user message starts the next turn
/// and must carry that turn's user text; one ending in a tool message takes the next step.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(Script script);
    LlmResponse send(const LlmRequest& request) override;

private:
    std::mutex mu_;
    Script script_;
    std::size_t next_turn_ = 0;
    std::optional<std::size_t> turn_;
    std::size_t next_step_ = 0;
};

/// User input driving a recorded session: typed text or an accepted pill.
struct SessionInput {
    std::optional<std::string> text;
    std::optional<std::size_t> accept;
    Json to_json() const;
    static SessionInput from_json(const Json& j);
};

struct FixtureEntry {
    std::string hash;
    LlmRequest request;
    LlmResponse response;
};

/// fixture/v1: {schemaVersion, inputs, entries:[{requestHash, request, response}]}.
struct Fixture {
    std::vector<SessionInput> inputs;
    std::vector<FixtureEntry> entries;
    Json to_json() const;
    static Fixture from_json(const Json& j);
    static Fixture load(const std::filesystem::path& p);
    void save(const std::filesystem::path& p) const;
};

/// Forwards to `inner` and keeps every exchange in order.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(std::unique_ptr<Backend> inner);
    LlmResponse send(const LlmRequest& request) override;
    std::vector<FixtureEntry> entries() const;

private:
    std::unique_ptr<Backend> inner_;
    mutable std::mutex mu_;
    std::vector<FixtureEntry> entries_;
};

/// Answers from a fixture by request hash; repeated requests take recorded answers in order.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const Fixture& fixture);
    LlmResponse send(const LlmRequest& request) override;

private:
    std::mutex mu_;
    std::map<std::string, std::vector<LlmResponse>> answers_;
    std::map<std::string, std::size_t> used_;
};

/// Builds the backend for a validated config. Throws BackendError on bad settings or files.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace sheetagent
