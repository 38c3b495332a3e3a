#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sheetagent/gateway.hpp"
#include "sheetagent/json.hpp"
#include "sheetagent/phase.hpp"
#include "sheetagent/suggestions.hpp"
#include "sheetagent/workbook.hpp"

namespace sheetagent {

inline constexpr int kMaxToolAttempts = 3;
/// Plan requests per turn before the turn is cut off.
inline constexpr int kMaxPlanSteps = 24;

/// utterance, tool_call, tool_result, suggestions, state_update, phase, error, done.
struct Event {
    std::uint64_t seq = 0;
    std::string type;
    Json payload;

    Json to_json() const;
    /// One JSON object per line.
    std::string to_line() const;
};

/// Append-only, gapless, 1-based. Readers can block for new events.
class EventLog {
public:
    const Event& append(std::string type, Json payload);
    std::vector<Event> since(std::uint64_t after) const;
    std::vector<Event> all() const { return since(0); }
    std::uint64_t last_seq() const;
    /// Waits until an event after `after` exists or the timeout elapses.
    bool wait_after(std::uint64_t after, std::chrono::milliseconds timeout) const;
    void notify_all() const { cv_.notify_all(); }

private:
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::vector<Event> events_;
};

class TurnInFlight : public std::runtime_error {
public:
    TurnInFlight() : std::runtime_error("a turn is already in progress for this session") {}
};
class NothingToUndo : public std::runtime_error {
public:
    NothingToUndo() : std::runtime_error("nothing to undo") {}
};
class NoSuchSuggestion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Message {
    enum class Role { User, Agent, ToolEvent };
    Role role;
    std::string text;
    std::chrono::system_clock::time_point at;
};

enum class TurnStatus { Completed, Cancelled, Aborted };
std::string_view to_string(TurnStatus s);

struct TurnOutcome {
    TurnStatus status = TurnStatus::Completed;
    std::optional<std::string> final_utterance;
    std::vector<Suggestion> suggestions;
    std::vector<Event> events;
};

/// Phase after applying the forward-only transition rules.
Phase advance_phase(Phase current, const std::string& goal_summary, bool user_replied_after_agent,
                    const Workbook& wb);

/// Instructions, workbook state, process, goal and guidelines, in that order.
std::string build_system_prompt(const std::string& state_doc, Phase phase, const std::string& goal_summary);

class Session {
public:
    using Clock = std::function<std::chrono::system_clock::time_point()>;

    explicit Session(std::shared_ptr<Backend> backend, Clock clock = nullptr);

    /// Runs one turn synchronously. Throws TurnInFlight.
    TurnOutcome run_turn(const std::string& user_text);
    /// Sends pending suggestion `index` (0-based) as the user message.
    TurnOutcome accept_suggestion(std::size_t index);

    /// Claims the turn slot; pair with run_claimed_turn. Throws TurnInFlight.
    void claim_turn();
    TurnOutcome run_claimed_turn(const std::string& user_text);
    /// Frees a claimed slot without running a turn.
    void release_turn() { in_flight_ = false; }
    /// Pill text for `index`. Throws NoSuchSuggestion.
    std::string suggestion_text(std::size_t index) const;

    /// Requests cancellation of the running turn; honored at the next check point.
    void stop();
    /// Restores the workbook from before the latest tool batch. Throws NothingToUndo or TurnInFlight.
    void undo();

    bool turn_in_flight() const { return in_flight_.load(); }
    const EventLog& events() const { return events_; }
    EventLog& events() { return events_; }

    /// Copies taken under the session lock.
    Workbook workbook() const;
    std::string state_document() const;
    Phase phase() const;
    std::string goal_summary() const;
    std::vector<Suggestion> pending_suggestions() const;
    std::vector<Message> messages() const;
    std::size_t undo_depth() const;

    /// Test hook: runs after each tool execution inside a turn.
    void set_after_tool_hook(std::function<void(const ToolCall&)> hook) { after_tool_ = std::move(hook); }

private:
    struct Cancelled {};

    void emit(std::vector<Event>& sink, std::string type, Json payload);
    void update_phase(std::vector<Event>& sink);
    bool cancel_point(std::vector<Event>& sink);
    std::optional<ToolCall> regenerate(const std::string& failed_id, const ToolResult& failure, int attempt);

    std::shared_ptr<Backend> backend_;
    Clock clock_;
    mutable std::mutex mu_;
    Workbook wb_;
    UndoStack undo_;
    Phase phase_ = Phase::GatherRequirements;
    std::string goal_;
    std::vector<Suggestion> pending_;
    std::vector<Message> messages_;
    Json history_ = Json::array();
    EventLog events_;
    std::atomic<bool> in_flight_{false};
    std::atomic<bool> cancel_{false};
    std::function<void(const ToolCall&)> after_tool_;
};

}  // namespace sheetagent
