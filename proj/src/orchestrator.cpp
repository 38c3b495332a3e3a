#include "sheetagent/orchestrator.hpp"

#include <algorithm>

#include "sheetagent/codec.hpp"
#include "sheetagent/tools.hpp"

namespace sheetagent {

Json Event::to_json() const { return Json{{"seq", seq}, {"type", type}, {"payload", payload}}; }

std::string Event::to_line() const { return to_json().dump(-1, ' ', false, Json::error_handler_t::replace); }

const Event& EventLog::append(std::string type, Json payload) {
    std::lock_guard lock(mu_);
    events_.push_back(Event{events_.size() + 1, std::move(type), std::move(payload)});
    cv_.notify_all();
    return events_.back();
}

std::vector<Event> EventLog::since(std::uint64_t after) const {
    std::lock_guard lock(mu_);
    if (after >= events_.size()) return {};
    return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mu_);
    return events_.size();
}

bool EventLog::wait_after(std::uint64_t after, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return events_.size() > after; });
}

std::string_view to_string(TurnStatus s) {
    switch (s) {
        case TurnStatus::Completed: return "completed";
        case TurnStatus::Cancelled: return "cancelled";
        case TurnStatus::Aborted: return "aborted";
    }
    return "completed";
}

Phase advance_phase(Phase current, const std::string& goal_summary, bool user_replied_after_agent,
                    const Workbook& wb) {
    bool has_data = false;
    for (const auto& s : wb.sheets())
        for (const auto& t : s.tables) has_data = has_data || t.kind == TableKind::Data;
    Phase p = current;
    if (p == Phase::GatherRequirements && ((!goal_summary.empty() && user_replied_after_agent) || has_data))
        p = Phase::DefineDataTables;
    if (p == Phase::DefineDataTables && has_data) p = Phase::ExtractInsights;
    return p;
}

std::string build_system_prompt(const std::string& state_doc, Phase phase, const std::string& goal_summary) {
    std::string p;
    p += "You are a spreadsheet assistant working inside a workbook together with a person. You change the "
         "workbook only by calling the provided tools, and you explain each change in one or two sentences.\n\n";
    p += "Current workbook state (state/v1 JSON; cells list address, displayed value and formula):\n";
    p += state_doc;
    p += "\n\nWork through these steps in order:\n"
         "1. Gather requirements: ask about the audience, the timescale and any other context before building.\n"
         "2. Define data tables: prototype tables in Markdown in the chat when defining data and insight tables, "
         "and create them only after the person agrees.\n"
         "3. Extract insights: build insight tables with formulas that reference the data tables, then sort, "
         "filter, highlight or chart them as asked.\n";
    p += "Current step: ";
    p += to_string(phase);
    p += "\n\n";
    p += "Keep a one-sentence summary of the person's overall goal. End every reply with a final line of the form "
         "\"GOAL: <summary>\", updated as you learn more.\nCurrent goal summary: ";
    p += goal_summary.empty() ? "(none yet)" : goal_summary;
    p += "\n\nGuidelines:\n"
         "- Use spreadsheet formulas such as SUMIFS instead of typing computed numbers.\n"
         "- Tables must never overlap; new tables go below existing ones unless an anchor is given.\n"
         "- Refer only to tables and columns that exist in the workbook state.\n"
         "- If a tool reports a validation error, fix the named parameter and call the tool again.\n";
    return p;
}

namespace {

Json openai_call(const ToolCall& c) {
    return Json{{"id", c.id},
                {"type", "function"},
                {"function", Json{{"name", c.name}, {"arguments", c.args.dump(-1, ' ', false, Json::error_handler_t::replace)}}}};
}

Json result_json(const ToolResult& r) {
    Json j{{"status", std::string(to_string(r.status))}, {"message", r.message}};
    if (r.field) j["field"] = *r.field;
    return j;
}

}  // namespace

Session::Session(std::shared_ptr<Backend> backend, Clock clock)
    : backend_(std::move(backend)), clock_(clock ? std::move(clock) : Clock([] { return std::chrono::system_clock::now(); })) {}

void Session::emit(std::vector<Event>& sink, std::string type, Json payload) {
    sink.push_back(events_.append(std::move(type), std::move(payload)));
}

void Session::update_phase(std::vector<Event>& sink) {
    Phase next;
    Phase current;
    {
        std::lock_guard lock(mu_);
        bool replied = false, agent_seen = false;
        for (const auto& m : messages_) {
            if (m.role == Message::Role::Agent) agent_seen = true;
            if (m.role == Message::Role::User && agent_seen) replied = true;
        }
        current = phase_;
        next = advance_phase(phase_, goal_, replied, wb_);
        phase_ = next;
    }
    for (int p = static_cast<int>(current) + 1; p <= static_cast<int>(next); ++p) {
        emit(sink, "phase", Json{{"phase", std::string(to_string(static_cast<Phase>(p)))},
                                 {"from", std::string(to_string(static_cast<Phase>(p - 1)))}});
    }
}

bool Session::cancel_point(std::vector<Event>&) { return cancel_.load(); }

void Session::claim_turn() {
    bool expected = false;
    if (!in_flight_.compare_exchange_strong(expected, true)) throw TurnInFlight();
    cancel_ = false;
}

TurnOutcome Session::run_turn(const std::string& user_text) {
    claim_turn();
    return run_claimed_turn(user_text);
}

std::string Session::suggestion_text(std::size_t index) const {
    std::lock_guard lock(mu_);
    if (index >= pending_.size())
        throw NoSuchSuggestion("no suggestion " + std::to_string(index) + "; " + std::to_string(pending_.size()) +
                               " pending");
    return pending_[index].text;
}

TurnOutcome Session::accept_suggestion(std::size_t index) {
    claim_turn();
    std::string text;
    try {
        text = suggestion_text(index);
    } catch (...) {
        release_turn();
        throw;
    }
    return run_claimed_turn(text);
}

std::optional<ToolCall> Session::regenerate(const std::string&, const ToolResult&, int) {
    Json history;
    std::string state;
    Phase phase;
    std::string goal;
    {
        std::lock_guard lock(mu_);
        history = history_;
        state = serialize_state(wb_);
        phase = phase_;
        goal = goal_;
    }
    LlmRequest req;
    req.kind = RequestKind::Plan;
    req.with_tools = true;
    req.messages = Json::array({Json{{"role", "system"}, {"content", build_system_prompt(state, phase, goal)}}});
    for (const auto& m : history) req.messages.push_back(m);
    const LlmResponse resp = backend_->send(req);
    if (resp.tool_calls.empty()) return std::nullopt;
    return resp.tool_calls.front();
}

TurnOutcome Session::run_claimed_turn(const std::string& user_text) {
    struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag = false; }
    } release{in_flight_};

    TurnOutcome outcome;
    std::vector<Event>& sink = outcome.events;
    {
        std::lock_guard lock(mu_);
        messages_.push_back(Message{Message::Role::User, user_text, clock_()});
        history_.push_back(Json{{"role", "user"}, {"content", user_text}});
        pending_.clear();
    }
    update_phase(sink);

    std::optional<Workbook> batch_before;
    auto close_batch = [&] {
        if (!batch_before) return;
        std::lock_guard lock(mu_);
        if (wb_.revision() != batch_before->revision()) undo_.push(Snapshot{*batch_before});
        batch_before.reset();
    };
    auto state_update = [&] {
        Json payload;
        {
            std::lock_guard lock(mu_);
            payload = Json{{"revision", wb_.revision()}, {"state", state_json(wb_)}};
        }
        emit(sink, "state_update", std::move(payload));
    };

    try {
        bool finished = false;
        for (int step = 0; step < kMaxPlanSteps && !finished; ++step) {
            if (cancel_point(sink)) throw Cancelled{};
            LlmRequest req;
            req.kind = RequestKind::Plan;
            req.with_tools = true;
            {
                std::lock_guard lock(mu_);
                req.messages =
                    Json::array({Json{{"role", "system"}, {"content", build_system_prompt(serialize_state(wb_), phase_, goal_)}}});
                for (const auto& m : history_) req.messages.push_back(m);
            }
            const LlmResponse resp = backend_->send(req);
            const AgentTurn turn = to_agent_turn(resp);
            if (turn.goal) {
                std::lock_guard lock(mu_);
                goal_ = *turn.goal;
            }
            if (turn.utterance) {
                Json payload{{"text", *turn.utterance}};
                if (turn.goal) payload["goal"] = *turn.goal;
                emit(sink, "utterance", std::move(payload));
                std::lock_guard lock(mu_);
                messages_.push_back(Message{Message::Role::Agent, *turn.utterance, clock_()});
                outcome.final_utterance = *turn.utterance;
            }
            if (turn.done) {
                std::lock_guard lock(mu_);
                history_.push_back(Json{{"role", "assistant"}, {"content", resp.content ? Json(*resp.content) : Json("")}});
                finished = true;
                continue;
            }

            {
                std::lock_guard lock(mu_);
                batch_before = wb_;
            }
            std::optional<std::string> content = resp.content;
            for (std::size_t k = 0; k < turn.tool_calls.size(); ++k) {
                if (k > 0 && cancel_point(sink)) throw Cancelled{};
                ToolCall call = turn.tool_calls[k];
                for (int attempt = 1; attempt <= kMaxToolAttempts; ++attempt) {
                    {
                        std::lock_guard lock(mu_);
                        history_.push_back(Json{{"role", "assistant"},
                                                {"content", content ? Json(*content) : Json(nullptr)},
                                                {"tool_calls", Json::array({openai_call(call)})}});
                        messages_.push_back(Message{Message::Role::ToolEvent, call.name, clock_()});
                    }
                    content.reset();
                    emit(sink, "tool_call",
                         Json{{"id", call.id}, {"name", call.name}, {"args", call.args}, {"attempt", attempt}});
                    ToolResult result;
                    {
                        std::lock_guard lock(mu_);
                        if (auto issue = validate_tool_call(call, wb_)) {
                            result = ToolResult{ToolStatus::ValidationError, issue->message, wb_.revision(), issue->field};
                        } else {
                            result = execute_validated(call, wb_);
                        }
                        history_.push_back(Json{{"role", "tool"},
                                                {"tool_call_id", call.id},
                                                {"content", result_json(result).dump(-1, ' ', false, Json::error_handler_t::replace)}});
                    }
                    Json payload{{"id", call.id},
                                 {"name", call.name},
                                 {"status", std::string(to_string(result.status))},
                                 {"message", result.message},
                                 {"revision", result.revision},
                                 {"attempt", attempt}};
                    if (result.field) payload["field"] = *result.field;
                    emit(sink, "tool_result", std::move(payload));

                    if (result.status == ToolStatus::Ok) {
                        state_update();
                        update_phase(sink);
                        if (after_tool_) after_tool_(call);
                        break;
                    }
                    if (result.status == ToolStatus::ExecutionError) break;
                    if (attempt == kMaxToolAttempts) {
                        emit(sink, "error",
                             Json{{"code", "retries_exhausted"},
                                  {"tool", call.name},
                                  {"attempts", attempt},
                                  {"message", "giving up on " + call.name + " after " + std::to_string(attempt) +
                                                  " attempts: " + result.message}});
                        break;
                    }
                    auto next = regenerate(call.id, result, attempt);
                    if (!next) {
                        emit(sink, "error",
                             Json{{"code", "retry_abandoned"},
                                  {"tool", call.name},
                                  {"attempts", attempt},
                                  {"message", "the agent did not retry " + call.name}});
                        break;
                    }
                    call = *next;
                }
            }
            close_batch();
            if (step + 1 == kMaxPlanSteps)
                emit(sink, "error", Json{{"code", "step_limit"},
                                         {"message", "turn stopped after " + std::to_string(kMaxPlanSteps) + " planning steps"}});
        }
    } catch (const Cancelled&) {
        close_batch();
        outcome.status = TurnStatus::Cancelled;
        emit(sink, "error", Json{{"code", "cancelled"}, {"message", "stopped by the user"}});
    } catch (const BackendError& e) {
        outcome.status = TurnStatus::Aborted;
        bool rolled_back = false;
        if (batch_before) {
            std::lock_guard lock(mu_);
            rolled_back = wb_.revision() != batch_before->revision();
            wb_.assign(*batch_before);
            batch_before.reset();
        }
        emit(sink, "error", Json{{"code", "backend_unavailable"}, {"message", e.what()}});
        if (rolled_back) state_update();
    }

    // Every turn ends with three pills; an unreachable backend gets the templates directly.
    SuggestionContext ctx;
    Workbook snapshot_wb;
    {
        std::lock_guard lock(mu_);
        snapshot_wb = wb_;
        ctx.state_doc = serialize_state(wb_);
        ctx.goal_summary = goal_;
        ctx.phase = phase_;
        const std::size_t first = messages_.size() > 8 ? messages_.size() - 8 : 0;
        for (std::size_t i = first; i < messages_.size(); ++i) {
            const auto& m = messages_[i];
            if (m.role == Message::Role::ToolEvent) continue;
            ctx.history.emplace_back(m.role == Message::Role::User ? "user" : "agent", m.text);
        }
        ctx.last_message = outcome.final_utterance.value_or(user_text);
    }
    SuggestionBatch batch;
    if (outcome.status == TurnStatus::Aborted) {
        batch.items = fallback_suggestions(ctx.phase, snapshot_wb);
        batch.fallback = true;
    } else {
        batch = generate_suggestions(*backend_, ctx, snapshot_wb);
    }
    Json items = Json::array();
    for (const auto& s : batch.items) items.push_back(Json{{"thought", s.thought}, {"suggestion", s.text}});
    Json payload{{"items", items}, {"fallback", batch.fallback}};
    if (!batch.rejections.empty()) payload["rejections"] = batch.rejections;
    emit(sink, "suggestions", std::move(payload));
    std::uint64_t revision;
    {
        std::lock_guard lock(mu_);
        pending_ = batch.items;
        revision = wb_.revision();
    }
    outcome.suggestions = batch.items;
    emit(sink, "done", Json{{"status", std::string(to_string(outcome.status))}, {"revision", revision}});
    return outcome;
}

void Session::stop() { cancel_ = true; }

void Session::undo() {
    if (in_flight_) throw TurnInFlight();
    Json payload;
    {
        std::lock_guard lock(mu_);
        auto snap = undo_.pop();
        if (!snap) throw NothingToUndo();
        restore(wb_, *snap);
        payload = Json{{"revision", wb_.revision()}, {"state", state_json(wb_)}, {"reason", "undo"}};
    }
    events_.append("state_update", std::move(payload));
}

Workbook Session::workbook() const {
    std::lock_guard lock(mu_);
    return wb_;
}

std::string Session::state_document() const {
    std::lock_guard lock(mu_);
    return serialize_state(wb_);
}

Phase Session::phase() const {
    std::lock_guard lock(mu_);
    return phase_;
}

std::string Session::goal_summary() const {
    std::lock_guard lock(mu_);
    return goal_;
}

std::vector<Suggestion> Session::pending_suggestions() const {
    std::lock_guard lock(mu_);
    return pending_;
}

std::vector<Message> Session::messages() const {
    std::lock_guard lock(mu_);
    return messages_;
}

std::size_t Session::undo_depth() const {
    std::lock_guard lock(mu_);
    return undo_.size();
}

}  // namespace sheetagent
