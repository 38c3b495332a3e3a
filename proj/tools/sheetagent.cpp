// sheetagent command line: service, terminal chat, formula evaluation, replay and recording.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sheetagent/codec.hpp"
#include "sheetagent/formula.hpp"
#include "sheetagent/gateway.hpp"
#include "sheetagent/orchestrator.hpp"
#include "sheetagent/service.hpp"
#include "sheetagent/tools.hpp"

namespace sa = sheetagent;

namespace {

/// Bad input from the person running the command (exit 1).
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write " + path);
    out << text;
}

sa::Json read_json(const std::string& path) {
    sa::Json j = sa::Json::parse(read_text(path), nullptr, false);
    if (j.is_discarded()) throw UserError(path + " is not valid JSON");
    return j;
}

sa::Workbook load_workbook(const std::string& path) {
    const std::string text = read_text(path);
    if (path.size() >= 3 && path.substr(path.size() - 3) == ".md") {
        sa::TableProto proto;
        try {
            proto = sa::parse_markdown(text);
        } catch (const std::exception& e) {
            throw UserError(path + ": " + e.what());
        }
        sa::Workbook wb;
        sa::Json rows = sa::Json::array();
        for (const auto& r : proto.rows) rows.push_back(r);
        sa::ToolCall call{"load", "create_table",
                          sa::Json{{"name", proto.name.empty() ? "Table1" : proto.name},
                                   {"anchor", "A1"},
                                   {"columns", proto.columns},
                                   {"rows", rows}}};
        const auto result = sa::execute_tool(call, wb);
        if (result.status != sa::ToolStatus::Ok) throw UserError(path + ": " + result.message);
        return wb;
    }
    try {
        return sa::parse_state(text);
    } catch (const sa::StateFormatError& e) {
        throw UserError(path + ": " + e.what());
    }
}

sa::BackendConfig backend_config(const std::string& mode, const std::string& script, const std::string& fixture) {
    sa::BackendConfig config;
    try {
        config = sa::BackendConfig::from_env();
    } catch (const sa::BackendError& e) {
        throw UserError(e.what());
    }
    if (!mode.empty()) {
        auto m = sa::parse_backend_mode(mode);
        if (!m) throw UserError("--backend must be live, scripted or replay");
        config.mode = *m;
    }
    if (!script.empty()) config.script_path = script;
    if (!fixture.empty()) config.fixture_path = fixture;
    if (auto p = config.problem()) throw UserError(*p);
    return config;
}

std::unique_ptr<sa::Backend> backend_from(const sa::BackendConfig& config) {
    try {
        return sa::make_backend(config);
    } catch (const sa::BackendError& e) {
        throw UserError(e.what());
    }
}

// ---------------------------------------------------------------------------
// session driving

void print_turn(std::ostream& out, const sa::TurnOutcome& outcome) {
    for (const auto& e : outcome.events) {
        if (e.type == "utterance") {
            out << "agent: " << e.payload["text"].get<std::string>() << "\n";
        } else if (e.type == "tool_result") {
            out << "  [" << e.payload["name"].get<std::string>() << " #" << e.payload["attempt"].get<int>() << "] "
                << e.payload["status"].get<std::string>() << ": " << e.payload["message"].get<std::string>() << "\n";
        } else if (e.type == "error") {
            out << "  ! " << e.payload["message"].get<std::string>() << "\n";
        } else if (e.type == "phase") {
            out << "  (phase: " << e.payload["phase"].get<std::string>() << ")\n";
        }
    }
    for (std::size_t i = 0; i < outcome.suggestions.size(); ++i)
        out << "  " << (i + 1) << ") " << outcome.suggestions[i].text << "\n";
}

struct RunResult {
    bool ok = true;
    std::string failure;
};

RunResult drive(sa::Session& session, const std::vector<sa::SessionInput>& inputs, std::ostream* echo) {
    RunResult r;
    for (const auto& in : inputs) {
        sa::TurnOutcome outcome;
        try {
            if (in.accept) {
                if (echo) *echo << "user (pill " << (*in.accept + 1) << "): " << session.suggestion_text(*in.accept) << "\n";
                outcome = session.accept_suggestion(*in.accept);
            } else {
                if (echo) *echo << "user: " << *in.text << "\n";
                outcome = session.run_turn(*in.text);
            }
        } catch (const sa::NoSuchSuggestion& e) {
            return RunResult{false, e.what()};
        }
        if (echo) print_turn(*echo, outcome);
        if (outcome.status == sa::TurnStatus::Aborted) {
            for (const auto& e : outcome.events)
                if (e.type == "error") r.failure = e.payload["message"].get<std::string>();
            r.ok = false;
            return r;
        }
    }
    return r;
}

void write_outputs(const sa::Session& session, const std::string& transcript, const std::string& state) {
    if (!transcript.empty()) {
        std::string lines;
        for (const auto& e : session.events().all()) lines += e.to_line() + "\n";
        write_text(transcript, lines);
    }
    if (!state.empty()) write_text(state, session.state_document() + "\n");
}

std::vector<sa::SessionInput> inputs_of(const sa::Script& script) {
    std::vector<sa::SessionInput> inputs;
    for (const auto& t : script.turns) {
        sa::SessionInput in;
        if (t.accept) in.accept = t.accept;
        else in.text = t.user;
        inputs.push_back(in);
    }
    return inputs;
}

sa::Script load_script(const sa::Json& j, const std::string& path) {
    try {
        return sa::Script::from_json(j);
    } catch (const std::exception& e) {
        throw UserError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// commands

int cmd_eval(const std::string& workbook, const std::string& formula, const std::string& sheet) {
    const sa::Workbook wb = load_workbook(workbook);
    sa::ExprPtr ast;
    try {
        ast = sa::parse_formula(formula.empty() || formula.front() != '=' ? "=" + formula : formula);
    } catch (const sa::ParseError& e) {
        throw UserError(std::string("formula: ") + e.what());
    }
    std::string target = sheet.empty() ? wb.sheets().front().name : sheet;
    if (!wb.find_sheet(target)) throw UserError("no sheet named '" + target + "'");
    std::cout << sa::evaluate(*ast, wb, std::string_view(target)).display() << "\n";
    return 0;
}

int cmd_replay(const std::string& fixture_path, const std::string& transcript, const std::string& state, bool quiet) {
    const sa::Json doc = read_json(fixture_path);
    const std::string version = doc.is_object() ? doc.value("schemaVersion", "") : "";
    std::shared_ptr<sa::Backend> backend;
    std::vector<sa::SessionInput> inputs;
    if (version == "script/v1") {
        sa::Script script = load_script(doc, fixture_path);
        inputs = inputs_of(script);
        backend = std::make_shared<sa::ScriptedBackend>(std::move(script));
    } else if (version == "fixture/v1") {
        sa::Fixture fixture;
        try {
            fixture = sa::Fixture::from_json(doc);
        } catch (const std::exception& e) {
            throw UserError(fixture_path + ": " + e.what());
        }
        inputs = fixture.inputs;
        backend = std::make_shared<sa::ReplayBackend>(fixture);
    } else {
        throw UserError(fixture_path + ": schemaVersion must be script/v1 or fixture/v1");
    }
    sa::Session session(backend);
    const RunResult r = drive(session, inputs, quiet ? nullptr : &std::cout);
    write_outputs(session, transcript, state);
    if (!r.ok) throw UserError("replay stopped: " + r.failure);
    return 0;
}

int cmd_record(const std::string& script_path, const std::string& inputs_path, const std::string& out,
               const std::string& transcript, const std::string& state, bool quiet) {
    std::unique_ptr<sa::Backend> inner;
    std::vector<sa::SessionInput> inputs;
    if (!script_path.empty()) {
        sa::Script script = load_script(read_json(script_path), script_path);
        inputs = inputs_of(script);
        inner = std::make_unique<sa::ScriptedBackend>(std::move(script));
    } else {
        if (inputs_path.empty()) throw UserError("record needs --script, or --inputs with a live backend");
        const sa::Json j = read_json(inputs_path);
        if (!j.is_array()) throw UserError(inputs_path + ": expected an array of {text} or {accept} objects");
        try {
            for (const auto& i : j) inputs.push_back(sa::SessionInput::from_json(i));
        } catch (const std::exception& e) {
            throw UserError(inputs_path + ": " + e.what());
        }
        sa::BackendConfig config = backend_config("live", "", "");
        inner = backend_from(config);
    }
    auto recorder = std::make_shared<sa::RecordingBackend>(std::move(inner));
    sa::Session session(recorder);
    const RunResult r = drive(session, inputs, quiet ? nullptr : &std::cout);
    sa::Fixture fixture;
    fixture.inputs = inputs;
    fixture.entries = recorder->entries();
    try {
        fixture.save(out);
    } catch (const sa::BackendError& e) {
        throw UserError(e.what());
    }
    write_outputs(session, transcript, state);
    if (!r.ok) throw UserError("recording stopped: " + r.failure);
    return 0;
}

void print_markdown_previews(const std::string& text) {
    try {
        const sa::TableProto proto = sa::parse_markdown(text);
        std::cout << "  preview:\n";
        std::istringstream lines(sa::render_markdown(proto));
        for (std::string line; std::getline(lines, line);) std::cout << "    " << line << "\n";
    } catch (const std::exception&) {
    }
}

int cmd_repl(const std::string& mode, const std::string& script, const std::string& fixture) {
    const sa::BackendConfig config = backend_config(mode, script, fixture);
    sa::Session session(backend_from(config));
    std::cout << "Type a message, a pill number, :undo, :state or :quit.\n";
    for (std::string line; std::cout << "> " << std::flush, std::getline(std::cin, line);) {
        const std::string input(sa::trim(line));
        if (input.empty()) continue;
        if (input == ":quit") break;
        if (input == ":state") {
            std::cout << session.state_document() << "\n";
            continue;
        }
        if (input == ":undo") {
            try {
                session.undo();
                std::cout << "  undone\n";
            } catch (const std::exception& e) {
                std::cout << "  ! " << e.what() << "\n";
            }
            continue;
        }
        sa::TurnOutcome outcome;
        const auto pill = sa::parse_number(input);
        if (pill && *pill >= 1 && *pill <= 3 && *pill == static_cast<int>(*pill) &&
            session.pending_suggestions().size() == sa::kSuggestionCount) {
            outcome = session.accept_suggestion(static_cast<std::size_t>(*pill) - 1);
        } else {
            outcome = session.run_turn(input);
        }
        print_turn(std::cout, outcome);
        if (outcome.final_utterance) print_markdown_previews(*outcome.final_utterance);
    }
    return 0;
}

sa::Service* g_service = nullptr;

int cmd_serve(const std::string& host, int port) {
    const sa::BackendConfig config = backend_config("", "", "");
    // Validate files once up front; each session then gets its own backend.
    backend_from(config);
    sa::Service service([config] { return std::shared_ptr<sa::Backend>(sa::make_backend(config)); });
    const int bound = service.bind(host, port);
    if (bound < 0) throw UserError("cannot listen on " + host + ":" + std::to_string(port));
    std::cerr << "listening on http://" << host << ":" << bound << "/v1\n";
    g_service = &service;
    std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_service) g_service->stop();
    });
    service.listen();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agent-driven spreadsheet workbench"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    std::string host = "127.0.0.1";
    int port = sa::kDefaultPort;
    serve->add_option("--host", host, "Interface to bind");
    serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

    auto* repl = app.add_subcommand("repl", "Chat with the agent in the terminal");
    std::string backend_mode, script, fixture;
    repl->add_option("--backend", backend_mode, "live, scripted or replay (default: AGENT_BACKEND)");
    repl->add_option("--script", script, "script/v1 file for the scripted backend");
    repl->add_option("--fixture", fixture, "fixture/v1 file for the replay backend");

    auto* eval = app.add_subcommand("eval", "Evaluate a formula against a workbook");
    std::string workbook, formula, sheet;
    eval->add_option("--workbook", workbook, "state/v1 JSON or Markdown table file")->required();
    eval->add_option("--formula", formula, "Formula such as =SUM(B:B)")->required();
    eval->add_option("--sheet", sheet, "Context sheet (default: first)");

    auto* replay = app.add_subcommand("replay", "Run a script/v1 or fixture/v1 session end to end");
    std::string replay_fixture, transcript, state;
    bool quiet = false;
    replay->add_option("--fixture", replay_fixture, "script/v1 or fixture/v1 file")->required();
    replay->add_option("--transcript", transcript, "Write the event log here (JSON lines)");
    replay->add_option("--state", state, "Write the final state/v1 document here");
    replay->add_flag("--quiet", quiet, "Do not print the conversation");

    auto* record = app.add_subcommand("record", "Record a session into a fixture/v1 file");
    std::string record_script, record_inputs, record_out, record_transcript, record_state;
    bool record_quiet = false;
    record->add_option("--script", record_script, "Record the scripted backend answering this script");
    record->add_option("--inputs", record_inputs, "User inputs for a live recording ([{text}|{accept}])");
    record->add_option("--out", record_out, "fixture/v1 file to write")->required();
    record->add_option("--transcript", record_transcript, "Write the event log here (JSON lines)");
    record->add_option("--state", record_state, "Write the final state/v1 document here");
    record->add_flag("--quiet", record_quiet, "Do not print the conversation");

    app.add_subcommand("tools", "Print the tool descriptors (tools/v1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    try {
        if (*serve) return cmd_serve(host, port);
        if (*repl) return cmd_repl(backend_mode, script, fixture);
        if (*eval) return cmd_eval(workbook, formula, sheet);
        if (*replay) return cmd_replay(replay_fixture, transcript, state, quiet);
        if (*record) return cmd_record(record_script, record_inputs, record_out, record_transcript, record_state, record_quiet);
        std::cout << sa::tool_schemas().dump(2) << "\n";
        return 0;
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
