#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sophie/config.hpp"
#include "sophie/content.hpp"
#include "sophie/dialogue.hpp"
#include "sophie/errors.hpp"
#include "sophie/metrics.hpp"
#include "sophie/service.hpp"
#include "sophie/transcript.hpp"

namespace sophie::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::optional<fs::path> config;

    fs::path analyze_input;
    std::optional<fs::path> analyze_out;
    std::string analyze_format = "json";

    std::string chat_schema;
    std::optional<fs::path> chat_record;
    bool chat_untimed = false;

    std::optional<fs::path> validate_dir;

    std::optional<int> serve_port;
    std::optional<fs::path> serve_data_dir;
    std::string serve_host = "127.0.0.1";
};

std::optional<std::string> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool write_file(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
    return static_cast<bool>(out.flush());
}

void print_violations(const ValidationError& e, std::ostream& err) {
    for (const auto& v : e.violations()) err << "invalid: " << describe(v) << "\n";
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
    const Config cfg = resolve_config(o.config);
    const auto doc = read_file(o.analyze_input);
    if (!doc) {
        err << "sophie: cannot read " << o.analyze_input.string() << "\n";
        return kEnvironmentError;
    }
    Transcript t;
    try {
        t = parse_transcript(*doc);
    } catch (const ParseError& e) {
        err << "invalid: " << e.what() << "\n";
        return kValidationError;
    } catch (const ValidationError& e) {
        print_violations(e, err);
        return kValidationError;
    }
    const Content content = load_content(cfg);
    const auto report = compute_report(t, content.lexicons, *content.rules, content.metrics);
    const std::string text = o.analyze_format == "text" ? render_text_report(report) : serialize_report(report);
    if (o.analyze_out) {
        if (!write_file(*o.analyze_out, text)) {
            err << "sophie: cannot write " << o.analyze_out->string() << "\n";
            return kEnvironmentError;
        }
    } else {
        out << text;
        out.flush();
    }
    return kOk;
}

int cmd_chat(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
    const Config cfg = resolve_config(o.config);
    const Content content = load_content(cfg);
    if (!content.schemas->find(o.chat_schema)) {
        err << "sophie: unknown schema \"" << o.chat_schema << "\"\n";
        return kEnvironmentError;
    }
    DialogueManager dm(content.schemas, content.rules);
    auto start = dm.start_session(o.chat_schema);
    SessionState& st = start.state;
    if (!o.chat_untimed) st.transcript.timing_source = "typing";

    using steady = std::chrono::steady_clock;
    const auto origin = steady::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(steady::now() - origin).count();
    };
    auto show = [&](const std::vector<Turn>& turns) {
        for (const auto& t : turns) out << "SOPHIE: " << t.text << "\n";
        out.flush();
    };
    // Patient turns are stamped when they are shown.
    auto stamp = [&](std::size_t from, std::int64_t at) {
        if (o.chat_untimed) return;
        for (std::size_t i = from; i < st.transcript.turns.size(); ++i) {
            auto& t = st.transcript.turns[i];
            if (t.speaker == Speaker::Patient) t.start_ms = t.end_ms = at;
        }
    };
    stamp(0, elapsed_ms());
    show(start.opening);

    std::string line;
    while (st.status == SessionStatus::Active) {
        const std::int64_t prompt_at = elapsed_ms();
        if (!std::getline(in, line)) break;
        if (line == "/end") break;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        TurnTiming timing;
        if (!o.chat_untimed) timing = {prompt_at, elapsed_ms()};
        const std::size_t before = st.transcript.turns.size();
        const auto reply = dm.process_user_turn(st, line, timing);
        stamp(before + 1, elapsed_ms());
        show(reply);
    }
    const Transcript t = dm.end_session(st);
    const auto report = compute_report(t, content.lexicons, *content.rules, content.metrics);
    out << "\n" << render_text_report(report);
    out.flush();
    if (o.chat_record && !write_file(*o.chat_record, serialize_transcript(t))) {
        err << "sophie: cannot write " << o.chat_record->string() << "\n";
        return kEnvironmentError;
    }
    return kOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
    const fs::path dir = o.validate_dir ? *o.validate_dir : resolve_config(o.config).content_dir;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        err << "sophie: " << dir.string() << " is not a directory\n";
        return kEnvironmentError;
    }
    const auto scan = scan_content_dir(dir);
    for (const auto& d : scan.diagnostics) err << describe(d) << "\n";
    if (!scan.clean()) return kValidationError;
    out << "ok: " << scan.rules->size() << " rule trees, " << scan.schemas->size() << " schemas\n";
    return kOk;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
    Config cfg = resolve_config(o.config);
    if (o.serve_data_dir) cfg.data_dir = *o.serve_data_dir;
    const int port = o.serve_port ? *o.serve_port : cfg.port;

    // Block the signals before any thread exists so only the waiter sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &signals, &previous);
    struct Restore {
        sigset_t mask;
        ~Restore() { pthread_sigmask(SIG_SETMASK, &mask, nullptr); }
    } restore{previous};

    SessionService service(load_content(cfg), {cfg.data_dir, cfg.session_idle_limit});
    HttpServer server(service, cfg.static_dir);
    int bound = 0;
    try {
        bound = server.bind(o.serve_host, port);
    } catch (const Error& e) {
        err << "sophie: " << e.what() << "\n";
        return kEnvironmentError;
    }
    out << "listening on http://" << o.serve_host << ":" << bound << "\n";
    out.flush();

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.serve();
    // serve() can also return on its own; wake the waiter in that case.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    out << "stopped\n";
    out.flush();
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Virtual-patient conversation trainer", "sophie"};
    app.require_subcommand(1);
    app.add_option("--config", o.config, "Config file (overrides $SOPHIE_CONFIG)");

    auto* analyze = app.add_subcommand("analyze", "Compute the feedback report for a transcript");
    analyze->add_option("input", o.analyze_input, "Transcript JSON file")->required();
    analyze->add_option("--out", o.analyze_out, "Write the report here instead of stdout");
    analyze->add_option("--format", o.analyze_format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));

    auto* chat = app.add_subcommand("chat", "Talk to the virtual patient in the terminal");
    chat->add_option("--schema", o.chat_schema, "Dialogue schema id")->required();
    chat->add_option("--record", o.chat_record, "Save the transcript to this file");
    chat->add_flag("--untimed", o.chat_untimed, "Do not timestamp turns");

    auto* validate = app.add_subcommand("validate", "Check rule files and schemas");
    validate->add_option("dir", o.validate_dir, "Content directory (default: configured content_dir)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--port", o.serve_port, "TCP port, 0 for an ephemeral one")->check(CLI::Range(0, 65535));
    serve->add_option("--data-dir", o.serve_data_dir, "Persistence directory");
    serve->add_option("--host", o.serve_host, "Listen address");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidationError;
    }

    try {
        if (*analyze) return cmd_analyze(o, out, err);
        if (*chat) return cmd_chat(o, in, out, err);
        if (*validate) return cmd_validate(o, out, err);
        if (*serve) return cmd_serve(o, out, err);
    } catch (const LoadError& e) {
        err << "sophie: " << e.what() << "\n";
        return kEnvironmentError;
    } catch (const std::exception& e) {
        err << "sophie: " << e.what() << "\n";
        return kEnvironmentError;
    }
    return kEnvironmentError;
}

} // namespace sophie::cli
