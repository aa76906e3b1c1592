#include <sys/socket.h>

#include <httplib.h>

#include "sophie/errors.hpp"
#include "sophie/service.hpp"

namespace sophie {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", kJson);
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const json& extra = nullptr) {
    json err = {{"code", code}, {"message", message}};
    if (!extra.is_null()) err["violations"] = extra;
    send_json(res, status, {{"error", err}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) throw UsageError("request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
}

std::optional<std::int64_t> optional_ms(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw UsageError(std::string(key) + " must be an integer");
    return it->get<std::int64_t>();
}

json turns_json(const std::vector<Turn>& turns) {
    json out = json::array();
    for (const auto& t : turns) out.push_back(turn_to_json(t));
    return out;
}

json report_body(const StoredReport& sr) {
    json body = {{"report_id", sr.report_id}, {"report", json::parse(sr.bytes)}};
    if (sr.session_id) body["session_id"] = *sr.session_id;
    return body;
}

// Maps the library's exception types onto HTTP status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const NotFoundError& e) {
            send_error(res, 404, "not_found", e.what());
        } catch (const StateError& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const ValidationError& e) {
            json vs = json::array();
            for (const auto& v : e.violations()) {
                json item = {{"rule", v.rule}, {"message", v.message}};
                if (v.turn_index) item["turn_index"] = *v.turn_index;
                vs.push_back(item);
            }
            send_error(res, 400, "invalid_transcript", e.what(), vs);
        } catch (const ParseError& e) {
            send_error(res, 400, "malformed_json", e.what());
        } catch (const UsageError& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

} // namespace

struct HttpServer::Impl {
    explicit Impl(SessionService& s) : service(s) {}
    SessionService& service;
    httplib::Server server;
};

HttpServer::HttpServer(SessionService& service, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& svr = impl_->server;
    auto& svc = impl_->service;

    // The library default adds SO_REUSEPORT, which would let a second server
    // share a busy port.
    svr.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });

    svr.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    }));

    svr.Get("/api/schemas", guarded([&svc](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& s : svc.list_schemas()) list.push_back({{"id", s.id}, {"description", s.description}});
        send_json(res, 200, {{"schemas", list}});
    }));

    svr.Post("/api/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        auto id = body.find("schema_id");
        if (id == body.end() || !id->is_string()) throw UsageError("schema_id must be a string");
        std::optional<std::string> timing;
        if (auto t = body.find("timing"); t != body.end() && t->is_string()) timing = t->get<std::string>();
        const auto created = svc.create_session(id->get<std::string>(), timing);
        send_json(res, 201, {{"session_id", created.session_id},
                             {"status", to_string(created.status)},
                             {"turns", turns_json(created.opening)}});
    }));

    svr.Get(R"(/api/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto status = svc.status(id);
        send_json(res, 200, {{"session_id", id},
                             {"status", to_string(status)},
                             {"transcript", transcript_to_json(svc.transcript(id))}});
    }));

    svr.Post(R"(/api/sessions/([^/]+)/turns)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const json body = parse_body(req);
        auto text = body.find("text");
        if (text == body.end() || !text->is_string()) throw UsageError("text must be a string");
        TurnTiming timing{optional_ms(body, "start_ms"), optional_ms(body, "end_ms")};
        const auto result = svc.post_turn(id, text->get<std::string>(), timing);
        send_json(res, 200, {{"session_id", id},
                             {"status", to_string(result.status)},
                             {"turns", turns_json(result.patient_turns)}});
    }));

    svr.Post(R"(/api/sessions/([^/]+)/end)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, report_body(svc.end_session(req.matches[1])));
    }));

    svr.Post("/api/analyze", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 201, report_body(svc.analyze(req.body)));
    }));

    svr.Get(R"(/api/reports/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto sr = svc.report(req.matches[1]);
        res.status = 200;
        res.set_content(sr.bytes, kJson);
    }));

    svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        if (res.status == 404) {
            send_error(res, 404, "not_found", "no route for " + req.method + " " + req.path);
        } else {
            send_error(res, res.status, "http_error", httplib::status_message(res.status));
        }
    });

    if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) {
        svr.set_mount_point("/", static_dir.string());
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& svr = impl_->server;
    if (port == 0) {
        const int bound = svr.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host + " on an ephemeral port");
        return bound;
    }
    if (!svr.bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
    }
    return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace sophie
