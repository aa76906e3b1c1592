#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sophie/content.hpp"
#include "sophie/dialogue.hpp"
#include "sophie/metrics.hpp"
#include "sophie/transcript.hpp"

namespace sophie {

using Clock = std::function<std::chrono::system_clock::time_point()>;

struct ServiceOptions {
    std::filesystem::path data_dir = "data";
    std::chrono::hours idle_limit{24};
    Clock clock = [] { return std::chrono::system_clock::now(); };
};

struct StoredReport {
    std::string report_id;
    std::optional<std::string> session_id;
    std::string created_at;
    std::string bytes;  // canonical report JSON, exactly as persisted
};

struct CreatedSession {
    std::string session_id;
    std::vector<Turn> opening;
    SessionStatus status = SessionStatus::Active;
};

struct TurnResult {
    std::vector<Turn> patient_turns;
    SessionStatus status = SessionStatus::Active;
};

struct SchemaSummary {
    std::string id;
    std::string description;
};

/// Transport-independent session and report store.
///
/// Layout under data_dir:
///   sessions/<id>.jsonl   append-only event log, one JSON object per line
///   reports/<id>.json     canonical report bytes
///   reports/<id>.meta.json
///
/// Constructing a service replays every log it finds; sessions that were
/// still active are closed as completed with their partial transcript.
class SessionService {
public:
    SessionService(Content content, ServiceOptions options);
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    std::vector<SchemaSummary> list_schemas() const;

    // Throws NotFoundError for an unknown schema.
    CreatedSession create_session(std::string_view schema_id,
                                  std::optional<std::string> timing_source = std::nullopt);

    // Throws NotFoundError, StateError (completed or expired) or UsageError.
    TurnResult post_turn(const std::string& session_id, std::string_view text, TurnTiming timing = {});

    // Idempotent: a second call returns the report stored by the first.
    StoredReport end_session(const std::string& session_id);

    // Throws ParseError or ValidationError for a bad document.
    StoredReport analyze(std::string_view transcript_document);

    StoredReport report(const std::string& report_id) const;

    Transcript transcript(const std::string& session_id) const;
    SessionStatus status(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;

    // Completes every active session idle for longer than the limit.
    std::size_t expire_idle();

    const Content& content() const noexcept { return content_; }
    const std::filesystem::path& data_dir() const noexcept { return options_.data_dir; }

private:
    struct Record;

    std::shared_ptr<Record> find_record(const std::string& session_id) const;
    void recover();
    void recover_session(const std::filesystem::path& log);
    bool expire_locked(Record& rec, std::chrono::system_clock::time_point now);
    StoredReport store_report(const FeedbackReport& report, const std::optional<std::string>& session_id);

    Content content_;
    ServiceOptions options_;
    DialogueManager manager_;

    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Record>, std::less<>> sessions_;
};

nlohmann::json turn_to_json(const Turn& t);

class HttpServer {
public:
    HttpServer(SessionService& service, std::filesystem::path static_dir);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds without serving yet; port 0 picks an ephemeral port. Throws
    // Error when the address is unavailable. Returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void serve();
    void stop();
    bool running() const;
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace sophie
