#include "sophie/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "sophie/errors.hpp"

namespace sophie {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso8601(std::chrono::system_clock::time_point tp) {
    const std::time_t secs = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::int64_t epoch_ms(std::chrono::system_clock::time_point tp) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
}

// Ids become file names, so only a narrow alphabet is accepted.
bool safe_id(std::string_view id) {
    return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    });
}

void write_all(int fd, const std::string& data, const fs::path& path) {
    std::size_t done = 0;
    while (done < data.size()) {
        const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error("write " + path.string() + ": " + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

void append_lines(const fs::path& path, const std::vector<json>& events) {
    if (events.empty()) return;
    std::string data;
    for (const auto& e : events) data += e.dump() + "\n";
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("open " + path.string() + ": " + std::strerror(errno));
    try {
        write_all(fd, data, path);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::fdatasync(fd);
    ::close(fd);
}

// Write-then-rename so readers never see a half-written file.
void write_file_atomic(const fs::path& path, const std::string& data) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("open " + tmp.string() + ": " + std::strerror(errno));
    try {
        write_all(fd, data, tmp);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::fdatasync(fd);
    ::close(fd);
    fs::rename(tmp, path);
}

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json turn_event(const Turn& t) {
    json j = turn_to_json(t);
    return {{"event", "turn"}, {"turn", j}};
}

json gist_event(const GistRecord& g) {
    return {{"event", "gist"}, {"speaker", to_string(g.speaker)}, {"gist", g.gist}, {"turn_index", g.turn_index}};
}

json status_event(SessionStatus s, std::string_view reason, std::chrono::system_clock::time_point at) {
    return {{"event", "status"}, {"status", to_string(s)}, {"reason", reason}, {"at", epoch_ms(at)}};
}

} // namespace

json turn_to_json(const Turn& t) {
    json j = {{"index", t.index}, {"speaker", to_string(t.speaker)}, {"text", t.text}};
    if (t.start_ms) j["start_ms"] = *t.start_ms;
    if (t.end_ms) j["end_ms"] = *t.end_ms;
    return j;
}

struct SessionService::Record {
    std::mutex mutex;
    SessionState state;
    fs::path log;
    std::chrono::system_clock::time_point last_activity;
    std::optional<std::string> report_id;
};

SessionService::SessionService(Content content, ServiceOptions options)
    : content_(std::move(content)), options_(std::move(options)), manager_(content_.schemas, content_.rules) {
    fs::create_directories(options_.data_dir / "sessions");
    fs::create_directories(options_.data_dir / "reports");
    recover();
}

SessionService::~SessionService() = default;

void SessionService::recover() {
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(options_.data_dir / "sessions")) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& log : logs) recover_session(log);
}

void SessionService::recover_session(const fs::path& log) {
    std::ifstream in(log);
    auto rec = std::make_shared<Record>();
    rec->log = log;
    rec->last_activity = options_.clock();
    bool created = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json e = json::parse(line, nullptr, false);
        if (e.is_discarded() || !e.is_object()) break;  // torn tail from a crash
        const std::string kind = e.value("event", "");
        SessionState& st = rec->state;
        if (kind == "created") {
            st.session_id = e.value("session_id", "");
            st.transcript.schema_id = e.value("schema_id", "");
            if (e.contains("created_at")) st.transcript.created_at = e["created_at"].get<std::string>();
            if (e.contains("timing")) st.transcript.timing_source = e["timing"].get<std::string>();
            created = true;
        } else if (kind == "turn") {
            const json& t = e["turn"];
            Turn turn;
            turn.index = st.transcript.turns.size();
            turn.speaker = parse_speaker(t.value("speaker", "")).value_or(Speaker::Patient);
            turn.text = t.value("text", "");
            if (t.contains("start_ms")) turn.start_ms = t["start_ms"].get<std::int64_t>();
            if (t.contains("end_ms")) turn.end_ms = t["end_ms"].get<std::int64_t>();
            st.transcript.turns.push_back(std::move(turn));
        } else if (kind == "gist") {
            st.gist_history.push_back({parse_speaker(e.value("speaker", "")).value_or(Speaker::Patient),
                                       e.value("gist", ""), e.value("turn_index", std::size_t{0})});
        } else if (kind == "status") {
            st.status = e.value("status", "") == "completed" ? SessionStatus::Completed : SessionStatus::Active;
        } else if (kind == "report") {
            rec->report_id = e.value("report_id", "");
        }
    }
    if (!created || rec->state.session_id.empty()) return;
    if (rec->state.status == SessionStatus::Active) {
        rec->state.status = SessionStatus::Completed;
        append_lines(log, {status_event(SessionStatus::Completed, "recovered", options_.clock())});
    }
    std::unique_lock lock(registry_mutex_);
    sessions_[rec->state.session_id] = rec;
}

std::vector<SchemaSummary> SessionService::list_schemas() const {
    std::vector<SchemaSummary> out;
    for (const auto* s : content_.schemas->all()) out.push_back({s->id, s->description});
    return out;
}

std::shared_ptr<SessionService::Record> SessionService::find_record(const std::string& session_id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session \"" + session_id + "\"");
    return it->second;
}

bool SessionService::expire_locked(Record& rec, std::chrono::system_clock::time_point now) {
    if (rec.state.status != SessionStatus::Active) return false;
    if (now - rec.last_activity <= options_.idle_limit) return false;
    rec.state.status = SessionStatus::Completed;
    append_lines(rec.log, {status_event(SessionStatus::Completed, "expired", now)});
    return true;
}

std::size_t SessionService::expire_idle() {
    std::vector<std::shared_ptr<Record>> all;
    {
        std::shared_lock lock(registry_mutex_);
        for (const auto& [_, rec] : sessions_) all.push_back(rec);
    }
    const auto now = options_.clock();
    std::size_t n = 0;
    for (const auto& rec : all) {
        std::lock_guard lock(rec->mutex);
        if (expire_locked(*rec, now)) ++n;
    }
    return n;
}

CreatedSession SessionService::create_session(std::string_view schema_id, std::optional<std::string> timing_source) {
    if (!content_.schemas->find(schema_id)) {
        throw NotFoundError("unknown schema \"" + std::string(schema_id) + "\"");
    }
    if (timing_source && *timing_source != "speech" && *timing_source != "typing") {
        throw UsageError("timing must be \"speech\" or \"typing\"");
    }
    expire_idle();

    const auto now = options_.clock();
    auto start = manager_.start_session(schema_id);
    auto rec = std::make_shared<Record>();
    rec->state = std::move(start.state);
    rec->state.transcript.created_at = iso8601(now);
    rec->state.transcript.timing_source = timing_source;
    rec->last_activity = now;
    rec->log = options_.data_dir / "sessions" / (rec->state.session_id + ".jsonl");

    const SessionState& st = rec->state;
    json created = {{"event", "created"},
                    {"session_id", st.session_id},
                    {"schema_id", *st.transcript.schema_id},
                    {"created_at", *st.transcript.created_at},
                    {"at", epoch_ms(now)}};
    if (timing_source) created["timing"] = *timing_source;
    std::vector<json> events{created};
    for (const auto& t : st.transcript.turns) events.push_back(turn_event(t));
    for (const auto& g : st.gist_history) events.push_back(gist_event(g));
    if (st.status == SessionStatus::Completed) events.push_back(status_event(st.status, "schema finished", now));
    append_lines(rec->log, events);

    CreatedSession out{st.session_id, start.opening, st.status};
    std::unique_lock lock(registry_mutex_);
    sessions_[out.session_id] = std::move(rec);
    return out;
}

TurnResult SessionService::post_turn(const std::string& session_id, std::string_view text, TurnTiming timing) {
    auto rec = find_record(session_id);
    std::lock_guard lock(rec->mutex);
    const auto now = options_.clock();
    if (expire_locked(*rec, now)) throw StateError("session " + session_id + " expired after being idle");

    SessionState& st = rec->state;
    const std::size_t turns_before = st.transcript.turns.size();
    const std::size_t gists_before = st.gist_history.size();
    const SessionStatus status_before = st.status;

    TurnResult out;
    out.patient_turns = manager_.process_user_turn(st, text, timing);
    out.status = st.status;
    rec->last_activity = now;

    std::vector<json> events;
    for (std::size_t i = turns_before; i < st.transcript.turns.size(); ++i) {
        events.push_back(turn_event(st.transcript.turns[i]));
    }
    for (std::size_t i = gists_before; i < st.gist_history.size(); ++i) {
        events.push_back(gist_event(st.gist_history[i]));
    }
    if (st.status != status_before) events.push_back(status_event(st.status, "schema finished", now));
    append_lines(rec->log, events);
    return out;
}

StoredReport SessionService::store_report(const FeedbackReport& report, const std::optional<std::string>& session_id) {
    StoredReport sr;
    sr.report_id = make_unique_id("r-");
    sr.session_id = session_id;
    sr.created_at = iso8601(options_.clock());
    sr.bytes = serialize_report(report);
    json meta = {{"report_id", sr.report_id}, {"created_at", sr.created_at}};
    if (session_id) meta["session_id"] = *session_id;
    const fs::path dir = options_.data_dir / "reports";
    write_file_atomic(dir / (sr.report_id + ".json"), sr.bytes);
    write_file_atomic(dir / (sr.report_id + ".meta.json"), meta.dump(2) + "\n");
    return sr;
}

StoredReport SessionService::end_session(const std::string& session_id) {
    auto rec = find_record(session_id);
    std::lock_guard lock(rec->mutex);
    if (rec->report_id) return report(*rec->report_id);

    const auto now = options_.clock();
    std::vector<json> events;
    if (rec->state.status == SessionStatus::Active) {
        manager_.end_session(rec->state);
        events.push_back(status_event(SessionStatus::Completed, "ended", now));
    }
    const auto report = compute_report(rec->state.transcript, content_.lexicons, *content_.rules, content_.metrics);
    StoredReport sr = store_report(report, session_id);
    events.push_back({{"event", "report"}, {"report_id", sr.report_id}, {"at", epoch_ms(now)}});
    append_lines(rec->log, events);
    rec->report_id = sr.report_id;
    return sr;
}

StoredReport SessionService::analyze(std::string_view transcript_document) {
    const Transcript t = parse_transcript(transcript_document);
    return store_report(compute_report(t, content_.lexicons, *content_.rules, content_.metrics), std::nullopt);
}

StoredReport SessionService::report(const std::string& report_id) const {
    if (!safe_id(report_id)) throw NotFoundError("unknown report \"" + report_id + "\"");
    const fs::path dir = options_.data_dir / "reports";
    auto bytes = read_file(dir / (report_id + ".json"));
    if (!bytes) throw NotFoundError("unknown report \"" + report_id + "\"");
    StoredReport sr;
    sr.report_id = report_id;
    sr.bytes = std::move(*bytes);
    if (auto meta_text = read_file(dir / (report_id + ".meta.json"))) {
        json meta = json::parse(*meta_text, nullptr, false);
        if (meta.is_object()) {
            sr.created_at = meta.value("created_at", "");
            if (meta.contains("session_id")) sr.session_id = meta["session_id"].get<std::string>();
        }
    }
    return sr;
}

Transcript SessionService::transcript(const std::string& session_id) const {
    auto rec = find_record(session_id);
    std::lock_guard lock(rec->mutex);
    return rec->state.transcript;
}

SessionStatus SessionService::status(const std::string& session_id) const {
    auto rec = find_record(session_id);
    std::lock_guard lock(rec->mutex);
    return rec->state.status;
}

std::vector<std::string> SessionService::session_ids() const {
    std::shared_lock lock(registry_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
}

} // namespace sophie
