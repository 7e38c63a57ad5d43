#include "tabletop/service/session.hpp"

#include "httplib.h"
#include "tabletop/common/rng.hpp"
#include "tabletop/kinematics/arm.hpp"
#include "tabletop/sim/scenarios.hpp"
#include "tabletop/sim/snapshot.hpp"

namespace tabletop::service {

using agent::EventKind;
using agent::SessionEvent;

EventLog::EventLog(std::filesystem::path path, std::shared_ptr<agent::Clock> clock) : path_(std::move(path)), clock_(std::move(clock)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    file_.open(path_, std::ios::out | std::ios::trunc);
    if (!file_) throw ConfigError("cannot open session log " + path_.string());
}

const SessionEvent& EventLog::append(EventKind kind, json payload) {
    std::lock_guard lock(mu_);
    if (sealed_) throw ClosedError("event log is sealed");
    SessionEvent e{events_.size() + 1, clock_->now(), kind, std::move(payload)};
    // Durable first, visible second.
    file_ << agent::to_jsonl(e) << '\n';
    file_.flush();
    if (!file_) throw Error("failed to persist event " + std::to_string(e.seq) + " to " + path_.string());
    events_.push_back(std::move(e));
    cv_.notify_all();
    return events_.back();
}

std::vector<SessionEvent> EventLog::since(uint64_t from) const {
    std::lock_guard lock(mu_);
    const size_t start = from == 0 ? 0 : static_cast<size_t>(from - 1);
    if (start >= events_.size()) return {};
    return {events_.begin() + static_cast<long>(start), events_.end()};
}

bool EventLog::wait(uint64_t from, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return sealed_ || events_.size() + 1 > from; });
    return events_.size() + 1 > from;
}

void EventLog::seal() {
    std::lock_guard lock(mu_);
    sealed_ = true;
    cv_.notify_all();
}

bool EventLog::sealed() const {
    std::lock_guard lock(mu_);
    return sealed_;
}

uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mu_);
    return events_.size();
}

std::vector<SessionEvent> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("no session log at " + path.string());
    std::vector<SessionEvent> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(agent::session_event_from_json(json::parse(line)));
    }
    return out;
}

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::idle: return "idle";
        case SessionState::planning: return "planning";
        case SessionState::executing: return "executing";
        case SessionState::evaluating: return "evaluating";
        case SessionState::awaiting_instruction: return "awaiting_instruction";
        case SessionState::closed: return "closed";
    }
    return "?";
}

json to_json(const SessionConfig& c) {
    return json{{"loop", agent::to_json(c.loop)},
                {"backends", {{"planner", c.planner}, {"converter", c.converter}, {"evaluator", c.evaluator}}},
                {"profile", c.profile},
                {"fail_prob", c.fail_prob},
                {"degradation",
                 {{"miss_prob", c.degradation.miss_prob},
                  {"occlusion_mislabel_prob", c.degradation.occlusion_mislabel_prob},
                  {"box_jitter_px", c.degradation.box_jitter_px},
                  {"seed", c.degradation.seed}}}};
}

SessionConfig session_config_from_json(const json& j, const SessionConfig& defaults) {
    SessionConfig c = defaults;
    try {
        if (j.contains("loop")) {
            json merged = agent::to_json(defaults.loop);
            merged.update(j.at("loop"));
            c.loop = agent::loop_config_from_json(merged);
        }
        const json backends = j.value("backends", json::object());
        if (backends.contains("all")) c.planner = c.converter = c.evaluator = backends.at("all").get<std::string>();
        c.planner = backends.value("planner", c.planner);
        c.converter = backends.value("converter", c.converter);
        c.evaluator = backends.value("evaluator", c.evaluator);
        c.profile = j.value("profile", c.profile);
        c.fail_prob = j.value("fail_prob", c.fail_prob);
        const json d = j.value("degradation", json::object());
        c.degradation.miss_prob = d.value("miss_prob", c.degradation.miss_prob);
        c.degradation.occlusion_mislabel_prob = d.value("occlusion_mislabel_prob", c.degradation.occlusion_mislabel_prob);
        c.degradation.box_jitter_px = d.value("box_jitter_px", c.degradation.box_jitter_px);
        c.degradation.seed = d.value("seed", c.degradation.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed session config: ") + e.what());
    }
    if (!(c.fail_prob >= 0.0 && c.fail_prob <= 1.0)) throw ConfigError("fail_prob must lie in [0, 1]");
    try {
        perception::validate(c.degradation);
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

Session::Session(std::string id, std::string scenario, uint64_t seed, std::string task_id, SessionConfig config, const sim::Registry& registry,
                 std::shared_ptr<agent::Clock> clock, const std::filesystem::path& log_path, std::shared_ptr<speech::AsrClient> asr,
                 std::shared_ptr<speech::TtsClient> tts, speech::VadConfig vad)
    : id_(std::move(id)),
      scenario_(std::move(scenario)),
      seed_(seed),
      task_id_(std::move(task_id)),
      config_(std::move(config)),
      registry_(registry),
      asr_(std::move(asr)),
      tts_(std::move(tts)),
      vad_(vad),
      log_(log_path, std::move(clock)) {
    scene_ = task_id_.empty() ? sim::make_scene(registry_, scenario_, seed_) : sim::make_task_scene(registry_, registry_.task(task_id_), seed_);
    auto degradation = config_.degradation;
    degradation.seed = mix_seed(degradation.seed, seed_);
    exec_ = std::make_unique<skills::SkillExecutor>(scene_, std::make_shared<perception::OracleDetector>(degradation), perception::overhead_camera(),
                                                    kinematics::default_arm(), registry_.synonyms(), config_.fail_prob);
    backends_ = {agent::make_backend(config_.planner, registry_), agent::make_backend(config_.converter, registry_),
                 agent::make_backend(config_.evaluator, registry_)};
    agent::default_profile(config_.profile);  // fail at creation, not mid-episode
    latest_scene_ = sim::to_json(scene_, false);
    log_.append(EventKind::scene_snapshot, {{"attempt", 0}, {"scene", latest_scene_}});
    state_ = SessionState::awaiting_instruction;
}

Session::~Session() {
    close();
}

SessionState Session::state() const {
    std::lock_guard lock(mu_);
    return state_;
}

json Session::descriptor() const {
    std::lock_guard lock(mu_);
    return json{{"schema", "session"},
                {"v", 1},
                {"id", id_},
                {"scenario", scenario_},
                {"seed", seed_},
                {"task_id", task_id_},
                {"state", to_string(state_)},
                {"seq", log_.last_seq()},
                {"episodes", episodes_},
                {"config", to_json(config_)},
                {"asr", asr_ ? asr_->name() : ""},
                {"tts", tts_ ? tts_->name() : ""}};
}

json Session::scene_snapshot() const {
    std::lock_guard lock(mu_);
    return json{{"schema", "scene_snapshot"}, {"v", 1}, {"session", id_}, {"seq", log_.last_seq()}, {"scene", latest_scene_}};
}

uint64_t Session::submit(const std::string& text) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw PreconditionError("instruction text is empty");
    std::lock_guard lock(mu_);
    if (state_ == SessionState::closed) throw ClosedError("session " + id_ + " is closed");
    if (running_) throw BusyError("session " + id_ + " is " + std::string(to_string(state_)));
    if (worker_.joinable()) worker_.join();
    running_ = true;
    state_ = SessionState::planning;
    ++episodes_;
    const uint64_t seq = log_.last_seq() + 1;
    worker_ = std::thread([this, text] { run(text); });
    return seq;
}

uint64_t Session::submit_audio(const std::string& wav_bytes) {
    if (!asr_) throw PreconditionError("no ASR client bound");
    {
        std::lock_guard lock(mu_);
        if (state_ == SessionState::closed) throw ClosedError("session " + id_ + " is closed");
        if (running_) throw BusyError("session " + id_ + " is " + std::string(to_string(state_)));
    }
    auto audio = speech::parse_wav(wav_bytes);
    auto vad = vad_;
    vad.sample_rate = audio.sample_rate;
    try {
        speech::validate(vad);
    } catch (const ConfigError& e) {
        throw PreconditionError(std::string("unsupported sample rate: ") + e.what());
    }
    auto segments = speech::capture_all(vad, audio.samples, true);
    if (segments.empty()) throw PreconditionError("no speech detected in the upload");
    const auto text = asr_->transcribe(speech::Audio{audio.sample_rate, segments.front().samples});
    return submit(text);
}

void Session::wait_idle() {
    std::unique_lock lock(mu_);
    idle_cv_.wait(lock, [&] { return !running_; });
}

void Session::close() {
    {
        std::lock_guard lock(mu_);
        if (state_ == SessionState::closed && !worker_.joinable()) return;
        state_ = SessionState::closed;
    }
    // Let a running episode finish; its events still land in the log.
    wait_idle();
    if (worker_.joinable()) worker_.join();
    log_.seal();
}

json Session::speak(const std::string& text) {
    json payload{{"text", text}, {"mode", "text"}};
    if (!tts_) return payload;
    try {
        auto h = tts_->synthesize(text);
        payload["tts"] = tts_->name();
        if (h.kind == speech::AudioHandle::Kind::wav) {
            payload["mode"] = "audio";
            payload["audio_wav_b64"] = httplib::detail::base64_encode(h.data);
        } else if (h.kind == speech::AudioHandle::Kind::url) {
            payload["mode"] = "audio";
            payload["audio_url"] = h.data;
        }
    } catch (const Error& e) {
        payload["tts_error"] = e.what();
    }
    return payload;
}

void Session::on_event(EventKind kind, const json& payload) {
    // Scene copies are taken on the worker thread, which owns scene_.
    json scene;
    if (kind == EventKind::step_result || kind == EventKind::scene_snapshot) scene = sim::to_json(scene_, false);
    log_.append(kind, payload);
    std::lock_guard lock(mu_);
    if (!scene.is_null()) latest_scene_ = std::move(scene);
    if (state_ == SessionState::closed) return;
    switch (kind) {
        case EventKind::instruction: state_ = SessionState::planning; break;
        case EventKind::plan: state_ = SessionState::executing; break;
        case EventKind::scene_snapshot: state_ = config_.loop.evaluator_enabled ? SessionState::evaluating : state_; break;
        default: break;
    }
}

void Session::run(std::string text) {
    agent::EpisodeHooks hooks{[this](EventKind k, json p) { on_event(k, p); }, [this](const std::string& t) { return speak(t); }};
    const sim::TaskSpec* task = task_id_.empty() ? registry_.find_by_instruction(text) : nullptr;
    if (!task && !task_id_.empty()) {
        const auto& pinned = registry_.task(task_id_);
        if (registry_.find_by_instruction(text) == &pinned) task = &pinned;
    }
    try {
        agent::run_episode(backends_, *exec_, text, task, config_.loop, agent::default_profile(config_.profile), registry_, hooks);
    } catch (const TransportError& e) {
        on_event(EventKind::error, {{"stage", "transport"}, {"message", e.what()}, {"status", e.status()}, {"retry_after", e.retry_after()}});
    } catch (const std::exception& e) {
        on_event(EventKind::error, {{"stage", "internal"}, {"message", e.what()}});
    }
    std::lock_guard lock(mu_);
    running_ = false;
    if (state_ != SessionState::closed) state_ = SessionState::awaiting_instruction;
    idle_cv_.notify_all();
}

CreateRequest create_request_from_json(const json& j) {
    CreateRequest r;
    try {
        if (j.contains("scenario")) {
            const auto& s = j.at("scenario");
            r.scenario = s.is_number_integer() ? std::to_string(s.get<int>()) : s.get<std::string>();
        }
        r.seed = j.value("seed", uint64_t{0});
        r.task_id = j.value("task_id", "");
        r.config = j.value("config", json::object());
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("malformed session request: ") + e.what());
    }
    if (r.scenario.empty() && r.task_id.empty()) throw PreconditionError("session request needs a scenario or a task_id");
    return r;
}

SessionManager::SessionManager(const sim::Registry& registry, ServiceOptions options) : registry_(registry), options_(std::move(options)) {
    if (options_.max_sessions == 0) throw ConfigError("max_sessions must be at least 1");
    speech::validate(options_.vad);
    if (!options_.asr.empty()) asr_ = speech::make_asr(options_.asr);
    if (!options_.tts.empty()) tts_ = speech::make_tts(options_.tts);
    std::filesystem::create_directories(options_.log_dir);
}

SessionManager::~SessionManager() {
    std::map<std::string, std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(mu_);
        all.swap(sessions_);
    }
    for (auto& [id, s] : all) s->close();
}

std::shared_ptr<Session> SessionManager::create(const CreateRequest& request) {
    std::string scenario = request.scenario;
    if (!request.task_id.empty()) {
        if (!registry_.has_task(request.task_id)) throw PreconditionError("unknown task '" + request.task_id + "'");
        const auto& task_scene = registry_.task(request.task_id).scene;
        if (!scenario.empty() && scenario != task_scene)
            throw PreconditionError("task " + request.task_id + " runs in scenario " + task_scene + ", not " + scenario);
        scenario = task_scene;
    }
    if (!registry_.has_scenario(scenario)) throw PreconditionError("unknown scenario '" + scenario + "'");
    const auto config = session_config_from_json(request.config, options_.defaults);

    std::lock_guard lock(mu_);
    size_t live = 0;
    for (const auto& [id, s] : sessions_) live += s->state() != SessionState::closed;
    if (live >= options_.max_sessions) throw CapacityError("session limit of " + std::to_string(options_.max_sessions) + " reached");
    std::string id;
    do {
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%04llu", static_cast<unsigned long long>(++counter_));
        id = buf;
    } while (sessions_.count(id) || std::filesystem::exists(options_.log_dir / (id + ".jsonl")));
    std::shared_ptr<agent::Clock> clock;
    if (options_.logical_clock) clock = std::make_shared<agent::LogicalClock>();
    else clock = std::make_shared<agent::SystemClock>();
    auto session = std::make_shared<Session>(id, scenario, request.seed, request.task_id, config, registry_, clock, options_.log_dir / (id + ".jsonl"),
                                             asr_, tts_, options_.vad);
    sessions_.emplace(id, session);
    return session;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
}

void SessionManager::close(const std::string& id) { get(id)->close(); }

std::vector<std::shared_ptr<Session>> SessionManager::list() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& [id, s] : sessions_) out.push_back(s);
    return out;
}

}  // namespace tabletop::service
