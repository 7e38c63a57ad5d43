#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tabletop/bench/acceptance.hpp"
#include "tabletop/bench/bench.hpp"
#include "tabletop/kinematics/arm.hpp"
#include "tabletop/service/server.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/scenarios.hpp"
#include "tabletop/sim/snapshot.hpp"
#include "tabletop/speech/vad.hpp"

using namespace tabletop;

namespace {

struct BackendFlags {
    std::string all;
    std::string planner, converter, evaluator;

    void add(CLI::App* app) {
        app->add_option("--backend", all, "Backend URI for every stage (mock://rules, mock://garbage, mock://ambiguous, http://...)");
        app->add_option("--planner", planner, "Backend URI for the planner stage");
        app->add_option("--converter", converter, "Backend URI for the converter stage");
        app->add_option("--evaluator", evaluator, "Backend URI for the evaluator stage");
    }
    std::string pick(const std::string& stage, const std::string& fallback) const {
        if (!stage.empty()) return stage;
        return all.empty() ? fallback : all;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string describe(const agent::SessionEvent& e) {
    const auto& p = e.payload;
    std::string s = "[" + std::to_string(e.seq) + "] " + std::string(agent::to_string(e.kind)) + ": ";
    switch (e.kind) {
        case agent::EventKind::instruction: return s + p.value("text", "");
        case agent::EventKind::plan: {
            std::string steps;
            int i = 0;
            for (const auto& st : p.value("steps", json::array())) steps += "\n      " + std::to_string(++i) + ". " + st.get<std::string>();
            return s + "attempt " + std::to_string(p.value("attempt", 0)) + steps;
        }
        case agent::EventKind::step_started: return s + p.value("step", "");
        case agent::EventKind::skill_call: return s + p.value("text", "");
        case agent::EventKind::sim_event: {
            const json ev = p.value("event", json::object());
            return s + ev.value("kind", "") + " " + ev.value("subject", "") + (ev.value("target", "").empty() ? "" : " -> " + ev.value("target", ""));
        }
        case agent::EventKind::step_result: return s + p.value("status", "") + (p.value("message", "").empty() ? "" : " (" + p.value("message", "") + ")");
        case agent::EventKind::verdict: {
            std::string v = s + p.value("outcome", "") + (p.value("reason", "").empty() ? "" : ": " + p.value("reason", ""));
            if (p.contains("ground_truth")) v += p["ground_truth"].get<bool>() ? " [goal met]" : " [goal not met]";
            return v;
        }
        case agent::EventKind::speech_out: return s + p.value("text", "");
        case agent::EventKind::error: return s + p.value("stage", "") + ": " + p.value("message", "");
        case agent::EventKind::scene_snapshot: return s + "attempt " + std::to_string(p.value("attempt", 0));
    }
    return s;
}

sim::Scene initial_scene(const std::string& scenario, const std::string& task_id, uint64_t seed, const sim::Registry& reg) {
    if (!task_id.empty()) return sim::make_task_scene(reg, reg.task(task_id), seed);
    return sim::make_scene(reg, scenario, seed);
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabletop embodied-agent toolkit: simulator, closed-loop agent, benchmark and session service"};
    app.require_subcommand(1);
    std::string data_dir;
    app.add_option("--data-dir", data_dir, "Directory holding registry.json and prompts/ (default: the bundled data)");

    // bench
    auto* bench = app.add_subcommand("bench", "Run and report the task benchmark");
    bench->require_subcommand(1);

    auto* run = bench->add_subcommand("run", "Run the suite under one or more configurations");
    std::string config_path, format = "markdown", out_path, tasks;
    std::vector<std::string> modes;
    bool ablation = false;
    int trials = 20;
    uint64_t seed = 0;
    double fail_prob = 0.0, miss_prob = 0.0, mislabel_prob = 0.0, jitter_px = 0.0;
    std::string profile = "prompted";
    BackendFlags run_backends;
    run->add_option("--config", config_path, "Suite config JSON: one config object or {\"runs\": [...]}");
    run->add_option("--mode", modes, "full, baseline, wo_planner, wo_evaluator (repeatable; default full and baseline)");
    run->add_flag("--ablation", ablation, "Shorthand for --mode wo_planner --mode wo_evaluator --mode full");
    run->add_option("--trials", trials, "Trials per task")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Seed base; trial i uses seed base + i");
    run->add_option("--fail-prob", fail_prob, "Grasp failure probability")->check(CLI::Range(0.0, 1.0));
    run->add_option("--miss-prob", miss_prob, "Detector miss probability for occluded objects")->check(CLI::Range(0.0, 1.0));
    run->add_option("--mislabel-prob", mislabel_prob, "Detector mislabel probability for occluded objects")->check(CLI::Range(0.0, 1.0));
    run->add_option("--jitter-px", jitter_px, "Detector box jitter in pixels")->check(CLI::NonNegativeNumber);
    run->add_option("--tasks", tasks, "Comma-separated task ids (default: all simulation tasks)");
    run->add_option("--profile", profile, "Prompt profile (prompted, unprompted)");
    run->add_option("--format", format, "markdown, csv or json");
    run->add_option("-o,--out", out_path, "Output file (default stdout)");
    run_backends.add(run);

    auto* report = bench->add_subcommand("report", "Re-emit a saved JSON report in another format");
    std::string report_in, report_format = "markdown", report_out;
    report->add_option("input", report_in, "JSON report written by 'bench run --format json'")->required();
    report->add_option("--format", report_format, "markdown, csv or json");
    report->add_option("-o,--out", report_out, "Output file (default stdout)");

    bench->add_subcommand("accept", "Run the acceptance checks; exit status 1 if any fails");

    // sim
    auto* sim_cmd = app.add_subcommand("sim", "Drive the simulator directly");
    sim_cmd->require_subcommand(1);
    auto* step = sim_cmd->add_subcommand("step", "Execute skill calls on a scenario and print the outcome");
    std::string scenario = "1", task_id;
    uint64_t sim_seed = 0;
    double sim_fail = 0.0;
    std::vector<std::string> calls;
    bool print_scene = false;
    step->add_option("--scenario", scenario, "Scenario key (1..10, real)");
    step->add_option("--task", task_id, "Task id; sets the scenario and reports the goal check");
    step->add_option("--seed", sim_seed, "Scene seed");
    step->add_option("--fail-prob", sim_fail, "Grasp failure probability")->check(CLI::Range(0.0, 1.0));
    step->add_option("--call", calls, "Skill call, e.g. 'vlamove(pick=\"apple\", place=\"red plate\")' (repeatable; default: read lines from stdin)");
    step->add_flag("--scene", print_scene, "Print the final scene snapshot as JSON");

    // agent
    auto* agent_cmd = app.add_subcommand("agent", "Run the closed-loop agent");
    agent_cmd->require_subcommand(1);
    auto* repl = agent_cmd->add_subcommand("repl", "Read instructions and run one episode per instruction");
    std::string repl_scenario = "5", repl_task;
    uint64_t repl_seed = 0;
    double repl_fail = 0.0;
    std::vector<std::string> instructions;
    bool raw_events = false, no_evaluator = false;
    int max_attempts = 3;
    BackendFlags repl_backends;
    std::string repl_profile = "prompted";
    repl->add_option("--scenario", repl_scenario, "Scenario key");
    repl->add_option("--task", repl_task, "Task id; sets the scenario and enables the ground-truth check");
    repl->add_option("--seed", repl_seed, "Scene seed");
    repl->add_option("--fail-prob", repl_fail, "Grasp failure probability")->check(CLI::Range(0.0, 1.0));
    repl->add_option("-i,--instruction", instructions, "Instruction (repeatable; default: read lines from stdin)");
    repl->add_option("--max-attempts", max_attempts, "Attempts per instruction")->check(CLI::PositiveNumber);
    repl->add_flag("--no-evaluator", no_evaluator, "Disable the evaluator stage");
    repl->add_flag("--jsonl", raw_events, "Print events as JSON lines");
    repl->add_option("--profile", repl_profile, "Prompt profile");
    repl_backends.add(repl);

    // speech
    auto* speech_cmd = app.add_subcommand("speech", "Voice capture utilities");
    speech_cmd->require_subcommand(1);
    auto* capture = speech_cmd->add_subcommand("capture", "Run voice-activity capture over a WAV file and print the segments");
    std::string wav_path;
    double threshold = 0.02, k = 3.0;
    bool adaptive = false, flush = false;
    capture->add_option("wav", wav_path, "16-bit mono PCM WAV file")->required();
    capture->add_option("--threshold", threshold, "Absolute RMS threshold (floor in adaptive mode)");
    capture->add_flag("--adaptive", adaptive, "Threshold at k times the median RMS of the first second");
    capture->add_option("--k", k, "Adaptive multiplier");
    capture->add_flag("--flush", flush, "Emit an utterance still open at the end of the file");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    std::string host = "127.0.0.1", log_dir = "sessions", asr, tts = "text";
    int port = 8080;
    size_t max_sessions = 16;
    bool logical_clock = false;
    double serve_fail = 0.0;
    BackendFlags serve_backends;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--log-dir", log_dir, "Directory for per-session JSONL logs");
    serve->add_option("--max-sessions", max_sessions, "Live session limit");
    serve->add_option("--asr", asr, "Recognizer: text:<transcript> or an http base URL (default: none, audio rejected)");
    serve->add_option("--tts", tts, "Speech synthesis: text or an http base URL");
    serve->add_option("--fail-prob", serve_fail, "Default grasp failure probability")->check(CLI::Range(0.0, 1.0));
    serve->add_flag("--logical-clock", logical_clock, "Deterministic event timestamps");
    serve_backends.add(serve);

    CLI11_PARSE(app, argc, argv);
    if (!data_dir.empty()) setenv("TABLETOP_DATA_DIR", data_dir.c_str(), 1);

    try {
        const auto& reg = sim::default_registry();

        if (run->parsed()) {
            std::vector<bench::SuiteConfig> configs;
            if (!config_path.empty()) {
                const json doc = json::parse(slurp(config_path));
                if (doc.contains("runs")) {
                    for (const auto& r : doc.at("runs")) configs.push_back(bench::suite_config_from_json(r));
                } else {
                    configs.push_back(bench::suite_config_from_json(doc));
                }
            } else {
                if (ablation) modes.insert(modes.end(), {"wo_planner", "wo_evaluator", "full"});
                if (modes.empty()) modes = {"full", "baseline"};
                for (const auto& m : modes) {
                    bench::SuiteConfig c;
                    c.mode = bench::mode_from_string(m);
                    c.config_id = m;
                    c.trials = trials;
                    c.seed_base = seed;
                    c.fail_prob = fail_prob;
                    c.degradation = {miss_prob, mislabel_prob, jitter_px, seed};
                    c.planner = run_backends.pick(run_backends.planner, c.planner);
                    c.converter = run_backends.pick(run_backends.converter, c.converter);
                    c.evaluator = run_backends.pick(run_backends.evaluator, c.evaluator);
                    c.profile = profile;
                    c.task_ids = split_list(tasks);
                    c.validate();
                    configs.push_back(c);
                }
            }
            std::vector<bench::BenchmarkReport> reports;
            bool complete = true;
            for (const auto& c : configs) {
                std::cerr << "running " << c.config_id << " (" << bench::to_string(c.mode) << ")..." << std::endl;
                reports.push_back(bench::run_suite(c, reg));
                complete &= reports.back().complete;
            }
            write_out(out_path, bench::emit_report(reports, bench::format_from_string(format)));
            return complete ? 0 : 2;
        }

        if (report->parsed()) {
            const json doc = json::parse(slurp(report_in));
            std::vector<bench::BenchmarkReport> reports;
            for (const auto& r : doc.at("runs")) reports.push_back(bench::report_from_json(r, reg));
            write_out(report_out, bench::emit_report(reports, bench::format_from_string(report_format)));
            return 0;
        }

        if (bench->got_subcommand("accept")) {
            int failed = 0;
            bench::run_acceptance(reg, [&](const bench::CheckResult& r) {
                std::cout << bench::format_line(r) << std::endl;
                failed += !r.pass;
            });
            return failed ? 1 : 0;
        }

        if (step->parsed()) {
            auto scene = initial_scene(scenario, task_id, sim_seed, reg);
            skills::SkillExecutor exec(scene, std::make_shared<perception::OracleDetector>(), perception::overhead_camera(), kinematics::default_arm(),
                                       reg.synonyms(), sim_fail);
            if (calls.empty())
                for (std::string line; std::getline(std::cin, line);)
                    if (line.find_first_not_of(" \t\r") != std::string::npos) calls.push_back(line);
            int rc = 0;
            for (const auto& text : calls) {
                try {
                    auto outcome = exec.execute(agent::parse_skill_call(text));
                    std::cout << agent::format(outcome.call) << " -> " << skills::to_string(outcome.status)
                              << (outcome.message.empty() ? "" : ": " + outcome.message) << "\n";
                } catch (const agent::SyntaxError& e) {
                    std::cout << text << " -> syntax error: " << e.what() << "\n";
                    rc = 1;
                }
            }
            if (!task_id.empty()) {
                auto verdict = sim::check_goal(reg, scene, task_id);
                std::cout << "goal " << (verdict.satisfied ? "met" : "not met");
                for (const auto& u : verdict.unmet) std::cout << "\n  unmet: " << u;
                std::cout << "\n";
            }
            if (print_scene) std::cout << sim::to_json(scene, true).dump(2) << "\n";
            return rc;
        }

        if (repl->parsed()) {
            auto scene = initial_scene(repl_scenario, repl_task, repl_seed, reg);
            skills::SkillExecutor exec(scene, std::make_shared<perception::OracleDetector>(), perception::overhead_camera(), kinematics::default_arm(),
                                       reg.synonyms(), repl_fail);
            agent::Backends backends{agent::make_backend(repl_backends.pick(repl_backends.planner, "mock://rules"), reg),
                                     agent::make_backend(repl_backends.pick(repl_backends.converter, "mock://rules"), reg),
                                     agent::make_backend(repl_backends.pick(repl_backends.evaluator, "mock://rules"), reg)};
            agent::LoopConfig loop;
            loop.max_attempts = max_attempts;
            loop.evaluator_enabled = !no_evaluator;
            agent::SystemClock clock;
            uint64_t seq = 0;
            agent::EpisodeHooks hooks;
            hooks.emit = [&](agent::EventKind kind, json payload) {
                agent::SessionEvent e{++seq, clock.now(), kind, std::move(payload)};
                std::cout << (raw_events ? agent::to_jsonl(e) : describe(e)) << std::endl;
            };
            auto run_one = [&](const std::string& text) {
                const sim::TaskSpec* task = repl_task.empty() ? reg.find_by_instruction(text) : &reg.task(repl_task);
                agent::run_episode(backends, exec, text, task, loop, agent::default_profile(repl_profile), reg, hooks);
            };
            if (!instructions.empty()) {
                for (const auto& text : instructions) run_one(text);
                return 0;
            }
            const bool interactive = isatty(0);
            for (std::string line;;) {
                if (interactive) std::cout << "> " << std::flush;
                if (!std::getline(std::cin, line)) break;
                if (line == "quit" || line == "exit") break;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                run_one(line);
            }
            return 0;
        }

        if (capture->parsed()) {
            auto audio = speech::read_wav_file(wav_path);
            speech::VadConfig c;
            c.sample_rate = audio.sample_rate;
            c.floor_rms = threshold;
            c.k = k;
            c.mode = adaptive ? speech::ThresholdMode::adaptive : speech::ThresholdMode::absolute;
            speech::validate(c);
            json out{{"config", speech::to_json(c)}, {"seconds", audio.seconds()}, {"segments", json::array()}};
            for (const auto& seg : speech::capture_all(c, audio.samples, flush)) {
                auto j = speech::to_json(seg, c);
                j.erase("rms");
                out["segments"].push_back(j);
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (serve->parsed()) {
            service::ServiceOptions o;
            o.log_dir = log_dir;
            o.max_sessions = max_sessions;
            o.asr = asr;
            o.tts = tts;
            o.logical_clock = logical_clock;
            o.defaults.planner = serve_backends.pick(serve_backends.planner, o.defaults.planner);
            o.defaults.converter = serve_backends.pick(serve_backends.converter, o.defaults.converter);
            o.defaults.evaluator = serve_backends.pick(serve_backends.evaluator, o.defaults.evaluator);
            o.defaults.fail_prob = serve_fail;
            service::SessionManager manager(reg, o);
            service::HttpServer server(manager);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on http://" << host << ":" << bound << " (logs in " << log_dir << ")" << std::endl;
            server.listen();
            g_server = nullptr;
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
