#include "tabletop/bench/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "tabletop/agent/mock_backend.hpp"
#include "tabletop/common/rng.hpp"
#include "tabletop/kinematics/arm.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/scenarios.hpp"

namespace tabletop::bench {

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::full: return "full";
        case Mode::baseline: return "baseline";
        case Mode::wo_planner: return "wo_planner";
        case Mode::wo_evaluator: return "wo_evaluator";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::full, Mode::baseline, Mode::wo_planner, Mode::wo_evaluator})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown benchmark mode '" + s + "' (full, baseline, wo_planner, wo_evaluator)");
}

LoopConfig loop_config_for(Mode m, LoopConfig base) {
    base.planner_enabled = m != Mode::wo_planner;
    base.planner_vision = m != Mode::baseline;
    base.evaluator_enabled = m == Mode::full || m == Mode::wo_planner;
    return base;
}

void SuiteConfig::validate() const {
    loop().validate();
    perception::validate(degradation);
    if (trials < 1) throw ConfigError("trials per task must be at least 1");
    if (!(fail_prob >= 0.0 && fail_prob <= 1.0)) throw ConfigError("fail_prob must lie in [0, 1]");
    if (config_id.empty()) throw ConfigError("config id is empty");
}

namespace {

json degradation_json(const perception::DetectorDegradation& d) {
    return json{{"miss_prob", d.miss_prob}, {"occlusion_mislabel_prob", d.occlusion_mislabel_prob}, {"box_jitter_px", d.box_jitter_px}, {"seed", d.seed}};
}

}  // namespace

json to_json(const SuiteConfig& c) {
    return json{{"config_id", c.config_id},
                {"mode", to_string(c.mode)},
                {"loop", agent::to_json(c.loop())},
                {"backends", {{"planner", c.planner}, {"converter", c.converter}, {"evaluator", c.evaluator}}},
                {"profile", c.profile},
                {"degradation", degradation_json(c.degradation)},
                {"fail_prob", c.fail_prob},
                {"trials", c.trials},
                {"seed_base", c.seed_base},
                {"tasks", c.task_ids}};
}

SuiteConfig suite_config_from_json(const json& j) {
    SuiteConfig c;
    try {
        c.mode = mode_from_string(j.value("mode", "full"));
        c.config_id = j.value("config_id", std::string(to_string(c.mode)));
        if (j.contains("loop")) c.base_loop = agent::loop_config_from_json(j.at("loop"));
        const json backends = j.value("backends", json::object());
        const std::string shared = backends.value("all", std::string("mock://rules"));
        c.planner = backends.value("planner", shared);
        c.converter = backends.value("converter", shared);
        c.evaluator = backends.value("evaluator", shared);
        c.profile = j.value("profile", c.profile);
        const json d = j.value("degradation", json::object());
        c.degradation.miss_prob = d.value("miss_prob", 0.0);
        c.degradation.occlusion_mislabel_prob = d.value("occlusion_mislabel_prob", 0.0);
        c.degradation.box_jitter_px = d.value("box_jitter_px", 0.0);
        c.degradation.seed = d.value("seed", uint64_t{0});
        c.fail_prob = j.value("fail_prob", 0.0);
        c.trials = j.value("trials", 20);
        c.seed_base = j.value("seed_base", uint64_t{0});
        c.task_ids = j.value("tasks", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed suite config: ") + e.what());
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

json to_json(const TrialRecord& r) {
    return json{{"task_id", r.task_id},
                {"seed", r.seed},
                {"config_id", r.config_id},
                {"attempts", r.attempts},
                {"evaluator_verdict", r.evaluator_verdict ? json(*r.evaluator_verdict) : json(nullptr)},
                {"believed_success", r.believed_success},
                {"ground_truth", r.ground_truth},
                {"partial", r.partial},
                {"planning_success", r.planning_success},
                {"error", r.error}};
}

TrialRecord trial_record_from_json(const json& j) {
    TrialRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.config_id = j.value("config_id", "");
    r.attempts = j.value("attempts", 0);
    if (j.contains("evaluator_verdict") && !j.at("evaluator_verdict").is_null()) r.evaluator_verdict = j.at("evaluator_verdict").get<bool>();
    r.believed_success = j.value("believed_success", false);
    r.ground_truth = j.at("ground_truth").get<bool>();
    r.partial = j.at("partial").get<double>();
    r.planning_success = j.value("planning_success", false);
    r.error = j.value("error", "");
    return r;
}

Aggregate aggregate(const std::vector<TaskRow>& rows, bool prompted) {
    Aggregate a;
    for (const auto& row : rows) {
        if (row.prompted != prompted) continue;
        a.success += row.success_rate();
        a.planning += row.planning_rate();
        a.partial += row.partial_score();
        ++a.tasks;
    }
    if (a.tasks) {
        a.success /= a.tasks;
        a.planning /= a.tasks;
        a.partial /= a.tasks;
    }
    return a;
}

void recompute(BenchmarkReport& report, const sim::Registry& registry) {
    std::vector<TaskRow> rows;
    std::map<std::string, size_t> index;
    for (const auto& r : report.records) {
        auto [it, fresh] = index.emplace(r.task_id, rows.size());
        if (fresh) {
            const auto& t = registry.task(r.task_id);
            TaskRow row;
            row.task_id = t.id;
            row.scene = t.scene;
            row.category = t.category;
            row.instruction = t.instruction;
            row.prompted = t.prompted;
            rows.push_back(std::move(row));
        }
        auto& row = rows[it->second];
        ++row.trials;
        row.successes += r.ground_truth;
        row.planning_successes += r.planning_success;
        row.partial_sum += r.partial;
    }
    report.rows = std::move(rows);
    report.prompted = aggregate(report.rows, true);
    report.unprompted = aggregate(report.rows, false);
}

double score_partial(const std::vector<skills::SkillOutcome>& outcomes, bool ground_truth) {
    if (ground_truth) return 1.0;
    for (const auto& o : outcomes)
        if (o.call.skill == agent::Skill::vlamove && o.status == skills::SkillStatus::ok) return 0.25;
    return 0.0;
}

double score_partial(const std::vector<agent::SessionEvent>& events, bool ground_truth) {
    if (ground_truth) return 1.0;
    for (const auto& e : events) {
        if (e.kind != agent::EventKind::step_result) continue;
        const json call = e.payload.value("call", json::object());
        if (call.value("skill", "") == "vlamove" && e.payload.value("status", "") == "ok") return 0.25;
    }
    return 0.0;
}

bool planning_success(const std::vector<std::string>& steps, const sim::TaskSpec& task, const sim::Scene& scene, const sim::Registry& registry) {
    if (steps.empty()) return false;
    std::vector<agent::SkillCall> calls;
    for (const auto& s : steps) {
        auto call = agent::rule_convert(s);
        if (!call) return false;
        calls.push_back(*call);
    }
    sim::Scene copy = scene;
    skills::SkillExecutor exec(copy, std::make_shared<perception::OracleDetector>(), perception::overhead_camera(), kinematics::default_arm(),
                               registry.synonyms(), 0.0);
    for (const auto& call : calls) {
        if (call.skill == agent::Skill::done) break;
        exec.execute(call);
    }
    return sim::check_goal(registry, copy, task).satisfied;
}

TrialRecord run_trial(const SuiteConfig& config, const sim::TaskSpec& task, int trial, const sim::Registry& registry,
                      std::vector<agent::SessionEvent>* events) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.task_id = task.id;
    rec.seed = config.seed_base + static_cast<uint64_t>(trial);
    rec.config_id = config.config_id;

    sim::Scene scene = sim::make_task_scene(registry, task, rec.seed);
    const sim::Scene initial = scene;
    auto degradation = config.degradation;
    degradation.seed = mix_seed(degradation.seed, rec.seed);
    skills::SkillExecutor exec(scene, std::make_shared<perception::OracleDetector>(degradation), perception::overhead_camera(),
                               kinematics::default_arm(), registry.synonyms(), config.fail_prob);
    agent::Backends backends{agent::make_backend(config.planner, registry), agent::make_backend(config.converter, registry),
                             agent::make_backend(config.evaluator, registry)};

    agent::EpisodeHooks hooks;
    agent::LogicalClock clock;
    if (events) {
        hooks.emit = [&](agent::EventKind k, json payload) {
            events->push_back(agent::SessionEvent{events->size() + 1, clock.now(), k, std::move(payload)});
        };
    }
    const auto loop = config.loop();
    auto result = agent::run_episode(backends, exec, task.instruction, &task, loop, agent::default_profile(config.profile), registry, hooks);

    rec.attempts = result.attempts;
    if (result.verdict) rec.evaluator_verdict = result.verdict->success();
    rec.believed_success = result.success;
    rec.ground_truth = result.ground_truth;
    rec.partial = score_partial(result.outcomes, result.ground_truth);
    rec.planning_success = loop.planner_enabled && !result.plans.empty() && planning_success(result.plans.front().steps, task, initial, registry);
    rec.error = result.failure_reason;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

BenchmarkReport run_suite(const SuiteConfig& config, const sim::Registry& registry) {
    config.validate();
    std::vector<const sim::TaskSpec*> tasks;
    if (config.task_ids.empty()) {
        for (const auto& t : registry.tasks())
            if (t.simulation) tasks.push_back(&t);
    } else {
        for (const auto& id : config.task_ids) tasks.push_back(&registry.task(id));
    }
    BenchmarkReport report;
    report.config = config;
    try {
        for (const auto* task : tasks)
            for (int trial = 0; trial < config.trials; ++trial) report.records.push_back(run_trial(config, *task, trial, registry));
    } catch (const TransportError& e) {
        report.complete = false;
        report.incomplete_reason = e.what();
    }
    recompute(report, registry);
    return report;
}

Format format_from_string(const std::string& s) {
    if (s == "markdown" || s == "md") return Format::markdown;
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ConfigError("unknown report format '" + s + "' (markdown, csv, json)");
}

double round1(double percent) {
    const double r = std::round(percent * 10.0) / 10.0;
    return r == 0.0 ? 0.0 : r;
}

std::string fmt1(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", round1(percent));
    return buf;
}

namespace {

std::string pct(double v) { return fmt1(v) + "%"; }

const TaskRow* find_row(const BenchmarkReport& r, const std::string& id) {
    for (const auto& row : r.rows)
        if (row.task_id == id) return &row;
    return nullptr;
}

std::string column_name(const BenchmarkReport& r) {
    return r.config.config_id == std::string(to_string(r.config.mode)) ? r.config.config_id
                                                                        : r.config.config_id + " (" + std::string(to_string(r.config.mode)) + ")";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string table1_markdown(const std::vector<BenchmarkReport>& runs) {
    if (runs.empty()) return "";
    std::ostringstream out;
    out << "| Scene | Type of Task | Task | Planning Success Rate |";
    for (const auto& r : runs) out << " Success Rate: " << column_name(r) << " |";
    out << "\n|---|---|---|---|";
    for (size_t i = 0; i < runs.size(); ++i) out << "---|";
    out << "\n";

    const auto& lead = runs.front();
    for (bool prompted : {true, false}) {
        for (const auto& row : lead.rows) {
            if (row.prompted != prompted) continue;
            out << "| " << row.scene << " | " << sim::display_name(row.category) << " | " << row.instruction << " | "
                << (prompted ? "-" : pct(row.planning_rate())) << " |";
            for (const auto& r : runs) {
                const auto* other = find_row(r, row.task_id);
                out << " " << (other ? pct(other->success_rate()) : "n/a") << " |";
            }
            out << "\n";
        }
        const auto& agg_lead = prompted ? lead.prompted : lead.unprompted;
        if (agg_lead.tasks == 0) continue;
        out << "| | | **" << (prompted ? "Prompted" : "Unprompted") << " Tasks Total** | " << (prompted ? "" : pct(agg_lead.planning)) << " |";
        for (const auto& r : runs) {
            const auto& agg = prompted ? r.prompted : r.unprompted;
            out << " " << (agg.tasks ? pct(agg.success) : "n/a") << " |";
        }
        out << "\n";
    }
    return out.str();
}

std::string table3_markdown(const std::vector<BenchmarkReport>& runs) {
    auto pick = [&](Mode m) -> const BenchmarkReport* {
        for (const auto& r : runs)
            if (r.config.mode == m) return &r;
        return nullptr;
    };
    const BenchmarkReport* cols[] = {pick(Mode::wo_planner), pick(Mode::wo_evaluator), pick(Mode::full)};
    std::ostringstream out;
    out << "| Tasks | w/o Planner | w/o Evaluator | Full |\n|---|---|---|---|\n";
    for (bool prompted : {true, false}) {
        out << "| " << (prompted ? "Prompted" : "Unprompted") << " |";
        for (const auto* r : cols) {
            const Aggregate* agg = r ? (prompted ? &r->prompted : &r->unprompted) : nullptr;
            out << " " << (agg && agg->tasks ? pct(agg->partial) : "n/a") << " |";
        }
        out << "\n";
    }
    return out.str();
}

json to_json(const BenchmarkReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"task_id", row.task_id},
                        {"scene", row.scene},
                        {"category", sim::to_string(row.category)},
                        {"instruction", row.instruction},
                        {"prompted", row.prompted},
                        {"trials", row.trials},
                        {"successes", row.successes},
                        {"success_rate", round1(row.success_rate())},
                        {"planning_rate", round1(row.planning_rate())},
                        {"partial_score", round1(row.partial_score())}});
    }
    auto agg = [](const Aggregate& a) {
        return json{{"tasks", a.tasks}, {"success_rate", round1(a.success)}, {"planning_rate", round1(a.planning)}, {"partial_score", round1(a.partial)}};
    };
    json records = json::array();
    for (const auto& rec : r.records) records.push_back(to_json(rec));
    return json{{"config", to_json(r.config)},
                {"complete", r.complete},
                {"incomplete_reason", r.incomplete_reason},
                {"rows", rows},
                {"aggregates", {{"prompted", agg(r.prompted)}, {"unprompted", agg(r.unprompted)}}},
                {"records", records}};
}

BenchmarkReport report_from_json(const json& j, const sim::Registry& registry) {
    BenchmarkReport r;
    try {
        r.config = suite_config_from_json(j.at("config"));
        r.complete = j.value("complete", true);
        r.incomplete_reason = j.value("incomplete_reason", "");
        for (const auto& rec : j.at("records")) r.records.push_back(trial_record_from_json(rec));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed benchmark report: ") + e.what());
    }
    recompute(r, registry);
    return r;
}

std::string emit_report(const std::vector<BenchmarkReport>& runs, Format format) {
    switch (format) {
        case Format::markdown: {
            std::string out = "## Task success\n\n" + table1_markdown(runs);
            bool ablation = false;
            for (const auto& r : runs) ablation |= r.config.mode == Mode::wo_planner || r.config.mode == Mode::wo_evaluator;
            if (ablation) out += "\n## Ablation (partial credit)\n\n" + table3_markdown(runs);
            for (const auto& r : runs)
                if (!r.complete) out += "\n> " + r.config.config_id + " is incomplete: " + r.incomplete_reason + "\n";
            return out;
        }
        case Format::csv: {
            std::ostringstream out;
            out << "config,mode,task_id,scene,category,prompted,instruction,trials,successes,success_rate,planning_rate,partial_score\n";
            for (const auto& r : runs) {
                const std::string head = csv_field(r.config.config_id) + "," + std::string(to_string(r.config.mode)) + ",";
                for (const auto& row : r.rows) {
                    out << head << row.task_id << "," << row.scene << "," << sim::to_string(row.category) << "," << (row.prompted ? 1 : 0) << ","
                        << csv_field(row.instruction) << "," << row.trials << "," << row.successes << "," << fmt1(row.success_rate()) << ","
                        << fmt1(row.planning_rate()) << "," << fmt1(row.partial_score()) << "\n";
                }
                for (bool prompted : {true, false}) {
                    const auto& a = prompted ? r.prompted : r.unprompted;
                    out << head << (prompted ? "prompted_total" : "unprompted_total") << ",,," << (prompted ? 1 : 0) << ",," << a.tasks << ",,"
                        << fmt1(a.success) << "," << fmt1(a.planning) << "," << fmt1(a.partial) << "\n";
                }
            }
            return out.str();
        }
        case Format::json: {
            json doc{{"schema", "bench_report"}, {"v", 1}, {"runs", json::array()}};
            for (const auto& r : runs) doc["runs"].push_back(to_json(r));
            return doc.dump(2) + "\n";
        }
    }
    return "";
}

}  // namespace tabletop::bench
