#include <chrono>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tabletop/agent/mock_backend.hpp"
#include "tabletop/bench/bench.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/scenarios.hpp"

using namespace tabletop;
using namespace tabletop::bench;

namespace {

const sim::Registry& reg() { return sim::default_registry(); }

std::vector<std::string> ids(bool prompted) {
    std::vector<std::string> out;
    for (const auto& t : reg().tasks())
        if (t.simulation && t.prompted == prompted) out.push_back(t.id);
    return out;
}

// Records giving each listed task `k` ground-truth successes out of 20.
BenchmarkReport synthetic(const std::vector<std::string>& tasks, const std::vector<int>& successes) {
    BenchmarkReport r;
    for (size_t i = 0; i < tasks.size(); ++i)
        for (int t = 0; t < 20; ++t) {
            TrialRecord rec;
            rec.task_id = tasks[i];
            rec.seed = static_cast<uint64_t>(t);
            rec.ground_truth = t < successes[i];
            rec.partial = rec.ground_truth ? 1.0 : (t % 2 ? 0.25 : 0.0);
            r.records.push_back(rec);
        }
    recompute(r, reg());
    return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : s) {
        if (c == '"') quoted = !quoted;
        else if (c == sep && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else cur += c;
    }
    out.push_back(cur);
    return out;
}

}  // namespace

TEST_CASE("rates and aggregates are arithmetic means") {
    auto one = synthetic({"sim-p01"}, {16});
    CHECK(one.rows[0].success_rate() == 80.0);

    // Ten prompted rates 90,80,90,85,90,70,80,80,75,80 average to 82.
    auto r = synthetic(ids(true), {18, 16, 18, 17, 18, 14, 16, 16, 15, 16});
    CHECK(r.prompted.tasks == 10);
    CHECK(r.prompted.success == doctest::Approx(82.0));
    CHECK(r.unprompted.tasks == 0);
    CHECK(table1_markdown({r}).find("| | | **Prompted Tasks Total** |  | 82.0% |") != std::string::npos);
}

TEST_CASE("score_partial follows the three-level rule") {
    using skills::SkillOutcome;
    using skills::SkillStatus;
    auto outcome = [](agent::SkillCall call, SkillStatus s) {
        SkillOutcome o;
        o.call = std::move(call);
        o.status = s;
        return o;
    };
    auto mv = agent::SkillCall::vlamove("apple", "plate");
    CHECK(score_partial(std::vector<SkillOutcome>{}, true) == 1.0);
    CHECK(score_partial({outcome(mv, SkillStatus::ok)}, false) == 0.25);
    CHECK(score_partial({outcome(mv, SkillStatus::grounding_failed)}, false) == 0.0);
    CHECK(score_partial({outcome(agent::SkillCall::done(), SkillStatus::ok)}, false) == 0.0);

    std::vector<agent::SessionEvent> events{{1, "", agent::EventKind::step_result, {{"call", {{"skill", "vlamove"}}}, {"status", "grasp_failed"}}}};
    CHECK(score_partial(events, false) == 0.0);
    events.push_back({2, "", agent::EventKind::step_result, {{"call", {{"skill", "vlamove"}}}, {"status", "ok"}}});
    CHECK(score_partial(events, false) == 0.25);
    CHECK(score_partial(events, true) == 1.0);
}

TEST_CASE("planning_success simulates the plan without noise") {
    const auto& task = reg().task("sim-p05");
    auto scene = sim::make_task_scene(reg(), task, 3);
    std::vector<std::string> plan;
    for (const auto& [id, o] : scene.objects)
        if (o.category == sim::Category::fruit) plan.push_back("put the " + o.label + " on the red plate");
    REQUIRE(plan.size() >= 2);
    const auto before = scene;
    CHECK(planning_success(plan, task, scene, reg()));
    CHECK(scene == before);
    auto missing = plan;
    missing.pop_back();
    CHECK_FALSE(planning_success(missing, task, scene, reg()));
    CHECK_FALSE(planning_success({}, task, scene, reg()));
    auto garbled = plan;
    garbled.push_back("contemplate the fruit");
    CHECK_FALSE(planning_success(garbled, task, scene, reg()));
}

TEST_CASE("modes differ from the full config only in loop flags") {
    SuiteConfig full;
    const auto base = to_json(full);
    std::set<bool> seen_eval;
    for (Mode m : {Mode::baseline, Mode::wo_planner, Mode::wo_evaluator}) {
        SuiteConfig c = full;
        c.mode = m;
        c.config_id = full.config_id;
        for (const auto& op : json::diff(base, to_json(c))) {
            const std::string path = op["path"];
            INFO(to_string(m), " ", path);
            CHECK((path == "/mode" || path.rfind("/loop/", 0) == 0));
        }
        seen_eval.insert(c.loop().evaluator_enabled);
    }
    CHECK(loop_config_for(Mode::baseline) == LoopConfig{3, 2, false, false, true});
    CHECK(loop_config_for(Mode::wo_planner).planner_enabled == false);
    CHECK(loop_config_for(Mode::wo_evaluator).evaluator_enabled == false);
    CHECK(loop_config_for(Mode::full) == LoopConfig{});
    CHECK_THROWS_AS(mode_from_string("nope"), ConfigError);

    auto round = suite_config_from_json(to_json(full));
    CHECK(to_json(round) == base);
    CHECK_THROWS_AS(suite_config_from_json(json{{"trials", 0}}), ConfigError);
    CHECK_THROWS_AS(suite_config_from_json(json{{"fail_prob", 2.0}}), ConfigError);
}

TEST_CASE("hermetic suite: every task, every trial, first attempt") {
    SuiteConfig c;
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_suite(c, reg());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.complete);
    REQUIRE(r.records.size() == 400);
    for (const auto& rec : r.records) {
        INFO(rec.task_id, " seed ", rec.seed);
        CHECK(rec.ground_truth);
        CHECK(rec.attempts == 1);
        CHECK(rec.partial == 1.0);
        CHECK(rec.planning_success);
    }
    CHECK(r.rows.size() == 20);
    CHECK(r.prompted.success == 100.0);
    CHECK(r.unprompted.success == 100.0);
    CHECK(secs < 60.0);

    const auto md = table1_markdown({r});
    CHECK(std::count(md.begin(), md.end(), '\n') == 2 + 20 + 2);
    CHECK(md.find("**Unprompted Tasks Total** | 100.0% | 100.0% |") != std::string::npos);

    // Reports rebuilt from the raw records match byte for byte.
    auto again = report_from_json(to_json(r), reg());
    CHECK(emit_report({again}, Format::json) == emit_report({r}, Format::json));
    CHECK(emit_report({again}, Format::markdown) == emit_report({r}, Format::markdown));
}

TEST_CASE("reports are byte-stable and formats agree") {
    SuiteConfig c;
    c.trials = 3;
    c.fail_prob = 0.3;
    c.seed_base = 40;
    auto a = run_suite(c, reg());
    auto b = run_suite(c, reg());
    for (Format f : {Format::markdown, Format::csv, Format::json}) CHECK(emit_report({a}, f) == emit_report({b}, f));

    const auto doc = json::parse(emit_report({a}, Format::json));
    std::istringstream csv(emit_report({a}, Format::csv));
    std::string line;
    std::getline(csv, line);
    size_t i = 0;
    const auto& rows = doc["runs"][0]["rows"];
    while (std::getline(csv, line) && i < rows.size()) {
        auto f = split(line, ',');
        REQUIRE(f.size() == 12);
        CHECK(f[2] == rows[i]["task_id"]);
        CHECK(f[6] == rows[i]["instruction"]);
        CHECK(std::stod(f[9]) == rows[i]["success_rate"].get<double>());
        CHECK(std::stod(f[10]) == rows[i]["planning_rate"].get<double>());
        CHECK(std::stod(f[11]) == rows[i]["partial_score"].get<double>());
        ++i;
    }
    CHECK(i == rows.size());
    auto agg = split(line, ',');
    CHECK(agg[2] == "prompted_total");
    CHECK(std::stod(agg[9]) == doc["runs"][0]["aggregates"]["prompted"]["success_rate"].get<double>());

    // Aggregates recomputed by hand from the raw records.
    std::map<std::string, std::pair<int, int>> tally;
    for (const auto& rec : a.records) {
        auto& [ok, n] = tally[rec.task_id];
        ok += rec.ground_truth;
        ++n;
    }
    double sum = 0;
    int tasks = 0;
    for (const auto& [id, t] : tally)
        if (reg().task(id).prompted) {
            sum += 100.0 * t.first / t.second;
            ++tasks;
        }
    CHECK(a.prompted.success == doctest::Approx(sum / tasks));
}

TEST_CASE("ablation grid has the prompted/unprompted by three-config shape") {
    std::vector<BenchmarkReport> runs;
    for (Mode m : {Mode::full, Mode::wo_evaluator, Mode::wo_planner}) {
        SuiteConfig c;
        c.mode = m;
        c.config_id = std::string(to_string(m));
        c.trials = 2;
        c.fail_prob = 0.3;
        runs.push_back(run_suite(c, reg()));
    }
    const auto grid = table3_markdown(runs);
    std::istringstream in(grid);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "| Tasks | w/o Planner | w/o Evaluator | Full |");
    CHECK(lines[2].rfind("| Prompted |", 0) == 0);
    CHECK(lines[3].rfind("| Unprompted |", 0) == 0);
    for (const auto& l : lines) CHECK(std::count(l.begin(), l.end(), '|') == 5);
    CHECK(grid.find("n/a") == std::string::npos);
    CHECK(emit_report(runs, Format::markdown).find("## Ablation") != std::string::npos);
    CHECK(runs[0].prompted.partial >= runs[1].prompted.partial);
}

TEST_CASE("property: success does not rise with the grasp failure rate") {
    double prev = 101.0;
    for (double p : {0.0, 0.15, 0.3, 0.6}) {
        SuiteConfig c;
        c.trials = 4;
        c.fail_prob = p;
        c.seed_base = 500;
        auto r = run_suite(c, reg());
        const double rate = (r.prompted.success + r.unprompted.success) / 2;
        INFO("fail_prob ", p, " rate ", rate);
        CHECK(rate <= prev);
        prev = rate;
    }
    CHECK(prev < 100.0);
}

TEST_CASE("unreachable backend yields an incomplete report") {
    SuiteConfig c;
    c.planner = "http://127.0.0.1:1/v1/chat/completions?timeout=1";
    c.trials = 1;
    auto r = run_suite(c, reg());
    CHECK_FALSE(r.complete);
    CHECK(r.records.empty());
    CHECK_FALSE(r.incomplete_reason.empty());
    CHECK(emit_report({r}, Format::markdown).find("incomplete") != std::string::npos);
}
