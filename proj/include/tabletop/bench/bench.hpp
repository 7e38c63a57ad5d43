#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabletop/agent/episode.hpp"
#include "tabletop/perception/detection.hpp"
#include "tabletop/sim/registry.hpp"

namespace tabletop::bench {

using agent::LoopConfig;

/// The four configurations compared in the experiments. They differ only in
/// the loop flags; backends, noise and seeds are shared.
enum class Mode { full, baseline, wo_planner, wo_evaluator };

std::string_view to_string(Mode m);
Mode mode_from_string(const std::string& s);
LoopConfig loop_config_for(Mode m, LoopConfig base = {});

struct SuiteConfig {
    std::string config_id = "full";
    Mode mode = Mode::full;
    LoopConfig base_loop;  ///< attempts and retries; mode flags are applied on top
    std::string planner = "mock://rules";
    std::string converter = "mock://rules";
    std::string evaluator = "mock://rules";
    std::string profile = "prompted";
    perception::DetectorDegradation degradation;
    double fail_prob = 0.0;
    int trials = 20;
    uint64_t seed_base = 0;
    std::vector<std::string> task_ids;  ///< empty: every simulation task in registry order

    LoopConfig loop() const { return loop_config_for(mode, base_loop); }
    void validate() const;
};

/// Fully resolved configuration, as compared between modes.
json to_json(const SuiteConfig& c);
SuiteConfig suite_config_from_json(const json& j);

struct TrialRecord {
    std::string task_id;
    uint64_t seed = 0;
    std::string config_id;
    int attempts = 0;
    std::optional<bool> evaluator_verdict;  ///< empty when no verdict was produced
    bool believed_success = false;
    bool ground_truth = false;
    double partial = 0.0;
    bool planning_success = false;
    std::string error;
    double wall_ms = 0.0;  ///< diagnostics only; never written to reports
};

json to_json(const TrialRecord& r);
TrialRecord trial_record_from_json(const json& j);

struct TaskRow {
    std::string task_id;
    std::string scene;
    sim::TaskCategory category = sim::TaskCategory::mixed;
    std::string instruction;
    bool prompted = false;
    int trials = 0;
    int successes = 0;
    int planning_successes = 0;
    double partial_sum = 0.0;

    double success_rate() const { return trials ? 100.0 * successes / trials : 0.0; }
    double planning_rate() const { return trials ? 100.0 * planning_successes / trials : 0.0; }
    double partial_score() const { return trials ? 100.0 * partial_sum / trials : 0.0; }
};

struct Aggregate {
    double success = 0.0;   ///< mean of per-task success rates, percent
    double planning = 0.0;  ///< mean of per-task planning rates, percent
    double partial = 0.0;   ///< mean of per-task partial scores, percent
    int tasks = 0;
};

struct BenchmarkReport {
    SuiteConfig config;
    std::vector<TrialRecord> records;
    std::vector<TaskRow> rows;
    Aggregate prompted;
    Aggregate unprompted;
    bool complete = true;
    std::string incomplete_reason;
};

/// Rows and aggregates from raw records; rows follow first appearance order.
void recompute(BenchmarkReport& report, const sim::Registry& registry);
Aggregate aggregate(const std::vector<TaskRow>& rows, bool prompted);

/// 1 when the goal holds, 0.25 when at least one vlamove completed, else 0.
double score_partial(const std::vector<skills::SkillOutcome>& outcomes, bool ground_truth);
/// Same rule read from an episode's step_result events.
double score_partial(const std::vector<agent::SessionEvent>& events, bool ground_truth);

/// Whether the plan, converted by the rule converter and executed without
/// noise on a copy of `scene`, satisfies the task goal.
bool planning_success(const std::vector<std::string>& steps, const sim::TaskSpec& task, const sim::Scene& scene, const sim::Registry& registry);

TrialRecord run_trial(const SuiteConfig& config, const sim::TaskSpec& task, int trial, const sim::Registry& registry,
                      std::vector<agent::SessionEvent>* events = nullptr);

/// Every (task, trial) pair in order. A transport failure stops the run and
/// returns what was collected, flagged incomplete.
BenchmarkReport run_suite(const SuiteConfig& config, const sim::Registry& registry);

enum class Format { markdown, csv, json };
Format format_from_string(const std::string& s);

/// Table I layout: one success column per run, planning rate from the first.
std::string table1_markdown(const std::vector<BenchmarkReport>& runs);
/// Table III layout: prompted/unprompted by w/o planner, w/o evaluator, full,
/// using partial-credit scores. Runs are matched by mode.
std::string table3_markdown(const std::vector<BenchmarkReport>& runs);
std::string emit_report(const std::vector<BenchmarkReport>& runs, Format format);

json to_json(const BenchmarkReport& r);
BenchmarkReport report_from_json(const json& j, const sim::Registry& registry);

/// Percent rounded to one decimal, the precision every emitted format uses.
double round1(double percent);
std::string fmt1(double percent);

}  // namespace tabletop::bench
