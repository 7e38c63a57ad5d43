#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/common/json_util.hpp"
#include "tabletop/sim/types.hpp"

namespace tabletop::sim {

/// One object of a scenario roster, at its nominal (un-jittered) position.
struct RosterEntry {
    std::string id;
    std::string label;
    Category category = Category::block;
    Color color = Color::none;
    Shape shape = Shape::cube;
    std::optional<char> letter;
    std::optional<int> corners;  // overrides the shape/letter table
    std::optional<int> sides;
    double radius = 0.03;
    double height = 0.04;
    double x = 0.3;
    double y = 0.0;
    double capacity = 0.0;  // containers only
};

struct ScenarioSpec {
    std::string key;
    std::string title;
    std::vector<RosterEntry> roster;
};

struct LetterInfo {
    int corners = 0;
    bool symmetric = false;
};

/// Selects objects of a scene by attributes. Empty fields do not constrain.
struct Selector {
    std::optional<Category> category;
    std::vector<std::string> labels;
    std::vector<std::string> exclude;
    std::optional<bool> symmetric;
    std::optional<std::string> argmax;  // "sides" | "corners": keep only the maximum
    bool any_item = false;              // every non-container object
};

enum class PredicateType { all_in, none_in, on_container, stack, color_match, split };

struct GoalPredicate {
    PredicateType type = PredicateType::all_in;
    Selector select;
    std::string container;                // label; all_in / none_in / on_container
    std::vector<std::string> containers;  // labels; split / color_match
    std::optional<std::string> order_by;  // stack: "letter" | "corners" | "sides"
    bool ascending = true;                // stack order, bottom to top
    std::optional<std::string> base;      // stack: container label the chain rests in
    bool match = true;                    // color_match: same (true) or different (false) color
};

enum class TaskCategory { stacking, blocks_bowls, fruit_placement, snack_daily, tool_packing, mixed };
std::string_view to_string(TaskCategory c);
std::string_view display_name(TaskCategory c);

struct TaskSpec {
    std::string id;
    std::string scene;  // scenario key
    std::string instruction;
    TaskCategory category = TaskCategory::mixed;
    bool prompted = false;
    bool simulation = true;   // false for the real-world analogs
    bool comparable = true;   // false when numbers must not be compared to the physical runs
    std::string goal_id;
    std::string goal_state;   // end-state description handed to the evaluator
    std::vector<GoalPredicate> goal;
    std::map<std::string, std::string> label_overrides;  // roster label -> replacement
};

/// Synonym data shared by grounding and the mock converter.
struct SynonymTable {
    std::vector<std::vector<std::string>> equivalent;            // phrase groups
    std::map<std::string, std::vector<std::string>> hypernyms;  // term -> member labels
};

/// The scenario/task registry: one structured, human-editable document.
class Registry {
public:
    static Registry from_json(const json& doc);
    static Registry load(const std::filesystem::path& path);

    const ScenarioSpec& scenario(const std::string& key) const;
    bool has_scenario(const std::string& key) const { return scenarios_.count(key) != 0; }
    const std::map<std::string, ScenarioSpec>& scenarios() const { return scenarios_; }

    const TaskSpec& task(const std::string& id) const;
    bool has_task(const std::string& id) const;
    /// Case- and whitespace-insensitive instruction lookup.
    const TaskSpec* find_by_instruction(const std::string& instruction) const;
    const TaskSpec* find_by_goal_state(const std::string& goal_state) const;
    const std::vector<TaskSpec>& tasks() const { return tasks_; }

    const std::map<char, LetterInfo>& letters() const { return letters_; }
    const SynonymTable& synonyms() const { return synonyms_; }
    const Workspace& workspace() const { return workspace_; }
    const SimConstants& constants() const { return constants_; }
    double pose_jitter() const { return pose_jitter_; }
    const json& raw() const { return raw_; }

private:
    std::map<std::string, ScenarioSpec> scenarios_;
    std::vector<TaskSpec> tasks_;
    std::map<char, LetterInfo> letters_;
    SynonymTable synonyms_;
    Workspace workspace_;
    SimConstants constants_;
    double pose_jitter_ = 0.01;
    json raw_;
};

/// Path of the registry shipped with the project (data/registry.json).
std::filesystem::path default_registry_path();

/// Process-wide registry loaded once from default_registry_path().
const Registry& default_registry();

}  // namespace tabletop::sim
