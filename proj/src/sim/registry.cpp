#include "tabletop/sim/registry.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>

#include "tabletop/common/error.hpp"

#ifndef TABLETOP_DATA_DIR
#define TABLETOP_DATA_DIR "data"
#endif

namespace tabletop::sim {
namespace {

std::string squash(const std::string& s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

std::vector<std::string> string_list(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return {};
    return it->get<std::vector<std::string>>();
}

Selector parse_selector(const json& j) {
    Selector s;
    if (j.contains("category")) s.category = category_from_string(j.at("category").get<std::string>());
    s.labels = string_list(j, "labels");
    s.exclude = string_list(j, "exclude");
    if (j.contains("symmetric")) s.symmetric = j.at("symmetric").get<bool>();
    if (j.contains("argmax")) {
        s.argmax = j.at("argmax").get<std::string>();
        if (*s.argmax != "sides" && *s.argmax != "corners") throw ConfigError("selector argmax must be sides|corners");
    }
    s.any_item = get_or(j, "any_item", false);
    return s;
}

PredicateType predicate_type(const std::string& s) {
    if (s == "all_in") return PredicateType::all_in;
    if (s == "none_in") return PredicateType::none_in;
    if (s == "on_container") return PredicateType::on_container;
    if (s == "stack") return PredicateType::stack;
    if (s == "color_match") return PredicateType::color_match;
    if (s == "split") return PredicateType::split;
    throw ConfigError("unknown predicate type '" + s + "'");
}

GoalPredicate parse_predicate(const json& j) {
    GoalPredicate p;
    p.type = predicate_type(j.at("type").get<std::string>());
    p.select = parse_selector(j.value("select", json::object()));
    p.container = get_or<std::string>(j, "container", "");
    p.containers = string_list(j, "containers");
    if (j.contains("order_by")) {
        p.order_by = j.at("order_by").get<std::string>();
        if (*p.order_by != "letter" && *p.order_by != "corners" && *p.order_by != "sides")
            throw ConfigError("stack order_by must be letter|corners|sides");
    }
    p.ascending = get_or<std::string>(j, "direction", "asc") != "desc";
    if (j.contains("base")) p.base = j.at("base").get<std::string>();
    p.match = get_or(j, "match", true);
    switch (p.type) {
        case PredicateType::all_in:
        case PredicateType::none_in:
        case PredicateType::on_container:
            if (p.container.empty()) throw ConfigError("predicate needs a container");
            break;
        case PredicateType::split:
            if (p.containers.size() < 2) throw ConfigError("split needs at least two containers");
            break;
        default: break;
    }
    return p;
}

TaskCategory task_category(const std::string& s) {
    static const std::map<std::string, TaskCategory> names{
        {"stacking", TaskCategory::stacking},         {"blocks_bowls", TaskCategory::blocks_bowls},
        {"fruit_placement", TaskCategory::fruit_placement}, {"snack_daily", TaskCategory::snack_daily},
        {"tool_packing", TaskCategory::tool_packing}, {"mixed", TaskCategory::mixed},
    };
    auto it = names.find(s);
    if (it == names.end()) throw ConfigError("unknown task category '" + s + "'");
    return it->second;
}

}  // namespace

std::string_view to_string(TaskCategory c) {
    switch (c) {
        case TaskCategory::stacking: return "stacking";
        case TaskCategory::blocks_bowls: return "blocks_bowls";
        case TaskCategory::fruit_placement: return "fruit_placement";
        case TaskCategory::snack_daily: return "snack_daily";
        case TaskCategory::tool_packing: return "tool_packing";
        case TaskCategory::mixed: return "mixed";
    }
    return "?";
}

std::string_view display_name(TaskCategory c) {
    switch (c) {
        case TaskCategory::stacking: return "Stacking";
        case TaskCategory::blocks_bowls: return "Blocks and Bowls";
        case TaskCategory::fruit_placement: return "Fruit Placement";
        case TaskCategory::snack_daily: return "Snack and Daily Item";
        case TaskCategory::tool_packing: return "Tool Packing";
        case TaskCategory::mixed: return "Mixed Category";
    }
    return "?";
}

Registry Registry::from_json(const json& doc) {
    Registry r;
    r.raw_ = doc;
    try {
        if (doc.contains("workspace")) {
            const auto& w = doc.at("workspace");
            r.workspace_ = Workspace{w.at("x_min").get<double>(), w.at("x_max").get<double>(), w.at("y_min").get<double>(),
                                     w.at("y_max").get<double>()};
        }
        if (doc.contains("physics")) {
            const auto& p = doc.at("physics");
            r.constants_.support_ratio = get_or(p, "support_ratio", r.constants_.support_ratio);
            r.constants_.grasp_jitter = get_or(p, "grasp_jitter", r.constants_.grasp_jitter);
            r.constants_.clearance = get_or(p, "clearance", r.constants_.clearance);
            r.constants_.free_pose_step = get_or(p, "free_pose_step", r.constants_.free_pose_step);
        }
        r.pose_jitter_ = get_or(doc, "pose_jitter", r.pose_jitter_);

        const auto letters = doc.value("letters", json::object());
        for (const auto& [key, info] : letters.items()) {
            if (key.size() != 1) throw ConfigError("letter key must be one character: " + key);
            r.letters_[key[0]] = LetterInfo{info.at("corners").get<int>(), info.at("symmetric").get<bool>()};
        }

        const auto syn = doc.value("synonyms", json::object());
        const auto groups = syn.value("equivalent", json::array());
        const auto hypernyms = syn.value("hypernyms", json::object());
        for (const auto& group : groups) {
            r.synonyms_.equivalent.push_back(group.get<std::vector<std::string>>());
        }
        for (const auto& [term, members] : hypernyms.items()) {
            r.synonyms_.hypernyms[term] = members.get<std::vector<std::string>>();
        }

        for (const auto& [key, sj] : doc.at("scenarios").items()) {
            ScenarioSpec spec;
            spec.key = key;
            spec.title = get_or<std::string>(sj, "title", "");
            std::set<std::string> ids;
            for (const auto& oj : sj.at("objects")) {
                RosterEntry e;
                e.id = oj.at("id").get<std::string>();
                if (!ids.insert(e.id).second) throw ConfigError("scenario " + key + ": duplicate id " + e.id);
                e.label = oj.at("label").get<std::string>();
                e.category = category_from_string(oj.at("category").get<std::string>());
                e.color = color_from_string(get_or<std::string>(oj, "color", "none"));
                e.shape = shape_from_string(get_or<std::string>(oj, "shape", "irregular"));
                if (oj.contains("letter")) {
                    auto l = oj.at("letter").get<std::string>();
                    if (l.size() != 1) throw ConfigError("letter must be one character");
                    e.letter = l[0];
                }
                if (oj.contains("corners")) e.corners = oj.at("corners").get<int>();
                if (oj.contains("sides")) e.sides = oj.at("sides").get<int>();
                e.radius = oj.at("radius").get<double>();
                e.height = oj.at("height").get<double>();
                e.x = oj.at("x").get<double>();
                e.y = oj.at("y").get<double>();
                e.capacity = get_or(oj, "capacity", 0.0);
                if (e.radius <= 0 || e.height <= 0) throw ConfigError("non-positive object size: " + e.id);
                if (e.category == Category::container && e.capacity <= 0) throw ConfigError("container without capacity: " + e.id);
                spec.roster.push_back(std::move(e));
            }
            r.scenarios_.emplace(key, std::move(spec));
        }

        std::set<std::string> task_ids;
        for (const auto& tj : doc.at("tasks")) {
            TaskSpec t;
            t.id = tj.at("id").get<std::string>();
            if (!task_ids.insert(t.id).second) throw ConfigError("duplicate task id " + t.id);
            t.scene = tj.at("scene").get<std::string>();
            if (!r.scenarios_.count(t.scene)) throw ConfigError("task " + t.id + " references unknown scene " + t.scene);
            t.instruction = tj.at("instruction").get<std::string>();
            t.category = task_category(tj.at("category").get<std::string>());
            t.prompted = get_or(tj, "prompted", false);
            t.simulation = get_or(tj, "simulation", true);
            t.comparable = get_or(tj, "comparable", true);
            t.goal_id = get_or<std::string>(tj, "goal_id", t.id);
            t.goal_state = tj.at("goal_state").get<std::string>();
            for (const auto& pj : tj.at("goal")) t.goal.push_back(parse_predicate(pj));
            if (t.goal.empty()) throw ConfigError("task " + t.id + " has no goal predicates");
            const auto overrides = tj.value("label_overrides", json::object());
            for (const auto& [from, to] : overrides.items()) {
                t.label_overrides[from] = to.get<std::string>();
            }
            r.tasks_.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("registry: ") + e.what());
    }
    return r;
}

Registry Registry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open registry " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("registry " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

const ScenarioSpec& Registry::scenario(const std::string& key) const {
    auto it = scenarios_.find(key);
    if (it == scenarios_.end()) throw NotFoundError("unknown scenario '" + key + "'");
    return it->second;
}

const TaskSpec& Registry::task(const std::string& id) const {
    for (const auto& t : tasks_) {
        if (t.id == id) return t;
    }
    throw NotFoundError("unknown task '" + id + "'");
}

bool Registry::has_task(const std::string& id) const {
    return std::any_of(tasks_.begin(), tasks_.end(), [&](const TaskSpec& t) { return t.id == id; });
}

const TaskSpec* Registry::find_by_instruction(const std::string& instruction) const {
    auto want = squash(instruction);
    for (const auto& t : tasks_) {
        if (squash(t.instruction) == want) return &t;
    }
    return nullptr;
}

const TaskSpec* Registry::find_by_goal_state(const std::string& goal_state) const {
    auto want = squash(goal_state);
    for (const auto& t : tasks_) {
        if (squash(t.goal_state) == want) return &t;
    }
    return nullptr;
}

std::filesystem::path default_registry_path() {
    if (const char* dir = std::getenv("TABLETOP_DATA_DIR"); dir && *dir) {
        return std::filesystem::path(dir) / "registry.json";
    }
    return std::filesystem::path(TABLETOP_DATA_DIR) / "registry.json";
}

const Registry& default_registry() {
    static const Registry registry = Registry::load(default_registry_path());
    return registry;
}

}  // namespace tabletop::sim
