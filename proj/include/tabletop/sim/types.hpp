#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tabletop::sim {

enum class Category { fruit, snack, daily_item, tool, block, letter, container };
enum class Color { none, red, green, blue, yellow, orange, purple, pink, white, black, brown, gray, silver };
enum class Shape { cube, triangle, square, pentagon, hexagon, letter, irregular };

std::string_view to_string(Category c);
std::string_view to_string(Color c);
std::string_view to_string(Shape s);
Category category_from_string(std::string_view s);
Color color_from_string(std::string_view s);
Shape shape_from_string(std::string_view s);

/// Corner/side count implied by a geometric shape, or nullopt for shapes
/// without a fixed polygon (cube faces are squares, so it reports 4).
std::optional<int> polygon_count(Shape s);

/// Planar pose plus integer stacking level (0 = resting on the table or a container floor).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    int z = 0;

    bool operator==(const Pose&) const = default;
};

struct ObjectInstance {
    std::string id;
    std::string label;
    Category category = Category::block;
    Color color = Color::none;
    Shape shape = Shape::cube;
    int corner_count = 0;
    int side_count = 0;
    std::optional<char> letter;
    double footprint_radius = 0.03;
    double height = 0.04;
    Pose pose;
    std::optional<std::string> supported_by;
    std::optional<std::string> contained_in;
    bool graspable = true;  // derived, kept in sync by Scene::refresh_derived()

    double footprint_area() const;
    bool is_container() const { return category == Category::container; }

    bool operator==(const ObjectInstance&) const = default;
};

/// Capacity bookkeeping for a container object. The container also appears in
/// Scene::objects (category container) so it can be detected and rendered.
struct Container {
    std::string id;
    std::string label;
    Color color = Color::none;
    double capacity = 0.0;  // maximum summed footprint area of direct contents, m^2
    std::vector<std::string> contents;

    bool operator==(const Container&) const = default;
};

struct Workspace {
    double x_min = 0.15;
    double x_max = 0.45;
    double y_min = -0.30;
    double y_max = 0.30;

    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
    double clamp_x(double x) const { return x < x_min ? x_min : (x > x_max ? x_max : x); }
    double clamp_y(double y) const { return y < y_min ? y_min : (y > y_max ? y_max : y); }

    bool operator==(const Workspace&) const = default;
};

enum class SimEventKind { picked, placed, grasp_failed, displaced, rejected, warning };
std::string_view to_string(SimEventKind k);
SimEventKind sim_event_kind_from_string(std::string_view s);

struct SimEvent {
    SimEventKind kind = SimEventKind::picked;
    std::string subject;
    std::string target;                 // target id, "table", or empty
    std::optional<Pose> target_pose;
    uint64_t tick = 0;
    std::string detail;

    bool operator==(const SimEvent&) const = default;
};

/// Fixed behavioural constants of the simulator.
struct SimConstants {
    double support_ratio = 0.8;      // supporter radius must be >= ratio * held radius
    double grasp_jitter = 0.02;      // max pose perturbation on a failed grasp, m
    double clearance = 0.005;        // gap kept between footprints when searching free poses, m
    double free_pose_step = 0.01;    // grid step of the free-pose search, m

    bool operator==(const SimConstants&) const = default;
};

}  // namespace tabletop::sim
