#include "tabletop/sim/types.hpp"

#include <array>
#include <numbers>
#include <utility>

#include "tabletop/common/error.hpp"

namespace tabletop::sim {
namespace {

template <typename E, size_t N>
std::string_view lookup(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
    for (const auto& [e, name] : table) {
        if (e == v) return name;
    }
    return "?";
}

template <typename E, size_t N>
E parse(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s, const char* what) {
    for (const auto& [e, name] : table) {
        if (name == s) return e;
    }
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<Category, std::string_view>, 7> kCategories{{
    {Category::fruit, "fruit"},
    {Category::snack, "snack"},
    {Category::daily_item, "daily_item"},
    {Category::tool, "tool"},
    {Category::block, "block"},
    {Category::letter, "letter"},
    {Category::container, "container"},
}};

constexpr std::array<std::pair<Color, std::string_view>, 13> kColors{{
    {Color::none, "none"},
    {Color::red, "red"},
    {Color::green, "green"},
    {Color::blue, "blue"},
    {Color::yellow, "yellow"},
    {Color::orange, "orange"},
    {Color::purple, "purple"},
    {Color::pink, "pink"},
    {Color::white, "white"},
    {Color::black, "black"},
    {Color::brown, "brown"},
    {Color::gray, "gray"},
    {Color::silver, "silver"},
}};

constexpr std::array<std::pair<Shape, std::string_view>, 7> kShapes{{
    {Shape::cube, "cube"},
    {Shape::triangle, "triangle"},
    {Shape::square, "square"},
    {Shape::pentagon, "pentagon"},
    {Shape::hexagon, "hexagon"},
    {Shape::letter, "letter"},
    {Shape::irregular, "irregular"},
}};

constexpr std::array<std::pair<SimEventKind, std::string_view>, 6> kEventKinds{{
    {SimEventKind::picked, "picked"},
    {SimEventKind::placed, "placed"},
    {SimEventKind::grasp_failed, "grasp_failed"},
    {SimEventKind::displaced, "displaced"},
    {SimEventKind::rejected, "rejected"},
    {SimEventKind::warning, "warning"},
}};

}  // namespace

std::string_view to_string(Category c) { return lookup(kCategories, c); }
std::string_view to_string(Color c) { return lookup(kColors, c); }
std::string_view to_string(Shape s) { return lookup(kShapes, s); }
std::string_view to_string(SimEventKind k) { return lookup(kEventKinds, k); }

Category category_from_string(std::string_view s) { return parse(kCategories, s, "category"); }
Color color_from_string(std::string_view s) { return parse(kColors, s, "color"); }
Shape shape_from_string(std::string_view s) { return parse(kShapes, s, "shape"); }
SimEventKind sim_event_kind_from_string(std::string_view s) { return parse(kEventKinds, s, "event kind"); }

std::optional<int> polygon_count(Shape s) {
    switch (s) {
        case Shape::triangle: return 3;
        case Shape::square:
        case Shape::cube: return 4;
        case Shape::pentagon: return 5;
        case Shape::hexagon: return 6;
        default: return std::nullopt;
    }
}

double ObjectInstance::footprint_area() const {
    return std::numbers::pi * footprint_radius * footprint_radius;
}

}  // namespace tabletop::sim
